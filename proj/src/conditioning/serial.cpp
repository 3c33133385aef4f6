#include "conditioning/serial.hpp"

#include <cstdio>

#include "core/errors.hpp"
#include "core/image_io.hpp"

namespace linecolor::conditioning {

namespace fs = std::filesystem;
using nlohmann::json;

nlohmann::json match_set_to_json(const MatchSet& m) {
    json out;
    auto& list = out["matches"] = json::array();
    for (const Match& match : m.matches)
        list.push_back(json{{"ref", json::array({match.ref_point[0], match.ref_point[1]})},
                            {"frame", json::array({match.frame_point[0], match.frame_point[1]})},
                            {"label", match.label}});
    return out;
}

MatchSet match_set_from_json(const nlohmann::json& j) {
    MatchSet out;
    try {
        for (const json& item : j.at("matches")) {
            Match m;
            m.ref_point = {item.at("ref")[0].get<int>(), item.at("ref")[1].get<int>()};
            m.frame_point = {item.at("frame")[0].get<int>(), item.at("frame")[1].get<int>()};
            m.label = item.at("label").get<int>();
            out.matches.push_back(m);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("match set json: ") + e.what());
    }
    return out;
}

nlohmann::json trajectory_set_to_json(const TrajectorySet& t) {
    json out;
    auto& list = out["tracks"] = json::array();
    for (const Track& tr : t.tracks) {
        json pos = json::array();
        for (const auto& p : tr.pos) pos.push_back(json::array({p[0], p[1]}));
        list.push_back(json{{"label", tr.label}, {"pos", pos}, {"valid", tr.valid}});
    }
    return out;
}

TrajectorySet trajectory_set_from_json(const nlohmann::json& j) {
    TrajectorySet out;
    try {
        for (const json& item : j.at("tracks")) {
            Track tr;
            tr.label = item.at("label").get<int>();
            for (const json& p : item.at("pos")) tr.pos.push_back({p[0].get<double>(), p[1].get<double>()});
            tr.valid = item.at("valid").get<std::vector<std::uint8_t>>();
            if (tr.valid.size() != tr.pos.size())
                throw DataError("trajectory json: track " + std::to_string(tr.label) + " pos/valid length mismatch");
            out.tracks.push_back(std::move(tr));
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("trajectory json: ") + e.what());
    }
    for (const Track& tr : out.tracks)
        if (tr.pos.size() != out.tracks[0].pos.size())
            throw DataError("trajectory json: tracks disagree on frame count");
    return out;
}

namespace {
std::string side_name(const char* side, int t) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "pointmap_%s_%04d.png", side, t);
    return buf;
}
}  // namespace

void save_point_map_sequence(const PointMapSequence& seq, const fs::path& dir) {
    fs::create_directories(dir);
    for (int t = 0; t < seq.t(); ++t) {
        save_gray16((dir / side_name("ref", t)).string(), seq.frames[t].ref_map);
        save_gray16((dir / side_name("frame", t)).string(), seq.frames[t].frame_map);
    }
}

PointMapSequence load_point_map_sequence(const fs::path& dir) {
    PointMapSequence out;
    for (int t = 0;; ++t) {
        fs::path ref_path = dir / side_name("ref", t);
        fs::path frame_path = dir / side_name("frame", t);
        if (!fs::exists(ref_path)) {
            if (t == 0) throw DataError("load_point_map_sequence: no point map frames in " + dir.string());
            if (fs::exists(frame_path))
                throw DataError("load_point_map_sequence: frame-side map without ref-side at t=" + std::to_string(t));
            break;
        }
        if (!fs::exists(frame_path))
            throw DataError("load_point_map_sequence: ref-side map without frame-side at t=" + std::to_string(t));
        PointMapPair pair;
        pair.ref_map = load_gray16(ref_path.string());
        pair.frame_map = load_gray16(frame_path.string());
        out.frames.push_back(std::move(pair));
    }
    return out;
}

}  // namespace linecolor::conditioning
