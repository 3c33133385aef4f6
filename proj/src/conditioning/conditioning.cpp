#include "conditioning/conditioning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "core/errors.hpp"

namespace linecolor::conditioning {

void MatchSet::validate(int h, int w) const {
    std::set<std::array<int, 2>> ref_seen, frame_seen;
    std::set<int> labels;
    for (const Match& m : matches) {
        if (m.ref_point[0] < 0 || m.ref_point[0] >= w || m.ref_point[1] < 0 || m.ref_point[1] >= h)
            throw DataError("match label " + std::to_string(m.label) + ": reference point out of bounds");
        if (m.frame_point[0] < 0 || m.frame_point[0] >= w || m.frame_point[1] < 0 || m.frame_point[1] >= h)
            throw DataError("match label " + std::to_string(m.label) + ": frame point out of bounds");
        if (!ref_seen.insert(m.ref_point).second)
            throw DataError("match label " + std::to_string(m.label) + ": duplicate reference pixel");
        if (!frame_seen.insert(m.frame_point).second)
            throw DataError("match label " + std::to_string(m.label) + ": duplicate frame pixel");
        labels.insert(m.label);
    }
    if (static_cast<int>(labels.size()) != n() || (n() > 0 && (*labels.begin() != 1 || *labels.rbegin() != n())))
        throw DataError("match labels must be exactly 1.." + std::to_string(n()) + " with no gaps");
}

Sketch binarize(const Sketch& sketch, int threshold) {
    Sketch out(sketch.h, sketch.w);
    for (size_t i = 0; i < sketch.v.size(); ++i) out.v[i] = sketch.v[i] > threshold ? 255 : 0;
    return out;
}

synthgen::ReferenceImage augment_background(const synthgen::ReferenceImage& ref, double p, Rng& rng) {
    bool remove = rng.uniform() < p;
    if (!remove) return ref;
    synthgen::ReferenceImage out = ref;
    for (int y = 0; y < out.pixels.h; ++y)
        for (int x = 0; x < out.pixels.w; ++x)
            if (out.fg_mask.at(y, x) == 0) out.pixels.set(y, x, {1.0, 1.0, 1.0});
    out.has_background = false;
    return out;
}

PointMapPair build_point_map_pair(const MatchSet& matches, int h, int w) {
    matches.validate(h, w);
    PointMapPair out;
    out.ref_map = LabelMap(h, w, 0);
    out.frame_map = LabelMap(h, w, 0);
    for (const Match& m : matches.matches) {
        out.ref_map.at(m.ref_point[1], m.ref_point[0]) = m.label;
        out.frame_map.at(m.frame_point[1], m.frame_point[0]) = m.label;
    }
    return out;
}

PointMapSequence build_point_map_sequence(const MatchSet& matches, const TrajectorySet& tracks, int h, int w,
                                          Report* report) {
    matches.validate(h, w);
    std::set<int> match_labels, track_labels;
    for (const Match& m : matches.matches) match_labels.insert(m.label);
    for (const Track& tr : tracks.tracks) track_labels.insert(tr.label);
    if (match_labels != track_labels) throw DataError("point map sequence: match and track labels disagree");
    if (static_cast<int>(tracks.tracks.size()) != matches.n())
        throw DataError("point map sequence: match and track labels disagree");

    LabelMap ref_map(h, w, 0);
    for (const Match& m : matches.matches) ref_map.at(m.ref_point[1], m.ref_point[0]) = m.label;

    std::vector<const Track*> by_label(matches.n() + 1, nullptr);
    for (const Track& tr : tracks.tracks) by_label[tr.label] = &tr;

    int t_frames = tracks.t();
    PointMapSequence out;
    for (int t = 0; t < t_frames; ++t) {
        PointMapPair pair;
        pair.ref_map = ref_map;
        pair.frame_map = LabelMap(h, w, 0);
        // ascending label order makes "lowest label wins" the natural outcome
        for (int label = 1; label <= matches.n(); ++label) {
            const Track& tr = *by_label[label];
            if (!tr.valid[t]) continue;
            int x = round_half_up(tr.pos[t][0]);
            int y = round_half_up(tr.pos[t][1]);
            if (x < 0 || x >= w || y < 0 || y >= h) continue;  // defensive; validity should cover this
            std::int32_t& cell = pair.frame_map.at(y, x);
            if (cell != 0) {
                report_note(report, "frame " + std::to_string(t) + ": label " + std::to_string(label) +
                                        " collided with label " + std::to_string(cell) + " at (" + std::to_string(x) +
                                        "," + std::to_string(y) + "), dropped");
                continue;
            }
            cell = label;
        }
        out.frames.push_back(std::move(pair));
    }
    return out;
}

TrajectorySet interpolate_trajectories(const MatchSet& start, const MatchSet& end, int t_frames, MatchSet* joined,
                                       Report* report) {
    if (t_frames < 2) throw ConfigError("interpolate_trajectories: need at least 2 frames");

    std::map<std::array<int, 2>, const Match*> end_by_ref;
    for (const Match& m : end.matches) end_by_ref[m.ref_point] = &m;

    std::vector<const Match*> start_sorted;
    for (const Match& m : start.matches) start_sorted.push_back(&m);
    std::sort(start_sorted.begin(), start_sorted.end(),
              [](const Match* a, const Match* b) { return a->label < b->label; });

    TrajectorySet out;
    if (joined) joined->matches.clear();
    int next_label = 1;
    for (const Match* sm : start_sorted) {
        auto it = end_by_ref.find(sm->ref_point);
        if (it == end_by_ref.end()) {
            report_note(report, "start label " + std::to_string(sm->label) + " has no end-frame partner, dropped");
            continue;
        }
        const Match* em = it->second;
        Track tr;
        tr.label = next_label;
        for (int t = 0; t < t_frames; ++t) {
            double a = static_cast<double>(t) / (t_frames - 1);
            double x = sm->frame_point[0] + a * (em->frame_point[0] - sm->frame_point[0]);
            double y = sm->frame_point[1] + a * (em->frame_point[1] - sm->frame_point[1]);
            tr.pos.push_back({x, y});
            tr.valid.push_back(1);  // endpoints are in-canvas and the path is convex
        }
        out.tracks.push_back(std::move(tr));
        if (joined) joined->matches.push_back(Match{sm->ref_point, sm->frame_point, next_label});
        ++next_label;
    }
    for (const Match& m : end.matches) {
        bool used = false;
        for (const Match* sm : start_sorted)
            if (sm->ref_point == m.ref_point) { used = true; break; }
        if (!used) report_note(report, "end label " + std::to_string(m.label) + " has no start-frame partner, dropped");
    }
    return out;
}

HeatmapSequence build_heatmaps(const TrajectorySet& tracks, double sigma, int h, int w) {
    if (sigma <= 0) throw ConfigError("build_heatmaps: sigma must be positive");
    HeatmapSequence out;
    out.sigma = sigma;
    int t_frames = tracks.t();
    double inv = 1.0 / (2.0 * sigma * sigma);
    for (int t = 0; t < t_frames; ++t) {
        GridF g(h, w, 0.0);
        for (const Track& tr : tracks.tracks) {
            if (!tr.valid[t]) continue;
            double cx = round_half_up(tr.pos[t][0]);
            double cy = round_half_up(tr.pos[t][1]);
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                    g.at(y, x) = std::max(g.at(y, x), std::exp(-d2 * inv));
                }
            }
        }
        out.frames.push_back(std::move(g));
    }
    return out;
}

SampledKeypoints sample_keypoints(const MatchSet& matches, const TrajectorySet& tracks, int max_n, SampleMode mode,
                                  Rng& rng) {
    if (max_n < 1) throw ConfigError("sample_keypoints: max_n must be >= 1");
    std::set<int> match_labels, track_labels;
    for (const Match& m : matches.matches) match_labels.insert(m.label);
    for (const Track& tr : tracks.tracks) track_labels.insert(tr.label);
    if (match_labels != track_labels) throw DataError("sample_keypoints: match and track labels disagree");

    std::vector<const Match*> match_by_label(matches.n() + 1, nullptr);
    std::vector<const Track*> track_by_label(matches.n() + 1, nullptr);
    for (const Match& m : matches.matches) match_by_label[m.label] = &m;
    for (const Track& tr : tracks.tracks) track_by_label[tr.label] = &tr;

    std::vector<int> remaining;
    std::vector<double> weight;
    double total = 0.0;
    for (int label = 1; label <= matches.n(); ++label) {
        double arc = 0.0;
        const Track& tr = *track_by_label[label];
        for (size_t t = 0; t + 1 < tr.pos.size(); ++t) {
            double dx = tr.pos[t + 1][0] - tr.pos[t][0];
            double dy = tr.pos[t + 1][1] - tr.pos[t][1];
            arc += std::sqrt(dx * dx + dy * dy);
        }
        remaining.push_back(label);
        weight.push_back(mode == SampleMode::motion_weighted ? arc : 1.0);
        total += weight.back();
    }
    if (mode == SampleMode::motion_weighted && total == 0.0) {
        std::fill(weight.begin(), weight.end(), 1.0);  // every track static: fall back to uniform
        total = static_cast<double>(weight.size());
    }

    SampledKeypoints out;
    int m_out = std::min<int>(max_n, matches.n());
    for (int k = 0; k < m_out; ++k) {
        double r = rng.uniform() * total;
        size_t pick = remaining.size() - 1;
        double acc = 0.0;
        for (size_t i = 0; i < remaining.size(); ++i) {
            acc += weight[i];
            if (r < acc) { pick = i; break; }
        }
        int label = remaining[pick];
        Match m = *match_by_label[label];
        Track tr = *track_by_label[label];
        m.label = k + 1;
        tr.label = k + 1;
        out.matches.matches.push_back(m);
        out.tracks.tracks.push_back(std::move(tr));

        total -= weight[pick];
        remaining.erase(remaining.begin() + pick);
        weight.erase(weight.begin() + pick);
        if (total <= 0.0 && !remaining.empty()) {
            std::fill(weight.begin(), weight.end(), 1.0);  // leftover mass all static
            total = static_cast<double>(weight.size());
        }
    }
    return out;
}

EncodedPointMaps encode_labels(const PointMapSequence& maps, int max_label) {
    if (max_label < 1) throw ConfigError("encode_labels: max_label must be >= 1");
    EncodedPointMaps out;
    out.t = maps.t();
    if (out.t == 0) return out;
    out.h = maps.frames[0].ref_map.h;
    out.w = maps.frames[0].ref_map.w;
    out.v.assign(static_cast<size_t>(2) * out.t * out.h * out.w, 0.0);
    for (int t = 0; t < out.t; ++t) {
        const PointMapPair& pair = maps.frames[t];
        for (int y = 0; y < out.h; ++y) {
            for (int x = 0; x < out.w; ++x) {
                for (int plane = 0; plane < 2; ++plane) {
                    std::int32_t label = (plane == 0 ? pair.ref_map : pair.frame_map).at(y, x);
                    if (label == 0) continue;
                    if (label > max_label)
                        throw DataError("encode_labels: label " + std::to_string(label) + " exceeds max_label " +
                                        std::to_string(max_label));
                    out.at(plane, t, y, x) = static_cast<double>(label) / max_label;
                }
            }
        }
    }
    return out;
}

}  // namespace linecolor::conditioning
