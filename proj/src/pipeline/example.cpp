#include "pipeline/example.hpp"

#include <utility>

#include "core/blob_io.hpp"
#include "core/errors.hpp"
#include "correspond/correspond.hpp"
#include "synthgen/lineart.hpp"

namespace linecolor::pipeline {

namespace {
constexpr const char* kExampleFormat = "lineflow.example.v1";
constexpr std::uint8_t kNeutralPaper = 255;
}  // namespace

Tensor frames_to_z(const std::vector<Image>& frames, int t_count) {
    if (t_count < 1 || t_count > static_cast<int>(frames.size()))
        throw DataError("frames_to_z: requested " + std::to_string(t_count) + " frames, have " +
                        std::to_string(frames.size()));
    const Image& first = frames[0];
    Tensor out(t_count, 3, first.h, first.w);
    for (int t = 0; t < t_count; ++t) {
        const Image& f = frames[static_cast<size_t>(t)];
        if (f.h != first.h || f.w != first.w) throw DataError("frames_to_z: frame sizes differ");
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < f.h; ++y)
                for (int x = 0; x < f.w; ++x) out.at(t, c, y, x) = 2.0 * f.at(y, x, c) - 1.0;
    }
    return out;
}

Tensor reference_to_z(const Image& reference) {
    if (reference.h < 1 || reference.w < 1) throw DataError("reference_to_z: empty reference");
    Tensor out(1, 3, reference.h, reference.w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < reference.h; ++y)
            for (int x = 0; x < reference.w; ++x)
                out.at(0, c, y, x) = 2.0 * reference.at(y, x, c) - 1.0;
    return out;
}

std::vector<Image> tensor_to_video(const Tensor& video) {
    if (video.c != 3) throw DataError("tensor_to_video: expected 3 channels, got " + video.shape_str());
    std::vector<Image> out;
    out.reserve(static_cast<size_t>(video.t));
    for (int t = 0; t < video.t; ++t) {
        Image img(video.h, video.w);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < video.h; ++y)
                for (int x = 0; x < video.w; ++x) img.at(y, x, c) = video.at(t, c, y, x);
        out.push_back(std::move(img));
    }
    return out;
}

Tensor assemble_controls(Stage stage, const std::vector<Sketch>& sketches,
                         const conditioning::EncodedPointMaps& point_maps,
                         const conditioning::HeatmapSequence* heatmaps, const Image& reference) {
    if (sketches.empty()) throw DataError("assemble_controls: no sketch frames");
    const int t_frames = static_cast<int>(sketches.size());
    const int h = sketches[0].h, w = sketches[0].w;
    if (reference.h != h || reference.w != w)
        throw DataError("assemble_controls: reference size differs from sketches");
    if (point_maps.t != t_frames || point_maps.h != h || point_maps.w != w)
        throw DataError("assemble_controls: point-map dims differ from sketches");
    if ((stage == Stage::sparse) != (heatmaps != nullptr))
        throw DataError("assemble_controls: heatmaps required exactly for the sparse stage");
    if (heatmaps && heatmaps->t() != t_frames)
        throw DataError("assemble_controls: heatmap frame count differs");

    const int channels = (stage == Stage::dense) ? kDenseControlChannels : kSparseControlChannels;
    const int ref_base = (stage == Stage::dense) ? 3 : kHeatmapChannelIndex + 1;
    Tensor ctrl(t_frames, channels, h, w);
    for (int t = 0; t < t_frames; ++t) {
        const Sketch& sk = sketches[static_cast<size_t>(t)];
        if (sk.h != h || sk.w != w) throw DataError("assemble_controls: sketch sizes differ");
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                ctrl.at(t, 0, y, x) = sk.at(y, x) / 255.0;
                ctrl.at(t, 1, y, x) = point_maps.at(0, t, y, x);
                ctrl.at(t, 2, y, x) = point_maps.at(1, t, y, x);
                if (stage == Stage::sparse)
                    ctrl.at(t, kHeatmapChannelIndex, y, x) =
                        heatmaps->frames[static_cast<size_t>(t)].at(y, x);
                for (int c = 0; c < 3; ++c) ctrl.at(t, ref_base + c, y, x) = reference.at(y, x, c);
            }
    }
    return ctrl;
}

Tensor ConditionedExample::control_tensor() const {
    return assemble_controls(stage, sketches, point_maps,
                             stage == Stage::sparse ? &heatmaps : nullptr, reference.pixels);
}

std::optional<ConditionedExample> make_example(const synthgen::SyntheticClip& clip,
                                               const TrainConfig& cfg, Rng& rng, Report* report) {
    const int t_frames = cfg.clip_length;
    if (static_cast<int>(clip.frames.size()) < t_frames)
        throw DataError("make_example: clip holds " + std::to_string(clip.frames.size()) +
                        " frames, config needs " + std::to_string(t_frames));
    const int h = clip.config.h, w = clip.config.w;

    ConditionedExample ex;
    ex.stage = cfg.stage;
    ex.t_frames = t_frames;
    ex.h = h;
    ex.w = w;
    ex.clip_seed = clip.seed;

    // Fixed rng order: the augmentation draw always comes first.
    ex.reference = conditioning::augment_background(clip.reference, cfg.background_augment_p, rng);

    auto extract = [&](int t) {
        Sketch s = synthgen::extract_lineart(clip.frames[static_cast<size_t>(t)],
                                             &clip.outlines[static_cast<size_t>(t)],
                                             cfg.sketch_mode, cfg.leak_strength);
        return cfg.binarize ? conditioning::binarize(s) : s;
    };
    if (cfg.stage == Stage::dense) {
        ex.sketches.reserve(static_cast<size_t>(t_frames));
        for (int t = 0; t < t_frames; ++t) ex.sketches.push_back(extract(t));
        ex.sketch_present.assign(static_cast<size_t>(t_frames), 1);
    } else {
        ex.sketches.assign(static_cast<size_t>(t_frames), Sketch(h, w, kNeutralPaper));
        ex.sketches.front() = extract(0);
        ex.sketches.back() = extract(t_frames - 1);
        ex.sketch_present.assign(static_cast<size_t>(t_frames), 0);
        ex.sketch_present.front() = 1;
        ex.sketch_present.back() = 1;
    }

    // Ground-truth first-frame matches, uncapped; subsampling happens below so
    // the draw is random rather than first-N in scan order.
    correspond::MatcherSpec all_spec;
    all_spec.backend = correspond::MatcherBackend::oracle;
    all_spec.max_keypoints = 1 << 30;
    conditioning::MatchSet m0 =
        correspond::match_reference(clip.reference, ex.sketches[0], &clip.registry, all_spec, 0, report);
    if (m0.n() == 0) {
        report_note(report, "clip seed " + std::to_string(clip.seed) +
                                ": no matched keypoints, example skipped");
        return std::nullopt;
    }

    conditioning::TrajectorySet full =
        correspond::track_points(clip, m0, correspond::TrackerBackend::oracle, nullptr, report);
    for (auto& tr : full.tracks) {
        tr.pos.resize(static_cast<size_t>(t_frames));
        tr.valid.resize(static_cast<size_t>(t_frames));
    }

    const auto mode = (cfg.stage == Stage::dense) ? conditioning::SampleMode::uniform
                                                  : conditioning::SampleMode::motion_weighted;
    conditioning::SampledKeypoints sampled =
        conditioning::sample_keypoints(m0, full, cfg.max_keypoints, mode, rng);
    ex.matches = std::move(sampled.matches);
    ex.tracks = std::move(sampled.tracks);

    conditioning::PointMapSequence pm_seq =
        conditioning::build_point_map_sequence(ex.matches, ex.tracks, h, w, report);
    ex.point_maps = conditioning::encode_labels(pm_seq, ex.matches.n());
    if (cfg.zero_point_maps)
        std::fill(ex.point_maps.v.begin(), ex.point_maps.v.end(), 0.0);

    if (cfg.stage == Stage::sparse)
        ex.heatmaps = conditioning::build_heatmaps(ex.tracks, cfg.heatmap_sigma, h, w);
    ex.heatmaps.sigma = cfg.heatmap_sigma;

    ex.z0 = frames_to_z(clip.frames, t_frames);
    return ex;
}

void save_example(const ConditionedExample& ex, const std::string& path) {
    BlobFile bf;
    bf.meta["format"] = kExampleFormat;
    bf.meta["stage"] = to_string(ex.stage);
    bf.meta["t"] = ex.t_frames;
    bf.meta["h"] = ex.h;
    bf.meta["w"] = ex.w;
    bf.meta["clip_seed"] = ex.clip_seed;
    bf.meta["sketch_present"] = ex.sketch_present;
    bf.meta["has_background"] = ex.reference.has_background;
    bf.meta["heatmap_sigma"] = ex.heatmaps.sigma;
    nlohmann::json jm = nlohmann::json::array();
    for (const auto& m : ex.matches.matches)
        jm.push_back({{"ref", {m.ref_point[0], m.ref_point[1]}},
                      {"frame", {m.frame_point[0], m.frame_point[1]}},
                      {"label", m.label}});
    bf.meta["matches"] = jm;
    nlohmann::json jt = nlohmann::json::array();
    for (const auto& tr : ex.tracks.tracks) {
        nlohmann::json pos = nlohmann::json::array();
        for (const auto& p : tr.pos) pos.push_back({p[0], p[1]});
        jt.push_back({{"label", tr.label}, {"pos", pos}, {"valid", tr.valid}});
    }
    bf.meta["tracks"] = jt;

    bf.put("z0", {ex.z0.t, ex.z0.c, ex.z0.h, ex.z0.w}, ex.z0.v);
    bf.put("ref_pixels", {1, 3, ex.h, ex.w}, ex.reference.pixels.rgb);
    {
        std::vector<double> mask(ex.reference.fg_mask.v.begin(), ex.reference.fg_mask.v.end());
        bf.put("ref_mask", {1, 1, ex.h, ex.w}, std::move(mask));
    }
    {
        std::vector<double> sk;
        sk.reserve(static_cast<size_t>(ex.t_frames) * ex.h * ex.w);
        for (const auto& s : ex.sketches) sk.insert(sk.end(), s.v.begin(), s.v.end());
        bf.put("sketches", {ex.t_frames, 1, ex.h, ex.w}, std::move(sk));
    }
    bf.put("point_maps", {2, ex.point_maps.t, ex.point_maps.h, ex.point_maps.w}, ex.point_maps.v);
    if (ex.stage == Stage::sparse) {
        std::vector<double> hm;
        hm.reserve(static_cast<size_t>(ex.t_frames) * ex.h * ex.w);
        for (const auto& f : ex.heatmaps.frames) hm.insert(hm.end(), f.v.begin(), f.v.end());
        bf.put("heatmaps", {ex.t_frames, 1, ex.h, ex.w}, std::move(hm));
    }
    bf.save(path);
}

ConditionedExample load_example(const std::string& path) {
    BlobFile bf = BlobFile::load(path);
    if (!bf.meta.contains("format") || bf.meta.at("format") != kExampleFormat)
        throw DataError("load_example: '" + path + "' is not a conditioned-example file");
    ConditionedExample ex;
    try {
        ex.stage = parse_stage(bf.meta.at("stage").get<std::string>());
        ex.t_frames = bf.meta.at("t").get<int>();
        ex.h = bf.meta.at("h").get<int>();
        ex.w = bf.meta.at("w").get<int>();
        ex.clip_seed = bf.meta.at("clip_seed").get<std::uint64_t>();
        ex.sketch_present = bf.meta.at("sketch_present").get<std::vector<std::uint8_t>>();
        ex.reference.has_background = bf.meta.at("has_background").get<bool>();
        ex.heatmaps.sigma = bf.meta.at("heatmap_sigma").get<double>();
        for (const auto& m : bf.meta.at("matches")) {
            conditioning::Match match;
            match.ref_point = {m.at("ref")[0].get<int>(), m.at("ref")[1].get<int>()};
            match.frame_point = {m.at("frame")[0].get<int>(), m.at("frame")[1].get<int>()};
            match.label = m.at("label").get<int>();
            ex.matches.matches.push_back(match);
        }
        for (const auto& t : bf.meta.at("tracks")) {
            conditioning::Track tr;
            tr.label = t.at("label").get<int>();
            for (const auto& p : t.at("pos")) tr.pos.push_back({p[0].get<double>(), p[1].get<double>()});
            tr.valid = t.at("valid").get<std::vector<std::uint8_t>>();
            ex.tracks.tracks.push_back(std::move(tr));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("load_example: malformed metadata: ") + e.what());
    }

    auto expect_shape = [&](const char* name, const std::vector<int>& want) {
        const BlobEntry& e = bf.get(name);
        if (e.shape != want)
            throw DataError(std::string("load_example: blob '") + name + "' has unexpected shape");
        return e;
    };
    const BlobEntry& z0 = expect_shape("z0", {ex.t_frames, 3, ex.h, ex.w});
    ex.z0 = Tensor(ex.t_frames, 3, ex.h, ex.w);
    ex.z0.v = z0.data;
    const BlobEntry& rp = expect_shape("ref_pixels", {1, 3, ex.h, ex.w});
    ex.reference.pixels = Image(ex.h, ex.w);
    ex.reference.pixels.rgb = rp.data;
    const BlobEntry& rm = expect_shape("ref_mask", {1, 1, ex.h, ex.w});
    ex.reference.fg_mask = Mask(ex.h, ex.w);
    for (size_t i = 0; i < rm.data.size(); ++i)
        ex.reference.fg_mask.v[i] = static_cast<std::uint8_t>(rm.data[i]);
    const BlobEntry& sk = expect_shape("sketches", {ex.t_frames, 1, ex.h, ex.w});
    for (int t = 0; t < ex.t_frames; ++t) {
        Sketch s(ex.h, ex.w);
        const size_t base = static_cast<size_t>(t) * ex.h * ex.w;
        for (size_t i = 0; i < s.v.size(); ++i) s.v[i] = static_cast<std::uint8_t>(sk.data[base + i]);
        ex.sketches.push_back(std::move(s));
    }
    const BlobEntry& pm = expect_shape("point_maps", {2, ex.t_frames, ex.h, ex.w});
    ex.point_maps.t = ex.t_frames;
    ex.point_maps.h = ex.h;
    ex.point_maps.w = ex.w;
    ex.point_maps.v = pm.data;
    if (ex.stage == Stage::sparse) {
        const BlobEntry& hm = expect_shape("heatmaps", {ex.t_frames, 1, ex.h, ex.w});
        for (int t = 0; t < ex.t_frames; ++t) {
            GridF g(ex.h, ex.w);
            const size_t base = static_cast<size_t>(t) * ex.h * ex.w;
            for (size_t i = 0; i < g.v.size(); ++i) g.v[i] = hm.data[base + i];
            ex.heatmaps.frames.push_back(std::move(g));
        }
    }
    return ex;
}

}  // namespace linecolor::pipeline
