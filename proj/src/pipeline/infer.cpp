#include "pipeline/infer.hpp"

#include <cmath>
#include <utility>

#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "diffusion/schedule.hpp"
#include "pipeline/example.hpp"

namespace linecolor::pipeline {

void InferConfig::validate() const {
    if (!(heatmap_sigma > 0.0) || !std::isfinite(heatmap_sigma))
        throw ConfigError("heatmap_sigma must be positive and finite");
    diffusion.validate();
}

nlohmann::json InferConfig::to_json() const {
    return {{"matcher", matcher.to_json()},
            {"tracker", to_string(tracker)},
            {"heatmap_sigma", heatmap_sigma},
            {"zero_point_maps", zero_point_maps},
            {"diffusion", diffusion.to_json()},
            {"sample_seed", sample.seed}};
}

InferConfig InferConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"matcher", "tracker", "heatmap_sigma", "zero_point_maps", "diffusion",
                            "sample_seed"},
                        "infer");
    InferConfig c;
    if (j.contains("matcher")) c.matcher = correspond::MatcherSpec::from_json(j.at("matcher"));
    if (j.contains("tracker"))
        c.tracker = correspond::parse_tracker_backend(j.at("tracker").get<std::string>());
    read_if(j, "heatmap_sigma", c.heatmap_sigma);
    read_if(j, "zero_point_maps", c.zero_point_maps);
    if (j.contains("diffusion")) c.diffusion = DiffusionParams::from_json(j.at("diffusion"));
    read_if(j, "sample_seed", c.sample.seed);
    c.validate();
    return c;
}

namespace {

constexpr std::uint8_t kNeutralPaper = 255;

conditioning::EncodedPointMaps zero_maps(int t, int h, int w) {
    conditioning::EncodedPointMaps enc;
    enc.t = t;
    enc.h = h;
    enc.w = w;
    enc.v.assign(static_cast<size_t>(2) * t * h * w, 0.0);
    return enc;
}

const std::vector<synthgen::AnchorTrack>* registry_for(const InferConfig& cfg,
                                                       const synthgen::SyntheticClip* clip) {
    if (cfg.matcher.backend == correspond::MatcherBackend::oracle && !clip)
        throw ConfigError("the ground-truth matcher backend needs a source clip");
    return clip ? &clip->registry : nullptr;
}

Tensor run_sampler(const ModelState& state, const synthgen::ReferenceImage& ref,
                   const Tensor& controls, const InferConfig& cfg) {
    DiffusionSchedule schedule = make_schedule(cfg.diffusion.schedule, cfg.diffusion.train_timesteps);
    SampleConfig sample = cfg.sample;
    sample.kind = cfg.diffusion.sampler;
    sample.steps = cfg.diffusion.sample_steps;
    return sample_video(state, schedule, reference_to_z(ref.pixels), controls, sample);
}

}  // namespace

InferResult infer_dense(const ModelState& state, const synthgen::ReferenceImage& ref,
                        const std::vector<Sketch>& sketches, const InferConfig& cfg,
                        const synthgen::SyntheticClip* oracle_clip) {
    if (state.stage != Stage::dense)
        throw DataError("dense inference needs a dense-stage checkpoint, got " +
                        to_string(state.stage));
    if (sketches.empty()) throw DataError("infer_dense: no sketch frames given");
    const int t_frames = static_cast<int>(sketches.size());
    const int h = ref.pixels.h, w = ref.pixels.w;
    for (const Sketch& s : sketches)
        if (s.h != h || s.w != w) throw DataError("infer_dense: sketch size differs from reference");

    InferResult out;
    const auto* registry = registry_for(cfg, oracle_clip);
    out.matches = correspond::match_reference(ref, sketches[0], registry, cfg.matcher, 0, &out.report);

    if (out.matches.n() == 0) {
        out.report.add("warning: no keypoints matched; proceeding with all-zero point maps");
        out.controls = assemble_controls(Stage::dense, sketches, zero_maps(t_frames, h, w), nullptr,
                                         ref.pixels);
        out.video = run_sampler(state, ref, out.controls, cfg);
        return out;
    }

    if (cfg.tracker == correspond::TrackerBackend::oracle) {
        if (!oracle_clip) throw ConfigError("the ground-truth tracker backend needs a source clip");
        if (t_frames > static_cast<int>(oracle_clip->frames.size()))
            throw DataError("infer_dense: more sketches than the source clip has frames");
        out.tracks = correspond::track_points(*oracle_clip, out.matches,
                                              correspond::TrackerBackend::oracle, nullptr, &out.report);
        for (auto& tr : out.tracks.tracks) {
            tr.pos.resize(static_cast<size_t>(t_frames));
            tr.valid.resize(static_cast<size_t>(t_frames));
        }
    } else {
        conditioning::MatchSet end = correspond::match_reference(
            ref, sketches[static_cast<size_t>(t_frames - 1)], registry, cfg.matcher, t_frames - 1,
            &out.report);
        conditioning::MatchSet joined;
        out.tracks =
            conditioning::interpolate_trajectories(out.matches, end, t_frames, &joined, &out.report);
        out.matches = std::move(joined);
    }

    conditioning::EncodedPointMaps enc;
    if (out.matches.n() == 0) {
        out.report.add("warning: no keypoints survived tracking; point maps are all zero");
        enc = zero_maps(t_frames, h, w);
    } else {
        conditioning::PointMapSequence pm =
            conditioning::build_point_map_sequence(out.matches, out.tracks, h, w, &out.report);
        enc = conditioning::encode_labels(pm, out.matches.n());
    }
    if (cfg.zero_point_maps) std::fill(enc.v.begin(), enc.v.end(), 0.0);

    out.controls = assemble_controls(Stage::dense, sketches, enc, nullptr, ref.pixels);
    out.video = run_sampler(state, ref, out.controls, cfg);
    return out;
}

InferResult infer_sparse(const ModelState& state, const synthgen::ReferenceImage& ref,
                         const Sketch& first_sketch, const Sketch& last_sketch, int t_frames,
                         const InferConfig& cfg, const synthgen::SyntheticClip* oracle_clip) {
    if (state.stage != Stage::sparse)
        throw DataError("sparse inference needs a sparse-stage checkpoint, got " +
                        to_string(state.stage));
    if (t_frames < 2) throw DataError("infer_sparse: need at least 2 output frames");
    const int h = ref.pixels.h, w = ref.pixels.w;
    if (first_sketch.h != h || first_sketch.w != w || last_sketch.h != h || last_sketch.w != w)
        throw DataError("infer_sparse: keyframe sketch size differs from reference");

    InferResult out;
    const auto* registry = registry_for(cfg, oracle_clip);
    conditioning::MatchSet m_first =
        correspond::match_reference(ref, first_sketch, registry, cfg.matcher, 0, &out.report);
    conditioning::MatchSet m_last = correspond::match_reference(ref, last_sketch, registry,
                                                               cfg.matcher, t_frames - 1, &out.report);

    conditioning::MatchSet joined;
    out.tracks =
        conditioning::interpolate_trajectories(m_first, m_last, t_frames, &joined, &out.report);
    out.matches = std::move(joined);

    std::vector<Sketch> sketches(static_cast<size_t>(t_frames), Sketch(h, w, kNeutralPaper));
    sketches.front() = first_sketch;
    sketches.back() = last_sketch;

    conditioning::EncodedPointMaps enc;
    conditioning::HeatmapSequence heat;
    heat.sigma = cfg.heatmap_sigma;
    if (out.matches.n() == 0) {
        out.report.add(
            "warning: start and end sketches share no reference keypoints; correspondence "
            "channels are all zero");
        enc = zero_maps(t_frames, h, w);
        heat.frames.assign(static_cast<size_t>(t_frames), GridF(h, w, 0.0));
    } else {
        conditioning::PointMapSequence pm =
            conditioning::build_point_map_sequence(out.matches, out.tracks, h, w, &out.report);
        enc = conditioning::encode_labels(pm, out.matches.n());
        heat = conditioning::build_heatmaps(out.tracks, cfg.heatmap_sigma, h, w);
    }
    if (cfg.zero_point_maps) std::fill(enc.v.begin(), enc.v.end(), 0.0);

    out.controls = assemble_controls(Stage::sparse, sketches, enc, &heat, ref.pixels);
    out.video = run_sampler(state, ref, out.controls, cfg);
    return out;
}

}  // namespace linecolor::pipeline
