#pragma once

#include <vector>

#include "conditioning/conditioning.hpp"
#include "core/report.hpp"
#include "correspond/correspond.hpp"
#include "diffusion/sampler.hpp"
#include "pipeline/config.hpp"
#include "synthgen/types.hpp"

namespace linecolor::pipeline {

// Inference-side settings. The schedule parameters must match the ones the
// checkpoint was trained with; they travel in the run config, not the
// checkpoint. Matching here uses the matcher's own deterministic keypoint cap
// (no random subsample at inference).
struct InferConfig {
    correspond::MatcherSpec matcher;
    correspond::TrackerBackend tracker = correspond::TrackerBackend::oracle;
    double heatmap_sigma = 2.0;
    bool zero_point_maps = false;  // ablation switch, mirrored from training
    DiffusionParams diffusion;
    SampleConfig sample;

    void validate() const;
    nlohmann::json to_json() const;
    static InferConfig from_json(const nlohmann::json& j);  // strict: unknown keys rejected
    bool operator==(const InferConfig&) const = default;
};

struct InferResult {
    Tensor video;     // [T,3,H,W] in [0,1]
    Tensor controls;  // assembled conditioning actually fed to the sampler
    conditioning::MatchSet matches;
    conditioning::TrajectorySet tracks;
    Report report;
};

// Colorizes a full sketch sequence with a dense-stage checkpoint: matches the
// reference against the first sketch, extends matches to per-frame tracks
// (ground-truth tracks need `oracle_clip`; the interpolated tracker matches
// the last sketch too and draws straight lines), builds point maps, samples.
// No matches -> all-zero point maps plus a warning note, not an error.
InferResult infer_dense(const ModelState& state, const synthgen::ReferenceImage& ref,
                        const std::vector<Sketch>& sketches, const InferConfig& cfg,
                        const synthgen::SyntheticClip* oracle_clip = nullptr);

// Colorizes from keyframe sketches only with a sparse-stage checkpoint:
// matches the reference against both keyframes, joins on shared reference
// points, interpolates linear trajectories, and conditions on Gaussian
// trajectory heatmaps with neutral paper between the keyframes. No joinable
// keypoints -> all-zero correspondence channels plus a warning note.
InferResult infer_sparse(const ModelState& state, const synthgen::ReferenceImage& ref,
                         const Sketch& first_sketch, const Sketch& last_sketch, int t_frames,
                         const InferConfig& cfg,
                         const synthgen::SyntheticClip* oracle_clip = nullptr);

}  // namespace linecolor::pipeline
