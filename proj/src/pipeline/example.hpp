#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conditioning/conditioning.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "diffusion/tensor.hpp"
#include "pipeline/config.hpp"
#include "synthgen/types.hpp"

namespace linecolor::pipeline {

// --- value-range conventions ---
// Target frames and the reference enter the denoiser in [-1,1] (z = 2x - 1);
// every conditioning channel (sketch, point maps, heatmap, reference RGB in
// the control stack) stays in [0,1].

// First `t_count` frames as a [T,3,H,W] tensor in [-1,1].
Tensor frames_to_z(const std::vector<Image>& frames, int t_count);

// [1,3,H,W] tensor in [-1,1] for the denoiser's reference input.
Tensor reference_to_z(const Image& reference);

// [T,3,H,W] tensor in [0,1] -> per-frame images (sampler output adapter).
std::vector<Image> tensor_to_video(const Tensor& video);

// Stacks per-frame control channels in the layout the denoiser expects:
// dense [sketch, pm_ref, pm_frame, ref_r, ref_g, ref_b]; sparse inserts the
// trajectory heatmap ahead of the reference channels. `heatmaps` must be
// non-null exactly when stage is sparse.
Tensor assemble_controls(Stage stage, const std::vector<Sketch>& sketches,
                         const conditioning::EncodedPointMaps& point_maps,
                         const conditioning::HeatmapSequence* heatmaps, const Image& reference);

// One training example: normalized targets plus every conditioning artifact,
// kept in image space so tests can inspect components before assembly.
struct ConditionedExample {
    Stage stage = Stage::dense;
    int t_frames = 0, h = 0, w = 0;
    Tensor z0;                                  // [T,3,H,W] in [-1,1]
    synthgen::ReferenceImage reference;         // after background augmentation
    std::vector<Sketch> sketches;               // T entries; neutral paper where absent
    std::vector<std::uint8_t> sketch_present;   // 1 where the sketch holds real line art
    conditioning::MatchSet matches;             // subsampled, labels 1..m
    conditioning::TrajectorySet tracks;         // per-frame positions for those labels
    conditioning::EncodedPointMaps point_maps;  // [2][T][H][W] in [0,1]
    conditioning::HeatmapSequence heatmaps;     // sparse stage only (empty otherwise)
    std::uint64_t clip_seed = 0;

    Tensor reference_tensor() const { return reference_to_z(reference.pixels); }
    Tensor control_tensor() const;
};

// Builds one example from a generated clip.
//   dense:  line art at every frame; ground-truth first-frame matches extended
//           by ground-truth tracks, uniformly subsampled to max_keypoints.
//   sparse: line art only at frames 0 and T-1 (neutral paper between);
//           motion-weighted subsample; Gaussian trajectory heatmaps.
// Returns nullopt (with a report note) when the clip offers no matched
// keypoints at all; throws DataError when the clip is shorter than
// cfg.clip_length. Consumes rng in a fixed order: one background-augmentation
// draw, then the subsampling draws.
std::optional<ConditionedExample> make_example(const synthgen::SyntheticClip& clip,
                                               const TrainConfig& cfg, Rng& rng,
                                               Report* report = nullptr);

// Container round-trip for preprocessed examples (inspection + data handoff).
void save_example(const ConditionedExample& ex, const std::string& path);
ConditionedExample load_example(const std::string& path);

}  // namespace linecolor::pipeline
