#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "diffusion/model.hpp"
#include "diffusion/sampler.hpp"
#include "diffusion/schedule.hpp"
#include "synthgen/types.hpp"

namespace linecolor::pipeline {

// Noise-process and sampler settings that must stay consistent between a
// training run and later inference against its checkpoint.
struct DiffusionParams {
    ScheduleKind schedule = ScheduleKind::cosine;
    int train_timesteps = 1000;  // schedule length used for training draws
    int sample_steps = 50;       // sampler subsequence length at inference
    SamplerKind sampler = SamplerKind::ddim;

    void validate() const;
    nlohmann::json to_json() const;
    static DiffusionParams from_json(const nlohmann::json& j);
    bool operator==(const DiffusionParams&) const = default;
};

// Full recipe for one training run. `max_keypoints` defaults by stage when the
// config file omits it: 50 for the dense stage (sketches at every frame), 5
// for the sparse stage (keyframe sketches plus trajectory heatmaps).
struct TrainConfig {
    Stage stage = Stage::dense;
    int max_keypoints = 50;
    int reference_offset = 32;  // frames between the reference render and frame 0
    int clip_length = 14;       // frames consumed per example (clips may be longer)
    // 1e-4 suits the desk-scale models here; full-scale runs of this
    // architecture family are typically trained nearer 1e-5.
    double learning_rate = 1e-4;
    int total_steps = 2000;
    int batch_size = 1;
    std::uint64_t seed = 0;
    synthgen::LineartMode sketch_mode = synthgen::LineartMode::leaky;
    bool binarize = true;       // hard-threshold sketches to {0,255} (the faithful default)
    double leak_strength = 0.04;
    double background_augment_p = 0.5;
    double heatmap_sigma = 2.0;
    // Ablation switch: run the full conditioning path but zero the point-map
    // planes before assembly, so data and draws stay identical across arms.
    bool zero_point_maps = false;
    DenoiserConfig model;
    DiffusionParams diffusion;

    void validate() const;  // throws ConfigError
    nlohmann::json to_json() const;
    // Strict parse: unknown keys anywhere are ConfigErrors, not typos to skip.
    static TrainConfig from_json(const nlohmann::json& j);
    bool operator==(const TrainConfig&) const = default;
};

}  // namespace linecolor::pipeline
