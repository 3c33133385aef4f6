#include "pipeline/config.hpp"

#include <cmath>
#include <set>

#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace linecolor::pipeline {

void DiffusionParams::validate() const {
    if (train_timesteps < 2) throw ConfigError("diffusion.train_timesteps must be >= 2");
    if (sample_steps < 1 || sample_steps > train_timesteps)
        throw ConfigError("diffusion.sample_steps must be in [1, train_timesteps]");
}

nlohmann::json DiffusionParams::to_json() const {
    return {{"schedule", to_string(schedule)},
            {"train_timesteps", train_timesteps},
            {"sample_steps", sample_steps},
            {"sampler", to_string(sampler)}};
}

DiffusionParams DiffusionParams::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"schedule", "train_timesteps", "sample_steps", "sampler"},
                        "diffusion");
    DiffusionParams p;
    if (j.contains("schedule")) p.schedule = parse_schedule_kind(j.at("schedule").get<std::string>());
    read_if(j, "train_timesteps", p.train_timesteps);
    read_if(j, "sample_steps", p.sample_steps);
    if (j.contains("sampler")) p.sampler = parse_sampler_kind(j.at("sampler").get<std::string>());
    p.validate();
    return p;
}

void TrainConfig::validate() const {
    if (max_keypoints < 1) throw ConfigError("max_keypoints must be >= 1");
    if (reference_offset < 1) throw ConfigError("reference_offset must be >= 1");
    if (clip_length < 2) throw ConfigError("clip_length must be >= 2");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be a positive finite number");
    if (total_steps < 1) throw ConfigError("total_steps must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(leak_strength >= 0.0 && leak_strength <= 1.0))
        throw ConfigError("leak_strength must be in [0,1]");
    if (!(background_augment_p >= 0.0 && background_augment_p <= 1.0))
        throw ConfigError("background_augment_p must be in [0,1]");
    if (!(heatmap_sigma > 0.0)) throw ConfigError("heatmap_sigma must be positive");
    model.validate();
    diffusion.validate();
}

nlohmann::json TrainConfig::to_json() const {
    return {{"stage", to_string(stage)},
            {"max_keypoints", max_keypoints},
            {"reference_offset", reference_offset},
            {"clip_length", clip_length},
            {"learning_rate", learning_rate},
            {"total_steps", total_steps},
            {"batch_size", batch_size},
            {"seed", seed},
            {"sketch_mode", synthgen::to_string(sketch_mode)},
            {"binarize", binarize},
            {"leak_strength", leak_strength},
            {"background_augment_p", background_augment_p},
            {"heatmap_sigma", heatmap_sigma},
            {"zero_point_maps", zero_point_maps},
            {"model", model.to_json()},
            {"diffusion", diffusion.to_json()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j,
                        {"stage", "max_keypoints", "reference_offset", "clip_length",
                         "learning_rate", "total_steps", "batch_size", "seed", "sketch_mode",
                         "binarize", "leak_strength", "background_augment_p", "heatmap_sigma",
                         "zero_point_maps", "model", "diffusion"},
                        "train config");
    TrainConfig c;
    if (j.contains("stage")) c.stage = parse_stage(j.at("stage").get<std::string>());
    // stage-dependent default, overridable by an explicit key
    c.max_keypoints = (c.stage == Stage::dense) ? 50 : 5;
    read_if(j, "max_keypoints", c.max_keypoints);
    read_if(j, "reference_offset", c.reference_offset);
    read_if(j, "clip_length", c.clip_length);
    read_if(j, "learning_rate", c.learning_rate);
    read_if(j, "total_steps", c.total_steps);
    read_if(j, "batch_size", c.batch_size);
    read_if(j, "seed", c.seed);
    if (j.contains("sketch_mode"))
        c.sketch_mode = synthgen::parse_lineart_mode(j.at("sketch_mode").get<std::string>());
    read_if(j, "binarize", c.binarize);
    read_if(j, "leak_strength", c.leak_strength);
    read_if(j, "background_augment_p", c.background_augment_p);
    read_if(j, "heatmap_sigma", c.heatmap_sigma);
    read_if(j, "zero_point_maps", c.zero_point_maps);
    if (j.contains("model")) c.model = DenoiserConfig::from_json(j.at("model"));
    if (j.contains("diffusion")) c.diffusion = DiffusionParams::from_json(j.at("diffusion"));
    c.validate();
    return c;
}

}  // namespace linecolor::pipeline
