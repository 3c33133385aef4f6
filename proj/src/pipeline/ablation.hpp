#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eval/report.hpp"
#include "pipeline/infer.hpp"
#include "pipeline/train.hpp"

namespace linecolor::pipeline {

// Training arms that differ from the baseline in exactly one component:
//   full            — the baseline recipe as configured
//   no_matching     — point-map planes zeroed everywhere (training + inference)
//   no_binarize_aug — raw leaky sketches (no thresholding), background
//                     augmentation off
enum class AblationArm { full, no_matching, no_binarize_aug };
std::string to_string(AblationArm a);
AblationArm parse_ablation_arm(const std::string& s);

// The baseline config with exactly one field group changed per arm.
TrainConfig arm_config(AblationArm arm, TrainConfig base);

// Color-swap clip suite: each scene yields two clips with identical geometry.
// Two same-shaped circles trade places between the reference render and the
// clip window (each sprite's reference position is the other's clip position),
// and the paired variant exchanges the two fill colors. Sketches are identical
// within a pair, so fill colors are only predictable by following
// correspondence from the reference — copying colors by position answers
// wrong, and averaging over the pair makes color priors useless.
// Returns 2*n_scenes clips, pair-adjacent, each with a unique seed echo.
std::vector<synthgen::SyntheticClip> make_swap_suite(int n_scenes, const synthgen::GenConfig& gen,
                                                     std::uint64_t seed);

struct AblationConfig {
    TrainConfig base;          // dense stage; arms derive from this
    synthgen::GenConfig gen;   // scene geometry; gen.t must equal base.clip_length
    int train_scenes = 8;      // doubled by pairing
    int eval_scenes = 5;       // held out, doubled by pairing
    std::uint64_t data_seed = 1;
    std::uint64_t eval_seed = 1000;
    bool eval_binarize = true;  // threshold the evaluation sketches
    InferConfig infer;          // diffusion params are overridden from the arm config

    nlohmann::json to_json() const;
    static AblationConfig from_json(const nlohmann::json& j);  // strict: unknown keys rejected
    bool operator==(const AblationConfig&) const = default;
};

struct AblationResult {
    AblationArm arm = AblationArm::full;
    TrainConfig cfg;  // resolved arm config
    ModelState model;
    std::vector<TraceRow> trace;
    eval::MetricReport report;  // held-out swap-suite metrics, masked
    std::vector<std::uint64_t> train_clip_seeds;
    std::vector<std::uint64_t> eval_clip_seeds;
    Report notes;
};

// Trains one arm on the swap suite and evaluates it on held-out swap scenes.
// Every arm sees identical data draws: clip generation depends only on the
// seeds, and the ablation switches leave the conditioning rng stream intact.
AblationResult run_ablation(AblationArm arm, const AblationConfig& cfg);

}  // namespace linecolor::pipeline
