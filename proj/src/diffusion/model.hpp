#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "diffusion/tape.hpp"
#include "diffusion/tensor.hpp"

namespace linecolor {

enum class Stage { dense, sparse };
std::string to_string(Stage s);
Stage parse_stage(const std::string& s);

// Per-level temporal mixing: none, frame-window conv, or conv plus attention
// across frames.
enum class TemporalKind { none, conv, conv_attn };
std::string to_string(TemporalKind k);
TemporalKind parse_temporal_kind(const std::string& s);

// Control channel layout (frame-major, per frame):
//   dense:  [sketch, point_map_ref, point_map_frame, ref_r, ref_g, ref_b]
//   sparse: [sketch, point_map_ref, point_map_frame, heatmap, ref_r, ref_g, ref_b]
constexpr int kDenseControlChannels = 6;
constexpr int kSparseControlChannels = 7;
constexpr int kHeatmapChannelIndex = 3;

struct DenoiserConfig {
    int base_channels = 32;
    std::vector<int> channel_mult = {1, 2, 2};
    std::vector<TemporalKind> temporal = {TemporalKind::conv, TemporalKind::conv,
                                          TemporalKind::conv_attn};
    bool mid_spatial_attention = true;
    int time_embed_dim = 64;
    int groups = 8;

    int levels() const { return static_cast<int>(channel_mult.size()); }
    int channels(int level) const { return base_channels * channel_mult[static_cast<size_t>(level)]; }
    int main_in_channels() const { return 6; }  // noisy frame (3) + replicated reference (3)
    int control_in_channels(Stage stage) const {
        return stage == Stage::dense ? kDenseControlChannels : kSparseControlChannels;
    }
    void validate() const;  // throws ConfigError

    nlohmann::json to_json() const;
    static DenoiserConfig from_json(const nlohmann::json& j);
    bool operator==(const DenoiserConfig&) const = default;
};

struct ParamTensor {
    Tensor value;
    Tensor grad;
    Tensor m;  // optimizer first moment (lazy)
    Tensor s;  // optimizer second moment (lazy)
    bool decay = false;
};

struct ParamStore {
    std::map<std::string, ParamTensor> entries;

    ParamTensor& at(const std::string& name);
    const ParamTensor& at(const std::string& name) const;
    void create(const std::string& name, Tensor init, bool decay);
    void zero_grads();
    size_t param_count() const;
    double grad_norm() const;
};

struct ModelState {
    DenoiserConfig config;
    Stage stage = Stage::dense;
    ParamStore params;
    std::int64_t step = 0;
};

// Fresh model: He-style init, with the control fusion projections and the
// output conv zero-initialized so controls are invisible until trained.
ModelState init_model(const DenoiserConfig& cfg, Stage stage, std::uint64_t seed);

// Test hook: re-randomizes every parameter (including the zero-init ones) so
// gradient flow through all branches can be exercised.
void randomize_all_params(ModelState& state, std::uint64_t seed);

// Noise prediction for one diffusion timestep. z_t: [T,3,H,W];
// reference: [1,3,H,W]; controls: [T,C,H,W] with C per stage layout.
Tensor denoise(const ModelState& state, const Tensor& z_t, int t_index, const Tensor& reference,
               const Tensor& controls);

// Squared-error noise-prediction objective; accumulates parameter gradients.
// Throws RuntimeFailure with step diagnostics when the loss is non-finite.
double loss_and_grads(ModelState& state, const Tensor& z_t, int t_index,
                      const Tensor& eps_target, const Tensor& reference, const Tensor& controls);

void save_checkpoint(const std::string& path, const ModelState& state,
                     bool include_optimizer = false);
ModelState load_checkpoint(const std::string& path);

// Sparse-stage warm start: copies every dense parameter; the control stem gains
// a zero-initialized heatmap input channel. Step counter restarts at 0.
ModelState adapt_dense_to_sparse(const ModelState& dense);

}  // namespace linecolor
