#pragma once

#include <cstdint>

#include "diffusion/model.hpp"
#include "diffusion/schedule.hpp"

namespace linecolor {

// ddim is noise-free after the seeded start state, so fixed seeds reproduce
// videos bit for bit; ddpm re-noises at every step (still seed-deterministic).
enum class SamplerKind { ddim, ddpm };
std::string to_string(SamplerKind k);
SamplerKind parse_sampler_kind(const std::string& s);

struct SampleConfig {
    SamplerKind kind = SamplerKind::ddim;
    int steps = 50;  // must not exceed the schedule length
    std::uint64_t seed = 0;

    bool operator==(const SampleConfig&) const = default;
};

// Generates a [T,3,H,W] video in [0,1]. T and the spatial size come from the
// control tensor; the per-step denoised estimate is clamped to [-1,1].
Tensor sample_video(const ModelState& state, const DiffusionSchedule& schedule,
                    const Tensor& reference, const Tensor& controls, const SampleConfig& cfg);

}  // namespace linecolor
