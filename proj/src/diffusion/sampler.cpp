#include "diffusion/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "core/rng.hpp"

namespace linecolor {

std::string to_string(SamplerKind k) { return k == SamplerKind::ddim ? "ddim" : "ddpm"; }

SamplerKind parse_sampler_kind(const std::string& s) {
    if (s == "ddim") return SamplerKind::ddim;
    if (s == "ddpm") return SamplerKind::ddpm;
    throw ConfigError("unknown sampler kind: " + s);
}

Tensor sample_video(const ModelState& state, const DiffusionSchedule& schedule,
                    const Tensor& reference, const Tensor& controls, const SampleConfig& cfg) {
    validate_schedule(schedule);
    std::vector<int> ts = timestep_subsequence(schedule.n_steps, cfg.steps);
    Rng rng(cfg.seed);
    Tensor x = randn_tensor(controls.t, 3, controls.h, controls.w, rng);
    Tensor x0(x.t, x.c, x.h, x.w);
    for (size_t k = 0; k < ts.size(); ++k) {
        int t = ts[k];
        double a_t = schedule.at(t);
        Tensor eps = denoise(state, x, t, reference, controls);
        double sa = std::sqrt(a_t);
        double sb = std::sqrt(1.0 - a_t);
        for (size_t i = 0; i < x.v.size(); ++i)
            x0.v[i] = std::clamp((x.v[i] - sb * eps.v[i]) / sa, -1.0, 1.0);
        if (k + 1 == ts.size()) {
            x = x0;
            break;
        }
        double a_prev = schedule.at(ts[k + 1]);
        if (cfg.kind == SamplerKind::ddim) {
            double pa = std::sqrt(a_prev);
            double pb = std::sqrt(1.0 - a_prev);
            for (size_t i = 0; i < x.v.size(); ++i) x.v[i] = pa * x0.v[i] + pb * eps.v[i];
        } else {
            double var = (1.0 - a_prev) / (1.0 - a_t) * (1.0 - a_t / a_prev);
            double sigma = std::sqrt(std::max(0.0, var));
            double dir = std::sqrt(std::max(0.0, 1.0 - a_prev - sigma * sigma));
            double pa = std::sqrt(a_prev);
            for (size_t i = 0; i < x.v.size(); ++i)
                x.v[i] = pa * x0.v[i] + dir * eps.v[i] + sigma * rng.normal();
        }
    }
    for (double& v : x.v) v = std::clamp((v + 1.0) / 2.0, 0.0, 1.0);
    return x;
}

}  // namespace linecolor
