#include "diffusion/optimizer.hpp"

#include <cmath>

namespace linecolor {

void AdamW::step(ParamStore& params) {
    ++step_count;
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step_count));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step_count));
    for (auto& [name, p] : params.entries) {
        if (p.m.v.empty()) p.m = Tensor(p.value.t, p.value.c, p.value.h, p.value.w);
        if (p.s.v.empty()) p.s = Tensor(p.value.t, p.value.c, p.value.h, p.value.w);
        for (size_t i = 0; i < p.value.v.size(); ++i) {
            double g = p.grad.v[i];
            p.m.v[i] = cfg.beta1 * p.m.v[i] + (1.0 - cfg.beta1) * g;
            p.s.v[i] = cfg.beta2 * p.s.v[i] + (1.0 - cfg.beta2) * g * g;
            double mhat = p.m.v[i] / bc1;
            double shat = p.s.v[i] / bc2;
            double upd = mhat / (std::sqrt(shat) + cfg.eps);
            if (p.decay) upd += cfg.weight_decay * p.value.v[i];
            p.value.v[i] -= cfg.lr * upd;
        }
    }
}

}  // namespace linecolor
