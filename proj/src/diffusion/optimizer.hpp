#pragma once

#include <cstdint>

#include "diffusion/model.hpp"

namespace linecolor {

// Adaptive moments with decoupled weight decay. Decay applies only to
// parameters flagged as weight matrices; biases and norm affines are exempt.
struct AdamWConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamW {
    AdamWConfig cfg;
    std::int64_t step_count = 0;

    void step(ParamStore& params);
};

}  // namespace linecolor
