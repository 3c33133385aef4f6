#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "core/rng.hpp"

namespace linecolor {

// Dense 4-D tensor, frame-major layout [t][c][h][w], double precision throughout.
// Vectors (biases, embeddings) use shape [1, n, 1, 1].
struct Tensor {
    int t = 0, c = 0, h = 0, w = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int t_, int c_, int h_, int w_, double fill = 0.0)
        : t(t_), c(c_), h(h_), w(w_), v(static_cast<size_t>(t_) * c_ * h_ * w_, fill) {}

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return t == o.t && c == o.c && h == o.h && w == o.w; }
    std::string shape_str() const;

    double& at(int tt, int cc, int yy, int xx) {
        return v[((static_cast<size_t>(tt) * c + cc) * h + yy) * w + xx];
    }
    double at(int tt, int cc, int yy, int xx) const {
        return v[((static_cast<size_t>(tt) * c + cc) * h + yy) * w + xx];
    }
    // Contiguous [c][h][w] slab for one frame.
    double* frame(int tt) { return v.data() + static_cast<size_t>(tt) * c * h * w; }
    const double* frame(int tt) const { return v.data() + static_cast<size_t>(tt) * c * h * w; }

    bool operator==(const Tensor&) const = default;
};

Tensor vector_tensor(const std::vector<double>& values);
Tensor randn_tensor(int t, int c, int h, int w, Rng& rng);

}  // namespace linecolor
