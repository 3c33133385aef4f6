#pragma once

#include <string>
#include <vector>

#include "diffusion/tensor.hpp"

namespace linecolor {

enum class ScheduleKind { linear, cosine };

std::string to_string(ScheduleKind k);
ScheduleKind parse_schedule_kind(const std::string& s);

// Noise schedule over 1-based timesteps t = 1..n_steps.
// alpha_bar(1) >= 0.99, alpha_bar(n) <= 0.01, strictly decreasing.
struct DiffusionSchedule {
    ScheduleKind kind = ScheduleKind::cosine;
    int n_steps = 0;
    std::vector<double> alpha_bar;  // alpha_bar[i] is for timestep t = i + 1

    double at(int t_index) const;  // bounds-checked, 1-based
};

// Throws ConfigError when the endpoint/monotonicity invariants are violated.
void validate_schedule(const DiffusionSchedule& s);

// linear: alpha_bar interpolates 0.999 -> 0.001 in t.
// cosine: alpha_bar(t) = 0.001 + 0.998 * cos(s*pi/2)^2 with s = (t-1)/(n-1).
// Requires n_steps >= 2.
DiffusionSchedule make_schedule(ScheduleKind kind, int n_steps);

// z_t = sqrt(alpha_bar) * z0 + sqrt(1 - alpha_bar) * eps. Shapes must match.
Tensor forward_diffuse(const Tensor& z0, const Tensor& eps, double alpha_bar);

// Descending unique 1-based timesteps: k evenly spaced over [1, n], endpoints included.
std::vector<int> timestep_subsequence(int n_steps, int k);

}  // namespace linecolor
