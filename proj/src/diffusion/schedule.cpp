#include "diffusion/schedule.hpp"

#include <cmath>

#include "core/errors.hpp"
#include "core/grid.hpp"

namespace linecolor {

std::string to_string(ScheduleKind k) {
    return k == ScheduleKind::linear ? "linear" : "cosine";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
    if (s == "linear") return ScheduleKind::linear;
    if (s == "cosine") return ScheduleKind::cosine;
    throw ConfigError("unknown schedule kind: " + s);
}

double DiffusionSchedule::at(int t_index) const {
    if (t_index < 1 || t_index > n_steps)
        throw ConfigError("timestep " + std::to_string(t_index) + " outside schedule range 1.." +
                          std::to_string(n_steps));
    return alpha_bar[static_cast<size_t>(t_index) - 1];
}

void validate_schedule(const DiffusionSchedule& s) {
    if (s.n_steps < 2) throw ConfigError("schedule needs at least 2 steps");
    if (static_cast<int>(s.alpha_bar.size()) != s.n_steps)
        throw ConfigError("schedule table length does not match n_steps");
    if (s.alpha_bar.front() < 0.99)
        throw ConfigError("schedule start alpha_bar " + std::to_string(s.alpha_bar.front()) +
                          " below 0.99");
    if (s.alpha_bar.back() > 0.01)
        throw ConfigError("schedule end alpha_bar " + std::to_string(s.alpha_bar.back()) +
                          " above 0.01");
    for (size_t i = 1; i < s.alpha_bar.size(); ++i)
        if (!(s.alpha_bar[i] < s.alpha_bar[i - 1]))
            throw ConfigError("schedule alpha_bar not strictly decreasing at step " +
                              std::to_string(i + 1));
}

DiffusionSchedule make_schedule(ScheduleKind kind, int n_steps) {
    if (n_steps < 2) throw ConfigError("schedule needs at least 2 steps");
    DiffusionSchedule out;
    out.kind = kind;
    out.n_steps = n_steps;
    out.alpha_bar.resize(static_cast<size_t>(n_steps));
    const double pi = 3.14159265358979323846;
    for (int t = 1; t <= n_steps; ++t) {
        double s = static_cast<double>(t - 1) / (n_steps - 1);
        double a;
        if (kind == ScheduleKind::linear) {
            a = 0.999 + s * (0.001 - 0.999);
        } else {
            double c = std::cos(s * pi / 2.0);
            a = 0.001 + 0.998 * c * c;
        }
        out.alpha_bar[static_cast<size_t>(t) - 1] = a;
    }
    validate_schedule(out);
    return out;
}

Tensor forward_diffuse(const Tensor& z0, const Tensor& eps, double alpha_bar) {
    if (!z0.same_shape(eps))
        throw DataError("forward diffusion shape mismatch: " + z0.shape_str() + " vs " +
                        eps.shape_str());
    if (!(alpha_bar > 0.0 && alpha_bar < 1.0))
        throw ConfigError("alpha_bar must lie in (0, 1)");
    double sa = std::sqrt(alpha_bar);
    double sb = std::sqrt(1.0 - alpha_bar);
    Tensor out = z0;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = sa * z0.v[i] + sb * eps.v[i];
    return out;
}

std::vector<int> timestep_subsequence(int n_steps, int k) {
    if (k < 1) throw ConfigError("need at least 1 sampling step");
    if (k > n_steps)
        throw ConfigError("sampling steps " + std::to_string(k) + " exceed schedule length " +
                          std::to_string(n_steps));
    std::vector<int> out;
    out.reserve(static_cast<size_t>(k));
    if (k == 1) {
        out.push_back(n_steps);
        return out;
    }
    for (int i = k - 1; i >= 0; --i) {
        double pos = 1.0 + static_cast<double>(n_steps - 1) * i / (k - 1);
        out.push_back(static_cast<int>(round_half_up(pos)));
    }
    return out;
}

}  // namespace linecolor
