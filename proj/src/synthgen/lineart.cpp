#include "synthgen/lineart.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"

namespace linecolor::synthgen {

namespace {

Sketch edge_lineart(const Image& frame) {
    int h = frame.h, w = frame.w;
    GridF lum(h, w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lum.at(y, x) = luma(frame.get(y, x));

    Sketch out(h, w, 255);
    constexpr double kThreshold = 0.08;  // gradient magnitude in luma units/px
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
            double gx = (lum.at(y, xr) - lum.at(y, xl)) * 0.5;
            double gy = (lum.at(yd, x) - lum.at(yu, x)) * 0.5;
            if (std::sqrt(gx * gx + gy * gy) > kThreshold) out.at(y, x) = 0;
        }
    }
    return out;
}

}  // namespace

Sketch extract_lineart(const Image& frame, const Sketch* oracle_outline, LineartMode mode, double leak_strength) {
    if (mode == LineartMode::edge) return edge_lineart(frame);
    if (oracle_outline == nullptr)
        throw DataError(std::string("extract_lineart: oracle outline required for mode ") + to_string(mode));
    if (oracle_outline->h != frame.h || oracle_outline->w != frame.w)
        throw DataError("extract_lineart: outline size does not match frame");
    if (mode == LineartMode::oracle) return *oracle_outline;

    // leaky: paper pixels pick up a darkness proportional to the underlying
    // color's darkness; values stay >= 245 for leak_strength <= 0.04 so a
    // strict >200 binarization removes the leak entirely.
    Sketch out = *oracle_outline;
    for (int y = 0; y < frame.h; ++y) {
        for (int x = 0; x < frame.w; ++x) {
            double l = luma(frame.get(y, x));
            int leak = 255 - static_cast<int>(std::floor(leak_strength * (1.0 - l) * 255.0));
            out.at(y, x) = static_cast<std::uint8_t>(std::min<int>(out.at(y, x), std::clamp(leak, 0, 255)));
        }
    }
    return out;
}

}  // namespace linecolor::synthgen
