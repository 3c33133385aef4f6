#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace linecolor {

template <class T>
struct Grid {
    int h = 0, w = 0;
    std::vector<T> v;

    Grid() = default;
    Grid(int h_, int w_, T fill = T{}) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

    T& at(int y, int x) { return v[static_cast<size_t>(y) * w + x]; }
    const T& at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
    bool in_bounds(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }
    size_t size() const { return v.size(); }
    void fill(T value) { std::fill(v.begin(), v.end(), value); }

    bool operator==(const Grid&) const = default;
};

using Sketch = Grid<std::uint8_t>;    // line art, 0 = ink, 255 = paper
using Mask = Grid<std::uint8_t>;      // 0 / 1
using LabelMap = Grid<std::int32_t>;  // 0 = unmatched
using GridF = Grid<double>;

// Interleaved RGB, values in [0,1].
struct Image {
    int h = 0, w = 0;
    std::vector<double> rgb;

    Image() = default;
    Image(int h_, int w_, double fill = 0.0) : h(h_), w(w_), rgb(static_cast<size_t>(h_) * w_ * 3, fill) {}

    double& at(int y, int x, int c) { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    const double& at(int y, int x, int c) const { return rgb[(static_cast<size_t>(y) * w + x) * 3 + c]; }
    void set(int y, int x, const std::array<double, 3>& color) {
        for (int c = 0; c < 3; ++c) at(y, x, c) = color[c];
    }
    std::array<double, 3> get(int y, int x) const { return {at(y, x, 0), at(y, x, 1), at(y, x, 2)}; }
    bool in_bounds(int y, int x) const { return y >= 0 && y < h && x >= 0 && x < w; }

    bool operator==(const Image&) const = default;
};

// Rec.601 luma, same weighting the sketch leak model uses.
inline double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }
inline double luma(const std::array<double, 3>& c) { return luma(c[0], c[1], c[2]); }

// Coordinates: x = column, y = row, origin top-left, pixel centers at integer positions.
inline int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

inline std::uint8_t to_u8(double v) {
    double s = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    return static_cast<std::uint8_t>(s);
}
inline double from_u8(std::uint8_t v) { return v / 255.0; }

// Snap a unit-interval value onto the 8-bit lattice so PNG round trips are exact.
inline double snap_unit(double v) { return from_u8(to_u8(v)); }

inline std::array<double, 3> snap_color(const std::array<double, 3>& c) {
    return {snap_unit(c[0]), snap_unit(c[1]), snap_unit(c[2])};
}

inline double max_channel_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double d = 0;
    for (int c = 0; c < 3; ++c) d = std::max(d, std::abs(a[c] - b[c]));
    return d;
}

}  // namespace linecolor
