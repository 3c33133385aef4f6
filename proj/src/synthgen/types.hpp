#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/grid.hpp"

namespace linecolor::synthgen {

enum class ShapeKind { ellipse, polygon, blob };
enum class BackgroundKind { flat, gradient, checker };
enum class LineartMode { oracle, leaky, edge };

// Closed-form affine motion: translation with optional sinusoidal wobble,
// constant-rate rotation, sinusoidal uniform scale. Evaluated at any real
// frame index (the reference sits at negative time).
struct MotionSpec {
    double x0 = 0, y0 = 0;
    double vx = 0, vy = 0;
    double wobble_amp_x = 0, wobble_amp_y = 0;
    double wobble_freq_x = 0, wobble_freq_y = 0;
    double wobble_phase_x = 0, wobble_phase_y = 0;
    double rot0 = 0, rot_rate = 0;
    double scale_amp = 0, scale_freq = 0, scale_phase = 0;

    std::array<double, 2> center(double tau) const {
        double x = x0 + vx * tau + wobble_amp_x * std::sin(2 * M_PI * wobble_freq_x * tau + wobble_phase_x);
        double y = y0 + vy * tau + wobble_amp_y * std::sin(2 * M_PI * wobble_freq_y * tau + wobble_phase_y);
        return {x, y};
    }
    double angle(double tau) const { return rot0 + rot_rate * tau; }
    double scale(double tau) const { return 1.0 + scale_amp * std::sin(2 * M_PI * scale_freq * tau + scale_phase); }

    bool operator==(const MotionSpec&) const = default;
};

struct Anchor {
    std::string name;
    std::array<double, 2> local;  // sprite-local coordinates

    bool operator==(const Anchor&) const = default;
};

struct SpriteSpec {
    ShapeKind kind = ShapeKind::ellipse;
    int polygon_sides = 5;               // kind == polygon
    std::array<double, 3> fill{1, 0, 0};  // snapped to the 8-bit lattice
    double outline_width = 1.5;           // px, >= 1
    int z_order = 0;
    double radius_x = 10, radius_y = 10;  // local half extents; polygon/blob use radius_x
    std::array<double, 3> blob_amp{0, 0, 0};    // harmonics 2..4
    std::array<double, 3> blob_phase{0, 0, 0};
    MotionSpec motion;
    std::vector<Anchor> anchors;

    bool operator==(const SpriteSpec&) const = default;
};

struct Background {
    BackgroundKind kind = BackgroundKind::flat;
    std::array<double, 3> color_a{1, 1, 1};
    std::array<double, 3> color_b{1, 1, 1};
    int checker_cells = 8;  // pixels per cell
    bool horizontal = true;  // gradient axis

    bool operator==(const Background&) const = default;
};

struct ReferenceImage {
    Image pixels;
    Mask fg_mask;
    bool has_background = true;

    bool operator==(const ReferenceImage&) const = default;
};

// Ground-truth correspondence record for one sprite anchor: rounded pixel
// positions at reference time and every clip frame, with in-canvas validity
// and occlusion-aware visibility.
struct AnchorTrack {
    int sprite = 0;
    std::string name;
    std::array<int, 2> ref_pos{0, 0};
    bool ref_valid = false;
    bool ref_visible = false;
    std::vector<std::array<int, 2>> pos;
    std::vector<std::uint8_t> valid;
    std::vector<std::uint8_t> visible;

    bool operator==(const AnchorTrack&) const = default;
};

struct GenConfig {
    int t = 14;
    int h = 64;
    int w = 64;
    int n_sprites = 2;
    int reference_offset = 32;
    BackgroundKind background = BackgroundKind::flat;
    double sprite_scale = 1.0;

    void validate() const;
    nlohmann::json to_json() const;
    static GenConfig from_json(const nlohmann::json& j);  // strict: unknown keys rejected
    bool operator==(const GenConfig&) const = default;
};

struct SyntheticClip {
    GenConfig config;
    std::uint64_t seed = 0;
    Background background;
    std::vector<SpriteSpec> sprites;
    std::vector<Image> frames;      // T, 8-bit lattice values
    std::vector<Sketch> outlines;   // oracle grayscale line art
    std::vector<Mask> fg_masks;     // union of sprite-rendered pixels
    ReferenceImage reference;       // rendered at -reference_offset
    std::vector<AnchorTrack> registry;

    bool operator==(const SyntheticClip&) const = default;
};

inline const char* to_string(ShapeKind k) {
    switch (k) {
        case ShapeKind::ellipse: return "ellipse";
        case ShapeKind::polygon: return "polygon";
        case ShapeKind::blob: return "blob";
    }
    return "?";
}
inline const char* to_string(BackgroundKind k) {
    switch (k) {
        case BackgroundKind::flat: return "flat";
        case BackgroundKind::gradient: return "gradient";
        case BackgroundKind::checker: return "checker";
    }
    return "?";
}
inline const char* to_string(LineartMode m) {
    switch (m) {
        case LineartMode::oracle: return "oracle";
        case LineartMode::leaky: return "leaky";
        case LineartMode::edge: return "edge";
    }
    return "?";
}

ShapeKind parse_shape_kind(const std::string& s);
BackgroundKind parse_background_kind(const std::string& s);
LineartMode parse_lineart_mode(const std::string& s);

}  // namespace linecolor::synthgen
