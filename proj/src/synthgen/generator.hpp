#pragma once

#include <cstdint>

#include "core/rng.hpp"
#include "synthgen/types.hpp"

namespace linecolor::synthgen {

// Hue in [0,1) (wrapped), saturation and value in [0,1].
std::array<double, 3> hsv_to_rgb(double h, double s, double v);

// Deterministic in (config, seed): samples sprite specs and a background,
// then renders frames, oracle outlines, masks, the reference image at
// -reference_offset, and the anchor registry.
SyntheticClip generate_clip(const GenConfig& config, std::uint64_t seed);

// Rendering layer: deterministic function of (config, sprites, background).
// generate_clip is sample_scene + render_clip; experiment suites build their
// own sprite specs and call this directly.
SyntheticClip render_clip(const GenConfig& config, std::vector<SpriteSpec> sprites, const Background& background,
                          std::uint64_t seed_echo);

struct Scene {
    std::vector<SpriteSpec> sprites;
    Background background;
};

Scene sample_scene(const GenConfig& config, Rng& rng);

// Per-frame mask of pixels that render as sprite_index's pure fill color:
// strictly inside the outline band, topmost at that pixel, and clear of every
// other sprite's antialiased rim. Evaluation-side ground truth for region
// color checks and leakage probes.
std::vector<Mask> sprite_interior_masks(const SyntheticClip& clip, int sprite_index);

// Ink value used for outline cores in rendered frames and oracle sketches.
constexpr double kInkLevel = 16.0 / 255.0;
constexpr std::uint8_t kSketchInk = 16;
constexpr double kAntialiasWidth = 0.8;  // px

}  // namespace linecolor::synthgen
