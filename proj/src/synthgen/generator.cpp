#include "synthgen/generator.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "synthgen/shapes.hpp"

namespace linecolor::synthgen {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    h = h - std::floor(h);
    double c = v * s;
    double hp = h * 6.0;
    double x = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
    double r = 0, g = 0, b = 0;
    if (hp < 1) { r = c; g = x; }
    else if (hp < 2) { r = x; g = c; }
    else if (hp < 3) { g = c; b = x; }
    else if (hp < 4) { g = x; b = c; }
    else if (hp < 5) { r = x; b = c; }
    else { r = c; b = x; }
    double m = v - c;
    return {r + m, g + m, b + m};
}

namespace {

std::array<double, 3> sample_pastel(Rng& rng) {
    return hsv_to_rgb(rng.uniform(), rng.uniform(0.03, 0.15), rng.uniform(0.86, 0.98));
}

// Moderately saturated palette: each channel tracks overall brightness, which
// keeps sprite fills anime-flat while staying mutually distinguishable.
std::array<double, 3> sample_fill(Rng& rng) {
    return hsv_to_rgb(rng.uniform(), rng.uniform(0.25, 0.65), rng.uniform(0.30, 0.95));
}

constexpr double kMinFillDistance = 0.2;  // pairwise max-channel distance

std::array<double, 2> anchor_world(const SpriteSpec& spec, const std::array<double, 2>& local, double tau) {
    auto c = spec.motion.center(tau);
    double s = spec.motion.scale(tau);
    double a = spec.motion.angle(tau);
    double ca = std::cos(a), sa = std::sin(a);
    double lx = local[0] * s, ly = local[1] * s;
    return {c[0] + ca * lx - sa * ly, c[1] + sa * lx + ca * ly};
}

// Fraction of the sprite's bounding square that lies inside the canvas
// [-0.5, W-0.5] x [-0.5, H-0.5].
double inside_fraction(const SpriteSpec& spec, double tau, int w, int h) {
    auto c = spec.motion.center(tau);
    double r = shape_outradius(spec) * spec.motion.scale(tau) + spec.outline_width * 0.5 + kAntialiasWidth;
    double x0 = c[0] - r, x1 = c[0] + r;
    double y0 = c[1] - r, y1 = c[1] + r;
    double ox = std::max(0.0, std::min(x1, w - 0.5) - std::max(x0, -0.5));
    double oy = std::max(0.0, std::min(y1, h - 0.5) - std::max(y0, -0.5));
    return (ox * oy) / ((x1 - x0) * (y1 - y0));
}

bool motion_ok(const SpriteSpec& spec, const GenConfig& cfg) {
    if (inside_fraction(spec, -static_cast<double>(cfg.reference_offset), cfg.w, cfg.h) < 0.8) return false;
    for (int t = 0; t < cfg.t; ++t)
        if (inside_fraction(spec, t, cfg.w, cfg.h) < 0.8) return false;
    return true;
}

struct RenderedFrame {
    Image img;
    Sketch sketch;
    Mask mask;
    Grid<std::int16_t> owner;  // topmost sprite covering the pixel, -1 none
};

std::array<double, 3> background_color(const Background& bg, int y, int x, int w, int h) {
    switch (bg.kind) {
        case BackgroundKind::flat: return bg.color_a;
        case BackgroundKind::gradient: {
            double t = bg.horizontal ? (w > 1 ? double(x) / (w - 1) : 0.0) : (h > 1 ? double(y) / (h - 1) : 0.0);
            return {bg.color_a[0] + t * (bg.color_b[0] - bg.color_a[0]),
                    bg.color_a[1] + t * (bg.color_b[1] - bg.color_a[1]),
                    bg.color_a[2] + t * (bg.color_b[2] - bg.color_a[2])};
        }
        case BackgroundKind::checker: {
            int cy = y / bg.checker_cells, cx = x / bg.checker_cells;
            return ((cx + cy) % 2 == 0) ? bg.color_a : bg.color_b;
        }
    }
    return bg.color_a;
}

RenderedFrame render_scene(const GenConfig& cfg, const std::vector<SpriteSpec>& sprites, const Background& bg,
                           double tau) {
    RenderedFrame out;
    out.img = Image(cfg.h, cfg.w);
    out.sketch = Sketch(cfg.h, cfg.w, 255);
    out.mask = Mask(cfg.h, cfg.w, 0);
    out.owner = Grid<std::int16_t>(cfg.h, cfg.w, -1);

    std::vector<int> order(sprites.size());
    for (size_t i = 0; i < sprites.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return sprites[a].z_order < sprites[b].z_order; });

    const std::array<double, 3> ink{kInkLevel, kInkLevel, kInkLevel};
    for (int y = 0; y < cfg.h; ++y) {
        for (int x = 0; x < cfg.w; ++x) {
            std::array<double, 3> color = background_color(bg, y, x, cfg.w, cfg.h);
            int owner = -1;
            double owner_d = 0, owner_halfw = 0;
            for (int idx : order) {
                const SpriteSpec& sp = sprites[idx];
                double halfw = sp.outline_width * 0.5;
                double d = sprite_signed_distance(sp, tau, x, y);
                if (d > halfw + kAntialiasWidth) continue;
                if (d <= halfw) {
                    std::array<double, 3> sc;
                    if (d <= -(halfw + kAntialiasWidth)) {
                        sc = sp.fill;
                    } else if (d < -halfw) {
                        double f = (d + halfw + kAntialiasWidth) / kAntialiasWidth;
                        sc = {sp.fill[0] + f * (ink[0] - sp.fill[0]), sp.fill[1] + f * (ink[1] - sp.fill[1]),
                              sp.fill[2] + f * (ink[2] - sp.fill[2])};
                    } else {
                        sc = ink;
                    }
                    color = sc;
                    owner = idx;
                    owner_d = d;
                    owner_halfw = halfw;
                } else {
                    double alpha = (halfw + kAntialiasWidth - d) / kAntialiasWidth;
                    for (int c = 0; c < 3; ++c) color[c] = color[c] + alpha * (ink[c] - color[c]);
                }
            }
            out.img.set(y, x, snap_color(color));
            if (owner >= 0) {
                out.mask.at(y, x) = 1;
                out.owner.at(y, x) = static_cast<std::int16_t>(owner);
                if (owner_d >= -owner_halfw) out.sketch.at(y, x) = kSketchInk;
            }
        }
    }
    return out;
}

}  // namespace

Scene sample_scene(const GenConfig& cfg, Rng& rng) {
    if (cfg.t < 2) throw ConfigError("generate_clip: T must be >= 2");
    if (cfg.h < 32 || cfg.w < 32) throw ConfigError("generate_clip: H and W must be >= 32");
    if (cfg.n_sprites < 1 || cfg.n_sprites > 8) throw ConfigError("generate_clip: n_sprites must be in [1,8]");
    if (cfg.reference_offset < 0) throw ConfigError("generate_clip: reference_offset must be >= 0");

    Scene scene;
    Background& bg = scene.background;
    bg.kind = cfg.background;
    bg.color_a = snap_color(sample_pastel(rng));
    bg.color_b = snap_color(sample_pastel(rng));
    bg.checker_cells = 5 + rng.uniform_int(6);
    bg.horizontal = rng.uniform() < 0.5;

    std::vector<std::array<double, 3>> fills;
    for (int i = 0; i < cfg.n_sprites; ++i) {
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            auto c = snap_color(sample_fill(rng));
            ok = true;
            for (const auto& prev : fills)
                if (max_channel_dist(prev, c) < kMinFillDistance) { ok = false; break; }
            if (ok) fills.push_back(c);
        }
        if (!ok) throw RuntimeFailure("generate_clip: could not sample distinct fill colors");
    }

    double span = std::min(cfg.w, cfg.h);
    double horizon = cfg.reference_offset + cfg.t;  // frames the motion must stay bounded over
    for (int i = 0; i < cfg.n_sprites; ++i) {
        SpriteSpec sp;
        int kind = rng.uniform_int(3);
        sp.kind = kind == 0 ? ShapeKind::ellipse : (kind == 1 ? ShapeKind::polygon : ShapeKind::blob);
        double r = std::max(5.0, span * rng.uniform(0.13, 0.21)) * cfg.sprite_scale;
        sp.radius_x = r;
        sp.radius_y = r;
        if (sp.kind == ShapeKind::ellipse) {
            sp.radius_y = r * rng.uniform(0.65, 1.0);
            if (rng.uniform() < 0.5) std::swap(sp.radius_x, sp.radius_y);
        } else if (sp.kind == ShapeKind::polygon) {
            sp.polygon_sides = 3 + rng.uniform_int(5);
        } else {
            for (int k = 0; k < 3; ++k) {
                sp.blob_amp[k] = rng.uniform(-0.09, 0.09);
                sp.blob_phase[k] = rng.uniform(0.0, 2.0 * M_PI);
            }
        }
        sp.fill = fills[i];
        sp.outline_width = rng.uniform(1.0, 2.0);
        sp.z_order = i;

        // Fast failure when no placement can ever satisfy the 80% constraint.
        double r_out = shape_outradius(sp) * (1.0 + 0.12) + sp.outline_width * 0.5 + kAntialiasWidth;
        double best = (std::min(2 * r_out, double(cfg.w)) * std::min(2 * r_out, double(cfg.h))) / (4 * r_out * r_out);
        if (best < 0.8)
            throw ConfigError("generate_clip: sprite " + std::to_string(i) + " too large for " +
                              std::to_string(cfg.w) + "x" + std::to_string(cfg.h) +
                              " canvas, cannot keep 80% of its bounding box inside");

        bool placed = false;
        double vmax = 0.6 * span / std::max(horizon, 1.0);
        for (int attempt = 0; attempt < 400 && !placed; ++attempt) {
            MotionSpec m;
            m.x0 = rng.uniform(0.25, 0.75) * (cfg.w - 1);
            m.y0 = rng.uniform(0.25, 0.75) * (cfg.h - 1);
            m.vx = rng.uniform(-vmax, vmax);
            m.vy = rng.uniform(-vmax, vmax);
            m.wobble_amp_x = rng.uniform(0.0, 0.04 * span);
            m.wobble_amp_y = rng.uniform(0.0, 0.04 * span);
            m.wobble_freq_x = rng.uniform(0.02, 0.2);
            m.wobble_freq_y = rng.uniform(0.02, 0.2);
            m.wobble_phase_x = rng.uniform(0.0, 2.0 * M_PI);
            m.wobble_phase_y = rng.uniform(0.0, 2.0 * M_PI);
            m.rot0 = rng.uniform(0.0, 2.0 * M_PI);
            m.rot_rate = rng.uniform(-0.03, 0.03);
            m.scale_amp = rng.uniform(0.0, 0.12);
            m.scale_freq = rng.uniform(0.02, 0.15);
            m.scale_phase = rng.uniform(0.0, 2.0 * M_PI);
            sp.motion = m;
            placed = motion_ok(sp, cfg);
        }
        if (!placed)
            throw ConfigError("generate_clip: sprite " + std::to_string(i) +
                              " cannot satisfy the 80% inside constraint on this canvas");

        // Anchors: center plus two rings kept clear of the outline band so the
        // rounded pixel stays on the sprite at every frame.
        int n_anchors = 4 + rng.uniform_int(9);
        double margin = sp.outline_width * 0.5 + 2.2;
        double a_max = std::max(0.0, shape_inradius(sp) * (1.0 - sp.motion.scale_amp) - margin);
        sp.anchors.push_back({"c", {0.0, 0.0}});
        double golden = 2.399963229728653;
        for (int k = 1; k < n_anchors; ++k) {
            double ang = k * golden + rng.uniform(-0.2, 0.2);
            double rad = a_max * (k % 2 == 0 ? 0.55 : 0.95);
            sp.anchors.push_back({"p" + std::to_string(k), {rad * std::cos(ang), rad * std::sin(ang)}});
        }
        scene.sprites.push_back(std::move(sp));
    }
    return scene;
}

SyntheticClip render_clip(const GenConfig& cfg, std::vector<SpriteSpec> sprites, const Background& background,
                          std::uint64_t seed_echo) {
    SyntheticClip clip;
    clip.config = cfg;
    clip.seed = seed_echo;
    clip.background = background;
    clip.sprites = std::move(sprites);

    std::vector<Grid<std::int16_t>> owners;
    for (int t = 0; t < cfg.t; ++t) {
        RenderedFrame f = render_scene(cfg, clip.sprites, background, t);
        clip.frames.push_back(std::move(f.img));
        clip.outlines.push_back(std::move(f.sketch));
        clip.fg_masks.push_back(std::move(f.mask));
        owners.push_back(std::move(f.owner));
    }

    double ref_tau = -static_cast<double>(cfg.reference_offset);
    RenderedFrame ref = render_scene(cfg, clip.sprites, background, ref_tau);
    clip.reference.pixels = std::move(ref.img);
    clip.reference.fg_mask = std::move(ref.mask);
    clip.reference.has_background = true;

    for (size_t si = 0; si < clip.sprites.size(); ++si) {
        const SpriteSpec& sp = clip.sprites[si];
        double halfw = sp.outline_width * 0.5;
        for (const Anchor& a : sp.anchors) {
            AnchorTrack tr;
            tr.sprite = static_cast<int>(si);
            tr.name = a.name;

            auto rp = anchor_world(sp, a.local, ref_tau);
            tr.ref_pos = {round_half_up(rp[0]), round_half_up(rp[1])};
            tr.ref_valid = tr.ref_pos[0] >= 0 && tr.ref_pos[0] < cfg.w && tr.ref_pos[1] >= 0 && tr.ref_pos[1] < cfg.h;
            tr.ref_visible = tr.ref_valid && ref.owner.at(tr.ref_pos[1], tr.ref_pos[0]) == static_cast<int>(si);

            bool on_sprite_everywhere = true;
            for (int t = 0; t < cfg.t; ++t) {
                auto p = anchor_world(sp, a.local, t);
                std::array<int, 2> q{round_half_up(p[0]), round_half_up(p[1])};
                bool valid = q[0] >= 0 && q[0] < cfg.w && q[1] >= 0 && q[1] < cfg.h;
                bool visible = valid && owners[t].at(q[1], q[0]) == static_cast<int>(si);
                if (valid && sprite_signed_distance(sp, t, q[0], q[1]) > halfw) on_sprite_everywhere = false;
                tr.pos.push_back(q);
                tr.valid.push_back(valid ? 1 : 0);
                tr.visible.push_back(visible ? 1 : 0);
            }
            if (tr.ref_valid && sprite_signed_distance(sp, ref_tau, tr.ref_pos[0], tr.ref_pos[1]) > halfw)
                on_sprite_everywhere = false;
            // Margins in sample_scene keep anchors on the sprite; drop the rare
            // anchor that still lands off it so the registry invariant holds.
            if (on_sprite_everywhere) clip.registry.push_back(std::move(tr));
        }
    }
    return clip;
}

SyntheticClip generate_clip(const GenConfig& cfg, std::uint64_t seed) {
    Rng rng(seed);
    Scene scene = sample_scene(cfg, rng);
    return render_clip(cfg, std::move(scene.sprites), scene.background, seed);
}

std::vector<Mask> sprite_interior_masks(const SyntheticClip& clip, int sprite_index) {
    if (sprite_index < 0 || sprite_index >= static_cast<int>(clip.sprites.size()))
        throw DataError("sprite index " + std::to_string(sprite_index) + " out of range");
    const GenConfig& cfg = clip.config;
    const SpriteSpec& target = clip.sprites[sprite_index];
    double target_halfw = target.outline_width * 0.5;

    std::vector<int> order(clip.sprites.size());
    for (size_t i = 0; i < clip.sprites.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return clip.sprites[a].z_order < clip.sprites[b].z_order; });
    size_t target_rank = 0;
    for (size_t i = 0; i < order.size(); ++i)
        if (order[i] == sprite_index) target_rank = i;

    std::vector<Mask> masks;
    for (int t = 0; t < cfg.t; ++t) {
        Mask m(cfg.h, cfg.w, 0);
        for (int y = 0; y < cfg.h; ++y) {
            for (int x = 0; x < cfg.w; ++x) {
                double d = sprite_signed_distance(target, t, x, y);
                if (d > -(target_halfw + kAntialiasWidth)) continue;  // fill core only
                bool clean = true;
                for (size_t r = 0; r < order.size() && clean; ++r) {
                    if (order[r] == sprite_index) continue;
                    const SpriteSpec& other = clip.sprites[order[r]];
                    double od = sprite_signed_distance(other, t, x, y);
                    double reach = other.outline_width * 0.5 + kAntialiasWidth;
                    // sprites drawn later overwrite or rim-tint; earlier ones
                    // only matter if they could be drawn on top — they cannot
                    if (r > target_rank && od <= reach) clean = false;
                }
                if (clean) m.at(y, x) = 1;
            }
        }
        masks.push_back(std::move(m));
    }
    return masks;
}

}  // namespace linecolor::synthgen
