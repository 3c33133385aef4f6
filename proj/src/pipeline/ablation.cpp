#include "pipeline/ablation.hpp"

#include <algorithm>
#include <cmath>

#include "core/errors.hpp"
#include "eval/metrics.hpp"
#include "pipeline/example.hpp"
#include "synthgen/generator.hpp"
#include "synthgen/lineart.hpp"

namespace linecolor::pipeline {

std::string to_string(AblationArm a) {
    switch (a) {
        case AblationArm::full: return "full";
        case AblationArm::no_matching: return "no_matching";
        case AblationArm::no_binarize_aug: return "no_binarize_aug";
    }
    return "?";
}

AblationArm parse_ablation_arm(const std::string& s) {
    if (s == "full") return AblationArm::full;
    if (s == "no_matching") return AblationArm::no_matching;
    if (s == "no_binarize_aug") return AblationArm::no_binarize_aug;
    throw ConfigError("unknown ablation arm: " + s);
}

TrainConfig arm_config(AblationArm arm, TrainConfig base) {
    switch (arm) {
        case AblationArm::full:
            base.zero_point_maps = false;
            break;
        case AblationArm::no_matching:
            base.zero_point_maps = true;
            break;
        case AblationArm::no_binarize_aug:
            base.sketch_mode = synthgen::LineartMode::leaky;
            base.binarize = false;
            base.background_augment_p = 0.0;
            break;
    }
    return base;
}

namespace {

std::array<double, 3> sample_swap_fill(Rng& rng) {
    return snap_color(
        synthgen::hsv_to_rgb(rng.uniform(), rng.uniform(0.45, 0.75), rng.uniform(0.45, 0.95)));
}

double color_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double s = 0;
    for (int c = 0; c < 3; ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
    return std::sqrt(s);
}

std::vector<synthgen::Anchor> circle_anchors(double radius) {
    const double a = 0.55 * radius;
    return {{"c", {0, 0}}, {"e", {a, 0}}, {"w", {-a, 0}}, {"n", {0, -a}}, {"s", {0, a}}};
}

}  // namespace

std::vector<synthgen::SyntheticClip> make_swap_suite(int n_scenes, const synthgen::GenConfig& gen,
                                                     std::uint64_t seed) {
    if (n_scenes < 1) throw ConfigError("make_swap_suite: n_scenes must be >= 1");
    if (gen.t < 2) throw ConfigError("make_swap_suite: gen.t must be >= 2");
    const double radius = 0.14 * std::min(gen.h, gen.w) * gen.sprite_scale;
    const std::array<double, 2> p1{0.30 * gen.w, 0.38 * gen.h};
    const std::array<double, 2> p2{0.70 * gen.w, 0.62 * gen.h};

    std::vector<synthgen::SyntheticClip> clips;
    clips.reserve(static_cast<size_t>(n_scenes) * 2);
    Rng master(seed);
    for (int i = 0; i < n_scenes; ++i) {
        Rng rng = master.fork("scene").fork(static_cast<std::uint64_t>(i));
        auto c1 = sample_swap_fill(rng);
        auto c2 = sample_swap_fill(rng);
        for (int tries = 0; color_dist(c1, c2) < 0.45 && tries < 64; ++tries)
            c2 = sample_swap_fill(rng);
        synthgen::Background bg;
        bg.kind = synthgen::BackgroundKind::flat;
        bg.color_a = bg.color_b =
            snap_color(synthgen::hsv_to_rgb(rng.uniform(), rng.uniform(0.02, 0.08),
                                            rng.uniform(0.90, 0.97)));

        // Sprite 0 spends the clip near p2 but sat at p1 at reference time;
        // sprite 1 mirrors it. Their straight paths cross between the two
        // rendered windows, never inside one.
        auto make_sprite = [&](const std::array<double, 2>& clip_pos,
                               const std::array<double, 2>& ref_pos, int z) {
            synthgen::SpriteSpec sp;
            sp.kind = synthgen::ShapeKind::ellipse;
            sp.radius_x = sp.radius_y = radius;
            sp.z_order = z;
            sp.motion.x0 = clip_pos[0];
            sp.motion.y0 = clip_pos[1];
            sp.motion.vx = (clip_pos[0] - ref_pos[0]) / gen.reference_offset;
            sp.motion.vy = (clip_pos[1] - ref_pos[1]) / gen.reference_offset;
            sp.anchors = circle_anchors(radius);
            return sp;
        };
        synthgen::SpriteSpec lead = make_sprite(p2, p1, 0);
        synthgen::SpriteSpec trail = make_sprite(p1, p2, 1);

        for (int variant = 0; variant < 2; ++variant) {
            lead.fill = (variant == 0) ? c1 : c2;
            trail.fill = (variant == 0) ? c2 : c1;
            const std::uint64_t echo = seed * 1000003ULL + static_cast<std::uint64_t>(i) * 2 + variant;
            clips.push_back(synthgen::render_clip(gen, {lead, trail}, bg, echo));
        }
    }
    return clips;
}

AblationResult run_ablation(AblationArm arm, const AblationConfig& cfg) {
    cfg.base.validate();
    if (cfg.base.stage != Stage::dense)
        throw ConfigError("run_ablation: arms are dense-stage experiments");
    if (cfg.gen.t != cfg.base.clip_length)
        throw ConfigError("run_ablation: gen.t must equal the training clip_length so videos and "
                          "ground truth align");
    if (cfg.train_scenes < 1 || cfg.eval_scenes < 1)
        throw ConfigError("run_ablation: need at least one train and one eval scene");

    AblationResult out;
    out.arm = arm;
    out.cfg = arm_config(arm, cfg.base);

    std::vector<synthgen::SyntheticClip> train_clips =
        make_swap_suite(cfg.train_scenes, cfg.gen, cfg.data_seed);
    for (const auto& c : train_clips) out.train_clip_seeds.push_back(c.seed);

    TrainResult tr = train(train_clips, out.cfg, nullptr);
    out.model = std::move(tr.model);
    out.trace = std::move(tr.trace);
    out.notes = std::move(tr.report);

    std::vector<synthgen::SyntheticClip> eval_clips =
        make_swap_suite(cfg.eval_scenes, cfg.gen, cfg.eval_seed);
    InferConfig icfg = cfg.infer;
    icfg.zero_point_maps = out.cfg.zero_point_maps;
    icfg.diffusion = out.cfg.diffusion;

    out.report.masked = true;
    out.report.resolution = cfg.gen.h;
    const int t_frames = cfg.base.clip_length;
    for (const auto& clip : eval_clips) {
        out.eval_clip_seeds.push_back(clip.seed);
        std::vector<Sketch> sketches;
        sketches.reserve(static_cast<size_t>(t_frames));
        for (int t = 0; t < t_frames; ++t) {
            Sketch s = synthgen::extract_lineart(clip.frames[static_cast<size_t>(t)],
                                                 &clip.outlines[static_cast<size_t>(t)],
                                                 cfg.base.sketch_mode, cfg.base.leak_strength);
            sketches.push_back(cfg.eval_binarize ? conditioning::binarize(s) : s);
        }
        InferResult res = infer_dense(out.model, clip.reference, sketches, icfg, &clip);
        for (const auto& n : res.report.notes) out.notes.add(n);

        std::vector<Image> video = tensor_to_video(res.video);
        std::vector<Image> gt(clip.frames.begin(), clip.frames.begin() + t_frames);
        std::vector<Mask> masks(clip.fg_masks.begin(), clip.fg_masks.begin() + t_frames);

        eval::ClipMetrics cm;
        cm.clip_id = std::to_string(clip.seed);
        cm.psnr = eval::psnr(video, gt, &masks);
        cm.ssim = eval::ssim(video, gt, &masks);
        std::vector<double> region = eval::region_color_error(video, clip);
        double sum = 0;
        for (double r : region) sum += r;
        cm.region_color_error = region.empty() ? 0.0 : sum / static_cast<double>(region.size());
        cm.temporal_consistency = eval::temporal_consistency(video, gt);
        out.report.clips.push_back(std::move(cm));
    }
    return out;
}

}  // namespace linecolor::pipeline
