#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "core/errors.hpp"
#include "pipeline/ablation.hpp"
#include "pipeline/config.hpp"
#include "pipeline/example.hpp"
#include "pipeline/infer.hpp"
#include "pipeline/train.hpp"
#include "synthgen/generator.hpp"
#include "synthgen/lineart.hpp"

using namespace linecolor;
using namespace linecolor::pipeline;

namespace {

DenoiserConfig tiny_model() {
    DenoiserConfig c;
    c.base_channels = 4;
    c.channel_mult = {1, 2};
    c.temporal = {TemporalKind::conv, TemporalKind::conv_attn};
    c.mid_spatial_attention = true;
    c.time_embed_dim = 8;
    c.groups = 2;
    return c;
}

TrainConfig tiny_config(Stage stage = Stage::dense) {
    TrainConfig cfg;
    cfg.stage = stage;
    cfg.max_keypoints = (stage == Stage::dense) ? 50 : 5;
    cfg.clip_length = 4;
    cfg.total_steps = 3;
    cfg.learning_rate = 1e-3;
    cfg.seed = 11;
    cfg.sketch_mode = synthgen::LineartMode::oracle;
    cfg.model = tiny_model();
    cfg.diffusion.train_timesteps = 20;
    cfg.diffusion.sample_steps = 4;
    return cfg;
}

synthgen::GenConfig small_gen() {
    synthgen::GenConfig g;
    g.t = 4;
    g.h = 32;
    g.w = 32;
    return g;
}

synthgen::SyntheticClip small_clip(std::uint64_t seed = 3) {
    return synthgen::generate_clip(small_gen(), seed);
}

// A clip whose sprites carry no anchors: nothing to match anywhere.
synthgen::SyntheticClip anchorless_clip() {
    synthgen::GenConfig g = small_gen();
    synthgen::SpriteSpec sp;
    sp.kind = synthgen::ShapeKind::ellipse;
    sp.radius_x = sp.radius_y = 6;
    sp.fill = {0.8, 0.3, 0.2};
    sp.motion.x0 = 16;
    sp.motion.y0 = 16;
    synthgen::Background bg;
    return synthgen::render_clip(g, {sp}, bg, 77);
}

int count_non_neutral(const ConditionedExample& ex) {
    int n = 0;
    for (const Sketch& s : ex.sketches) {
        bool neutral = true;
        for (auto v : s.v)
            if (v != 255) { neutral = false; break; }
        if (!neutral) ++n;
    }
    return n;
}

std::filesystem::path temp_path(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("train config defaults follow the stage and round-trip through json") {
    TrainConfig dense = TrainConfig::from_json(nlohmann::json::object());
    CHECK(dense.stage == Stage::dense);
    CHECK(dense.max_keypoints == 50);
    CHECK(dense.clip_length == 14);
    CHECK(dense.binarize == true);
    CHECK(dense.background_augment_p == 0.5);
    CHECK(dense.learning_rate == 1e-4);

    TrainConfig sparse = TrainConfig::from_json({{"stage", "sparse"}});
    CHECK(sparse.max_keypoints == 5);
    TrainConfig forced = TrainConfig::from_json({{"stage", "sparse"}, {"max_keypoints", 9}});
    CHECK(forced.max_keypoints == 9);

    TrainConfig cfg = tiny_config();
    cfg.zero_point_maps = true;
    cfg.sketch_mode = synthgen::LineartMode::leaky;
    TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back == cfg);
}

TEST_CASE("train config rejects unknown keys and bad values") {
    CHECK_THROWS_AS(TrainConfig::from_json({{"stagee", "dense"}}), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"model", {{"base_channel", 8}}}}), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"diffusion", {{"sampler_kind", "ddim"}}}}),
                    ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"clip_length", 1}}), ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"learning_rate", 0.0}}), ConfigError);
    CHECK_THROWS_AS(
        TrainConfig::from_json({{"diffusion", {{"train_timesteps", 10}, {"sample_steps", 11}}}}),
        ConfigError);
    CHECK_THROWS_AS(TrainConfig::from_json({{"background_augment_p", 1.5}}), ConfigError);
}

TEST_CASE("dense examples use every available keypoint up to the cap") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    Rng rng(5);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());

    // expected: every registry anchor visible in both reference and frame 0
    correspond::MatcherSpec all;
    all.max_keypoints = 1 << 30;
    Sketch first = synthgen::extract_lineart(clip.frames[0], &clip.outlines[0],
                                             synthgen::LineartMode::oracle);
    auto full = correspond::match_reference(clip.reference, first, &clip.registry, all, 0);
    REQUIRE(full.n() > 0);
    REQUIRE(full.n() <= cfg.max_keypoints);
    CHECK(ex->matches.n() == full.n());

    // capped draw keeps exactly max_keypoints with labels relabeled 1..m
    cfg.max_keypoints = 3;
    Rng rng2(5);
    auto capped = make_example(clip, cfg, rng2);
    REQUIRE(capped.has_value());
    CHECK(capped->matches.n() == 3);
    std::set<int> labels;
    for (const auto& m : capped->matches.matches) labels.insert(m.label);
    CHECK(labels == std::set<int>{1, 2, 3});
    CHECK(capped->tracks.tracks.size() == 3);
}

TEST_CASE("dense example components line up with their sources") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    cfg.background_augment_p = 0.0;
    Rng rng(9);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());

    CHECK(ex->stage == Stage::dense);
    CHECK(ex->t_frames == 4);
    CHECK(static_cast<int>(ex->sketches.size()) == 4);
    CHECK(count_non_neutral(*ex) == 4);
    CHECK(ex->heatmaps.frames.empty());

    // z0 is the clip frame scaled to [-1,1]
    CHECK(ex->z0.t == 4);
    CHECK(ex->z0.at(1, 0, 7, 9) == doctest::Approx(2.0 * clip.frames[1].at(7, 9, 0) - 1.0));

    Tensor ctrl = ex->control_tensor();
    CHECK(ctrl.t == 4);
    CHECK(ctrl.c == kDenseControlChannels);
    CHECK(ctrl.h == 32);
    // channel 0 is the sketch in [0,1]; channels 3..5 are the reference colors
    CHECK(ctrl.at(2, 0, 5, 6) == ex->sketches[2].at(5, 6) / 255.0);
    CHECK(ctrl.at(3, 3, 11, 12) == ex->reference.pixels.at(11, 12, 0));
    CHECK(ctrl.at(0, 5, 20, 21) == ex->reference.pixels.at(20, 21, 2));

    // point-map planes carry each match at its pixels
    bool found_ref = false, found_frame = false;
    for (const auto& m : ex->matches.matches) {
        if (ctrl.at(0, 1, m.ref_point[1], m.ref_point[0]) > 0.0) found_ref = true;
        if (ctrl.at(0, 2, m.frame_point[1], m.frame_point[0]) > 0.0) found_frame = true;
    }
    CHECK(found_ref);
    CHECK(found_frame);
}

TEST_CASE("sketches are strictly binary when binarization is on") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    cfg.sketch_mode = synthgen::LineartMode::leaky;
    cfg.binarize = true;
    Rng rng(2);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());
    for (const Sketch& s : ex->sketches)
        for (auto v : s.v) CHECK((v == 0 || v == 255));

    cfg.binarize = false;
    Rng rng2(2);
    auto leaky = make_example(clip, cfg, rng2);
    REQUIRE(leaky.has_value());
    bool has_gray = false;
    for (const Sketch& s : leaky->sketches)
        for (auto v : s.v)
            if (v != 0 && v != 255) has_gray = true;
    CHECK(has_gray);
}

TEST_CASE("sparse examples keep exactly two real sketch frames and carry heatmaps") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config(Stage::sparse);
    Rng rng(4);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());

    CHECK(ex->stage == Stage::sparse);
    CHECK(count_non_neutral(*ex) == 2);
    CHECK(ex->sketch_present.front() == 1);
    CHECK(ex->sketch_present.back() == 1);
    for (size_t t = 1; t + 1 < ex->sketch_present.size(); ++t) CHECK(ex->sketch_present[t] == 0);
    CHECK(ex->matches.n() <= 5);
    CHECK(ex->heatmaps.t() == 4);

    // heatmap channel in the control stack is the rasterized heatmap sequence
    Tensor ctrl = ex->control_tensor();
    CHECK(ctrl.c == kSparseControlChannels);
    for (int t = 0; t < 4; ++t)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(ctrl.at(t, kHeatmapChannelIndex, y, x) ==
                      ex->heatmaps.frames[static_cast<size_t>(t)].at(y, x));
}

TEST_CASE("examples skip cleanly when no keypoints exist and error on short clips") {
    synthgen::SyntheticClip bare = anchorless_clip();
    TrainConfig cfg = tiny_config();
    Rng rng(1);
    Report report;
    auto ex = make_example(bare, cfg, rng, &report);
    CHECK_FALSE(ex.has_value());
    REQUIRE_FALSE(report.empty());
    bool noted = false;
    for (const auto& n : report.notes)
        if (n.find("skipped") != std::string::npos) noted = true;
    CHECK(noted);

    synthgen::SyntheticClip clip = small_clip();
    cfg.clip_length = 10;  // clip only has 4 frames
    Rng rng2(1);
    CHECK_THROWS_AS(make_example(clip, cfg, rng2), DataError);
}

TEST_CASE("make_example is deterministic and the ablation switch only zeroes point maps") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    Rng a(21), b(21);
    auto ex1 = make_example(clip, cfg, a);
    auto ex2 = make_example(clip, cfg, b);
    REQUIRE(ex1.has_value());
    REQUIRE(ex2.has_value());
    CHECK(ex1->z0 == ex2->z0);
    CHECK(ex1->control_tensor() == ex2->control_tensor());

    cfg.zero_point_maps = true;
    Rng c(21);
    auto ablated = make_example(clip, cfg, c);
    REQUIRE(ablated.has_value());
    CHECK(ablated->matches == ex1->matches);  // same draws, same data
    CHECK(ablated->sketches == ex1->sketches);
    bool all_zero = true;
    for (double v : ablated->point_maps.v)
        if (v != 0.0) all_zero = false;
    CHECK(all_zero);
    bool any_nonzero = false;
    for (double v : ex1->point_maps.v)
        if (v != 0.0) any_nonzero = true;
    CHECK(any_nonzero);
}

TEST_CASE("background augmentation responds to its probability") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    cfg.background_augment_p = 1.0;
    Rng rng(8);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());
    CHECK_FALSE(ex->reference.has_background);

    cfg.background_augment_p = 0.0;
    Rng rng2(8);
    auto plain = make_example(clip, cfg, rng2);
    REQUIRE(plain.has_value());
    CHECK(plain->reference.has_background);
    CHECK(plain->reference.pixels == clip.reference.pixels);
}

TEST_CASE("conditioned examples round-trip through the container format") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config(Stage::sparse);
    Rng rng(13);
    auto ex = make_example(clip, cfg, rng);
    REQUIRE(ex.has_value());

    auto path = temp_path("pipeline_example_roundtrip.bin");
    save_example(*ex, path.string());
    ConditionedExample back = load_example(path.string());
    std::filesystem::remove(path);

    CHECK(back.stage == ex->stage);
    CHECK(back.t_frames == ex->t_frames);
    CHECK(back.clip_seed == ex->clip_seed);
    CHECK(back.z0 == ex->z0);
    CHECK(back.sketches == ex->sketches);
    CHECK(back.sketch_present == ex->sketch_present);
    CHECK(back.matches == ex->matches);
    CHECK(back.tracks == ex->tracks);
    CHECK(back.point_maps.v == ex->point_maps.v);
    CHECK(back.heatmaps.sigma == ex->heatmaps.sigma);
    REQUIRE(back.heatmaps.frames.size() == ex->heatmaps.frames.size());
    for (size_t i = 0; i < back.heatmaps.frames.size(); ++i)
        CHECK(back.heatmaps.frames[i] == ex->heatmaps.frames[i]);
    CHECK(back.reference.pixels == ex->reference.pixels);
    CHECK(back.reference.fg_mask == ex->reference.fg_mask);
    CHECK(back.reference.has_background == ex->reference.has_background);
    CHECK(back.control_tensor() == ex->control_tensor());
}

TEST_CASE("loss trace flattens to a stable csv") {
    std::vector<TraceRow> trace = {{1, 0.5, 1e-4, Stage::dense}, {2, 0.25, 1e-4, Stage::dense}};
    CHECK(trace_to_csv(trace) ==
          "step,loss,lr,stage\n1,0.5,0.0001,dense\n2,0.25,0.0001,dense\n");
}

TEST_CASE("training runs deterministically and descends on an overfit clip") {
    std::vector<synthgen::SyntheticClip> data = {small_clip()};
    TrainConfig cfg = tiny_config();
    cfg.total_steps = 30;
    cfg.learning_rate = 2e-3;
    cfg.background_augment_p = 0.0;

    TrainResult a = train(data, cfg);
    TrainResult b = train(data, cfg);
    REQUIRE(a.trace.size() == 30);
    CHECK(a.trace == b.trace);
    CHECK(trace_to_csv(a.trace) == trace_to_csv(b.trace));
    for (const auto& [name, p] : a.model.params.entries)
        CHECK(p.value.v == b.model.params.at(name).value.v);
    CHECK(a.model.step == 30);
    CHECK(a.trace.front().step == 1);
    CHECK(a.trace.front().stage == Stage::dense);

    double head = 0, tail = 0;
    for (int i = 0; i < 10; ++i) {
        head += a.trace[static_cast<size_t>(i)].loss;
        tail += a.trace[a.trace.size() - 1 - static_cast<size_t>(i)].loss;
    }
    MESSAGE("first-10 mean loss = ", head / 10, ", last-10 mean loss = ", tail / 10);
    CHECK(tail < head);
}

TEST_CASE("training stage preconditions are enforced") {
    std::vector<synthgen::SyntheticClip> data = {small_clip()};
    TrainConfig sparse_cfg = tiny_config(Stage::sparse);
    CHECK_THROWS_AS(train(data, sparse_cfg), ConfigError);
    CHECK_THROWS_AS(train(data, sparse_cfg, nullptr), ConfigError);

    TrainConfig dense_cfg = tiny_config();
    dense_cfg.total_steps = 1;
    TrainResult dense = train(data, dense_cfg);

    ModelState sparse_state = adapt_dense_to_sparse(dense.model);
    CHECK_THROWS_AS(train(data, dense_cfg, &sparse_state), ConfigError);

    ModelState mismatched = dense.model;
    mismatched.config.base_channels = 8;
    TrainConfig other = dense_cfg;
    CHECK_THROWS_AS(train(data, other, &mismatched), ConfigError);

    CHECK_THROWS_AS(train({}, dense_cfg), DataError);
    std::vector<synthgen::SyntheticClip> bare = {anchorless_clip()};
    CHECK_THROWS_AS(train(bare, dense_cfg), DataError);
}

TEST_CASE("sparse training warm-starts from a dense checkpoint") {
    std::vector<synthgen::SyntheticClip> data = {small_clip()};
    TrainConfig dense_cfg = tiny_config();
    dense_cfg.total_steps = 2;
    TrainResult dense = train(data, dense_cfg);

    TrainConfig sparse_cfg = tiny_config(Stage::sparse);
    sparse_cfg.total_steps = 2;
    TrainResult sparse = train(data, sparse_cfg, &dense.model);
    CHECK(sparse.model.stage == Stage::sparse);
    CHECK(sparse.trace.front().step == 1);  // adapted models restart their step count
    CHECK(sparse.trace.front().stage == Stage::sparse);
    CHECK(sparse.model.step == 2);

    // resuming an already-sparse checkpoint continues the count
    TrainResult resumed = train(data, sparse_cfg, &sparse.model);
    CHECK(resumed.trace.front().step == 3);
}

TEST_CASE("dense inference reproduces exactly and survives an empty match set") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig cfg = tiny_config();
    cfg.total_steps = 1;
    TrainResult tr = train({clip}, cfg);

    std::vector<Sketch> sketches;
    for (int t = 0; t < 4; ++t) {
        Sketch s = synthgen::extract_lineart(clip.frames[static_cast<size_t>(t)],
                                             &clip.outlines[static_cast<size_t>(t)],
                                             synthgen::LineartMode::oracle);
        sketches.push_back(conditioning::binarize(s));
    }
    InferConfig icfg;
    icfg.diffusion = cfg.diffusion;
    icfg.sample.seed = 5;

    InferResult a = infer_dense(tr.model, clip.reference, sketches, icfg, &clip);
    CHECK(a.video.t == 4);
    CHECK(a.video.c == 3);
    CHECK(a.video.h == 32);
    CHECK(a.matches.n() > 0);
    for (double v : a.video.v) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }
    InferResult b = infer_dense(tr.model, clip.reference, sketches, icfg, &clip);
    CHECK(a.video == b.video);

    // no keypoints: still samples, with zero point-map planes and a warning
    synthgen::SyntheticClip bare = anchorless_clip();
    std::vector<Sketch> bare_sketches;
    for (int t = 0; t < 4; ++t)
        bare_sketches.push_back(synthgen::extract_lineart(bare.frames[static_cast<size_t>(t)],
                                                          &bare.outlines[static_cast<size_t>(t)],
                                                          synthgen::LineartMode::oracle));
    InferResult empty = infer_dense(tr.model, bare.reference, bare_sketches, icfg, &bare);
    CHECK(empty.video.t == 4);
    CHECK(empty.matches.n() == 0);
    bool warned = false;
    for (const auto& n : empty.report.notes)
        if (n.find("warning") != std::string::npos) warned = true;
    CHECK(warned);
    for (int t = 0; t < 4; ++t)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                CHECK(empty.controls.at(t, 1, y, x) == 0.0);
                CHECK(empty.controls.at(t, 2, y, x) == 0.0);
            }

    // stage mismatch
    ModelState sparse_state = adapt_dense_to_sparse(tr.model);
    CHECK_THROWS_AS(infer_dense(sparse_state, clip.reference, sketches, icfg, &clip), DataError);
}

TEST_CASE("sparse inference mirrors the conditioning module bit for bit") {
    synthgen::SyntheticClip clip = small_clip();
    TrainConfig dense_cfg = tiny_config();
    dense_cfg.total_steps = 1;
    TrainResult dense = train({clip}, dense_cfg);
    TrainConfig sparse_cfg = tiny_config(Stage::sparse);
    sparse_cfg.total_steps = 1;
    TrainResult sparse = train({clip}, sparse_cfg, &dense.model);

    const int t_frames = 4;
    auto sketch_at = [&](int t) {
        return conditioning::binarize(synthgen::extract_lineart(
            clip.frames[static_cast<size_t>(t)], &clip.outlines[static_cast<size_t>(t)],
            synthgen::LineartMode::oracle));
    };
    Sketch s_first = sketch_at(0), s_last = sketch_at(t_frames - 1);

    InferConfig icfg;
    icfg.diffusion = sparse_cfg.diffusion;
    icfg.sample.seed = 3;
    InferResult res = infer_sparse(sparse.model, clip.reference, s_first, s_last, t_frames, icfg, &clip);
    CHECK(res.video.t == t_frames);
    CHECK(res.matches.n() > 0);

    // independent reconstruction of the trajectory heatmaps
    auto m1 = correspond::match_reference(clip.reference, s_first, &clip.registry, icfg.matcher, 0);
    auto mT = correspond::match_reference(clip.reference, s_last, &clip.registry, icfg.matcher,
                                          t_frames - 1);
    conditioning::MatchSet joined;
    auto tracks = conditioning::interpolate_trajectories(m1, mT, t_frames, &joined);
    auto heat = conditioning::build_heatmaps(tracks, icfg.heatmap_sigma, 32, 32);
    REQUIRE(res.controls.c == kSparseControlChannels);
    for (int t = 0; t < t_frames; ++t)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                CHECK(res.controls.at(t, kHeatmapChannelIndex, y, x) ==
                      heat.frames[static_cast<size_t>(t)].at(y, x));

    // middle sketch channels are neutral paper
    for (int t = 1; t < t_frames - 1; ++t)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) CHECK(res.controls.at(t, 0, y, x) == 1.0);
    CHECK(res.tracks == tracks);

    // degenerate: no joinable keypoints
    synthgen::SyntheticClip bare = anchorless_clip();
    Sketch bare_s = synthgen::extract_lineart(bare.frames[0], &bare.outlines[0],
                                              synthgen::LineartMode::oracle);
    InferResult none = infer_sparse(sparse.model, bare.reference, bare_s, bare_s, t_frames, icfg, &bare);
    CHECK(none.matches.n() == 0);
    bool warned = false;
    for (const auto& n : none.report.notes)
        if (n.find("warning") != std::string::npos) warned = true;
    CHECK(warned);
    for (int t = 0; t < t_frames; ++t)
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x) {
                CHECK(none.controls.at(t, 1, y, x) == 0.0);
                CHECK(none.controls.at(t, 2, y, x) == 0.0);
                CHECK(none.controls.at(t, kHeatmapChannelIndex, y, x) == 0.0);
            }

    CHECK_THROWS_AS(infer_sparse(dense.model, clip.reference, s_first, s_last, t_frames, icfg, &clip),
                    DataError);
    CHECK_THROWS_AS(infer_sparse(sparse.model, clip.reference, s_first, s_last, 1, icfg, &clip),
                    DataError);
}

TEST_CASE("ablation arms differ from the baseline in exactly one component") {
    TrainConfig base = tiny_config();
    base.sketch_mode = synthgen::LineartMode::leaky;

    TrainConfig full = arm_config(AblationArm::full, base);
    CHECK(full == base);  // baseline already has the switch off

    TrainConfig nm = arm_config(AblationArm::no_matching, base);
    TrainConfig expect_nm = full;
    expect_nm.zero_point_maps = true;
    CHECK(nm == expect_nm);

    TrainConfig nb = arm_config(AblationArm::no_binarize_aug, base);
    TrainConfig expect_nb = full;
    expect_nb.binarize = false;
    expect_nb.background_augment_p = 0.0;
    CHECK(nb == expect_nb);

    CHECK(parse_ablation_arm("no_matching") == AblationArm::no_matching);
    CHECK(to_string(AblationArm::no_binarize_aug) == "no_binarize_aug");
    CHECK_THROWS_AS(parse_ablation_arm("nope"), ConfigError);
}

TEST_CASE("the swap suite pairs identical geometry with exchanged fills") {
    synthgen::GenConfig gen = small_gen();
    auto clips = make_swap_suite(3, gen, 42);
    REQUIRE(clips.size() == 6);

    for (int i = 0; i < 3; ++i) {
        const auto& a = clips[static_cast<size_t>(2 * i)];
        const auto& b = clips[static_cast<size_t>(2 * i + 1)];
        REQUIRE(a.sprites.size() == 2);
        // same geometry, fills exchanged
        CHECK(a.sprites[0].motion == b.sprites[0].motion);
        CHECK(a.sprites[1].motion == b.sprites[1].motion);
        CHECK(a.sprites[0].fill == b.sprites[1].fill);
        CHECK(a.sprites[1].fill == b.sprites[0].fill);
        CHECK(a.sprites[0].fill != a.sprites[1].fill);
        CHECK(a.background == b.background);
        // sketch geometry identical within the pair
        CHECK(a.outlines == b.outlines);

        // each sprite's reference-time position is the other's clip position
        const auto& m0 = a.sprites[0].motion;
        const auto& m1 = a.sprites[1].motion;
        auto r0 = m0.center(-gen.reference_offset);
        auto c1 = m1.center(0);
        CHECK(r0[0] == doctest::Approx(c1[0]).epsilon(1e-12));
        CHECK(r0[1] == doctest::Approx(c1[1]).epsilon(1e-12));
        auto r1 = m1.center(-gen.reference_offset);
        auto c0 = m0.center(0);
        CHECK(r1[0] == doctest::Approx(c0[0]).epsilon(1e-12));
        CHECK(r1[1] == doctest::Approx(c0[1]).epsilon(1e-12));

        // well-separated colors, matched keypoints exist on both sprites
        double d = 0;
        for (int c = 0; c < 3; ++c)
            d += (a.sprites[0].fill[c] - a.sprites[1].fill[c]) *
                 (a.sprites[0].fill[c] - a.sprites[1].fill[c]);
        CHECK(std::sqrt(d) >= 0.45);
        std::set<int> sprites_with_visible_anchors;
        for (const auto& tr : a.registry)
            if (tr.ref_visible && !tr.visible.empty() && tr.visible[0])
                sprites_with_visible_anchors.insert(tr.sprite);
        CHECK(sprites_with_visible_anchors == std::set<int>{0, 1});
    }

    // deterministic, and different seeds change the palette
    auto again = make_swap_suite(3, gen, 42);
    CHECK(clips[0].sprites[0].fill == again[0].sprites[0].fill);
    CHECK(clips[0].frames == again[0].frames);
    auto other = make_swap_suite(3, gen, 43);
    CHECK(clips[0].sprites[0].fill != other[0].sprites[0].fill);
}

TEST_CASE("ablation arms see identical data and produce comparable reports") {
    AblationConfig cfg;
    cfg.base = tiny_config();
    cfg.base.total_steps = 2;
    cfg.base.clip_length = 4;
    cfg.gen = small_gen();
    cfg.train_scenes = 1;
    cfg.eval_scenes = 1;
    cfg.infer.sample.seed = 1;

    AblationResult full = run_ablation(AblationArm::full, cfg);
    AblationResult nm = run_ablation(AblationArm::no_matching, cfg);
    CHECK(full.train_clip_seeds == nm.train_clip_seeds);
    CHECK(full.eval_clip_seeds == nm.eval_clip_seeds);
    CHECK(full.report.clips.size() == 2);
    CHECK(nm.report.clips.size() == 2);
    CHECK(full.report.clips[0].clip_id == nm.report.clips[0].clip_id);
    CHECK(full.cfg.zero_point_maps == false);
    CHECK(nm.cfg.zero_point_maps == true);
    CHECK(std::isfinite(full.report.mean_region_color_error()));
    CHECK(full.trace.size() == 2);

    // misaligned generation length is rejected before any work
    AblationConfig bad = cfg;
    bad.gen.t = 6;
    CHECK_THROWS_AS(run_ablation(AblationArm::full, bad), ConfigError);
}
