#include "synthgen/clip_io.hpp"

#include <fstream>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/image_io.hpp"

namespace linecolor::synthgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_name(const char* stem, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04d.png", stem, i);
    return buf;
}

json color_json(const std::array<double, 3>& c) { return json::array({c[0], c[1], c[2]}); }

std::array<double, 3> color_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw DataError("clip metadata: expected 3-element color array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json motion_json(const MotionSpec& m) {
    return json{{"x0", m.x0},
                {"y0", m.y0},
                {"vx", m.vx},
                {"vy", m.vy},
                {"wobble_amp_x", m.wobble_amp_x},
                {"wobble_amp_y", m.wobble_amp_y},
                {"wobble_freq_x", m.wobble_freq_x},
                {"wobble_freq_y", m.wobble_freq_y},
                {"wobble_phase_x", m.wobble_phase_x},
                {"wobble_phase_y", m.wobble_phase_y},
                {"rot0", m.rot0},
                {"rot_rate", m.rot_rate},
                {"scale_amp", m.scale_amp},
                {"scale_freq", m.scale_freq},
                {"scale_phase", m.scale_phase}};
}

MotionSpec motion_from(const json& j) {
    MotionSpec m;
    m.x0 = j.at("x0").get<double>();
    m.y0 = j.at("y0").get<double>();
    m.vx = j.at("vx").get<double>();
    m.vy = j.at("vy").get<double>();
    m.wobble_amp_x = j.at("wobble_amp_x").get<double>();
    m.wobble_amp_y = j.at("wobble_amp_y").get<double>();
    m.wobble_freq_x = j.at("wobble_freq_x").get<double>();
    m.wobble_freq_y = j.at("wobble_freq_y").get<double>();
    m.wobble_phase_x = j.at("wobble_phase_x").get<double>();
    m.wobble_phase_y = j.at("wobble_phase_y").get<double>();
    m.rot0 = j.at("rot0").get<double>();
    m.rot_rate = j.at("rot_rate").get<double>();
    m.scale_amp = j.at("scale_amp").get<double>();
    m.scale_freq = j.at("scale_freq").get<double>();
    m.scale_phase = j.at("scale_phase").get<double>();
    return m;
}

Mask mask_from_gray(const Sketch& g) {
    Mask m(g.h, g.w, 0);
    for (size_t i = 0; i < g.v.size(); ++i) m.v[i] = g.v[i] > 0 ? 1 : 0;
    return m;
}

Sketch gray_from_mask(const Mask& m) {
    Sketch g(m.h, m.w, 0);
    for (size_t i = 0; i < m.v.size(); ++i) g.v[i] = m.v[i] ? 255 : 0;
    return g;
}

}  // namespace

void save_clip(const SyntheticClip& clip, const fs::path& dir) {
    fs::create_directories(dir);

    json meta;
    meta["format"] = "clip.v1";
    meta["seed"] = clip.seed;
    meta["config"] = json{{"t", clip.config.t},
                          {"h", clip.config.h},
                          {"w", clip.config.w},
                          {"n_sprites", clip.config.n_sprites},
                          {"reference_offset", clip.config.reference_offset},
                          {"background", to_string(clip.config.background)},
                          {"sprite_scale", clip.config.sprite_scale}};
    meta["background"] = json{{"kind", to_string(clip.background.kind)},
                              {"color_a", color_json(clip.background.color_a)},
                              {"color_b", color_json(clip.background.color_b)},
                              {"checker_cells", clip.background.checker_cells},
                              {"horizontal", clip.background.horizontal}};

    json sprites = json::array();
    for (const SpriteSpec& sp : clip.sprites) {
        json anchors = json::array();
        for (const Anchor& a : sp.anchors)
            anchors.push_back(json{{"name", a.name}, {"local", json::array({a.local[0], a.local[1]})}});
        sprites.push_back(json{{"kind", to_string(sp.kind)},
                               {"polygon_sides", sp.polygon_sides},
                               {"fill", color_json(sp.fill)},
                               {"outline_width", sp.outline_width},
                               {"z_order", sp.z_order},
                               {"radius_x", sp.radius_x},
                               {"radius_y", sp.radius_y},
                               {"blob_amp", json::array({sp.blob_amp[0], sp.blob_amp[1], sp.blob_amp[2]})},
                               {"blob_phase", json::array({sp.blob_phase[0], sp.blob_phase[1], sp.blob_phase[2]})},
                               {"motion", motion_json(sp.motion)},
                               {"anchors", anchors}});
    }
    meta["sprites"] = sprites;

    json registry = json::array();
    for (const AnchorTrack& tr : clip.registry) {
        json pos = json::array();
        for (const auto& p : tr.pos) pos.push_back(json::array({p[0], p[1]}));
        registry.push_back(json{{"sprite", tr.sprite},
                                {"name", tr.name},
                                {"ref_pos", json::array({tr.ref_pos[0], tr.ref_pos[1]})},
                                {"ref_valid", tr.ref_valid},
                                {"ref_visible", tr.ref_visible},
                                {"pos", pos},
                                {"valid", tr.valid},
                                {"visible", tr.visible}});
    }
    meta["registry"] = registry;
    meta["reference_has_background"] = clip.reference.has_background;

    std::ofstream out(dir / "metadata.json");
    if (!out) throw DataError("save_clip: cannot write " + (dir / "metadata.json").string());
    out << meta.dump(2) << "\n";
    out.close();

    for (int t = 0; t < clip.config.t; ++t) {
        save_rgb8((dir / frame_name("frame", t)).string(), clip.frames[t]);
        save_gray8((dir / frame_name("outline", t)).string(), clip.outlines[t]);
        save_gray8((dir / frame_name("mask", t)).string(), gray_from_mask(clip.fg_masks[t]));
    }
    save_rgb8((dir / "reference.png").string(), clip.reference.pixels);
    save_gray8((dir / "reference_mask.png").string(), gray_from_mask(clip.reference.fg_mask));
}

SyntheticClip load_clip(const fs::path& dir) {
    fs::path meta_path = dir / "metadata.json";
    std::ifstream in(meta_path);
    if (!in) throw DataError("load_clip: missing metadata file " + meta_path.string());
    json meta;
    try {
        in >> meta;
    } catch (const json::exception& e) {
        throw DataError("load_clip: bad metadata in " + meta_path.string() + ": " + e.what());
    }

    SyntheticClip clip;
    try {
        if (meta.value("format", "") != "clip.v1")
            throw DataError("load_clip: unsupported format tag in " + meta_path.string());
        clip.seed = meta.at("seed").get<std::uint64_t>();
        const json& jc = meta.at("config");
        clip.config.t = jc.at("t").get<int>();
        clip.config.h = jc.at("h").get<int>();
        clip.config.w = jc.at("w").get<int>();
        clip.config.n_sprites = jc.at("n_sprites").get<int>();
        clip.config.reference_offset = jc.at("reference_offset").get<int>();
        clip.config.background = parse_background_kind(jc.at("background").get<std::string>());
        clip.config.sprite_scale = jc.at("sprite_scale").get<double>();

        const json& jb = meta.at("background");
        clip.background.kind = parse_background_kind(jb.at("kind").get<std::string>());
        clip.background.color_a = color_from(jb.at("color_a"));
        clip.background.color_b = color_from(jb.at("color_b"));
        clip.background.checker_cells = jb.at("checker_cells").get<int>();
        clip.background.horizontal = jb.at("horizontal").get<bool>();

        for (const json& js : meta.at("sprites")) {
            SpriteSpec sp;
            sp.kind = parse_shape_kind(js.at("kind").get<std::string>());
            sp.polygon_sides = js.at("polygon_sides").get<int>();
            sp.fill = color_from(js.at("fill"));
            sp.outline_width = js.at("outline_width").get<double>();
            sp.z_order = js.at("z_order").get<int>();
            sp.radius_x = js.at("radius_x").get<double>();
            sp.radius_y = js.at("radius_y").get<double>();
            sp.blob_amp = color_from(js.at("blob_amp"));
            sp.blob_phase = color_from(js.at("blob_phase"));
            sp.motion = motion_from(js.at("motion"));
            for (const json& ja : js.at("anchors"))
                sp.anchors.push_back(Anchor{ja.at("name").get<std::string>(),
                                            {ja.at("local")[0].get<double>(), ja.at("local")[1].get<double>()}});
            clip.sprites.push_back(std::move(sp));
        }

        for (const json& jt : meta.at("registry")) {
            AnchorTrack tr;
            tr.sprite = jt.at("sprite").get<int>();
            tr.name = jt.at("name").get<std::string>();
            tr.ref_pos = {jt.at("ref_pos")[0].get<int>(), jt.at("ref_pos")[1].get<int>()};
            tr.ref_valid = jt.at("ref_valid").get<bool>();
            tr.ref_visible = jt.at("ref_visible").get<bool>();
            for (const json& jp : jt.at("pos")) tr.pos.push_back({jp[0].get<int>(), jp[1].get<int>()});
            tr.valid = jt.at("valid").get<std::vector<std::uint8_t>>();
            tr.visible = jt.at("visible").get<std::vector<std::uint8_t>>();
            if (tr.pos.size() != static_cast<size_t>(clip.config.t) || tr.valid.size() != tr.pos.size() ||
                tr.visible.size() != tr.pos.size())
                throw DataError("load_clip: registry entry length mismatch for anchor " + tr.name);
            clip.registry.push_back(std::move(tr));
        }
        clip.reference.has_background = meta.at("reference_has_background").get<bool>();
    } catch (const json::exception& e) {
        throw DataError("load_clip: bad metadata in " + meta_path.string() + ": " + e.what());
    }

    for (int t = 0; t < clip.config.t; ++t) {
        fs::path fp = dir / frame_name("frame", t);
        if (!fs::exists(fp))
            throw DataError("load_clip: metadata says " + std::to_string(clip.config.t) + " frames but " + fp.string() +
                            " is missing");
        clip.frames.push_back(load_rgb8(fp.string()));
        clip.outlines.push_back(load_gray8((dir / frame_name("outline", t)).string()));
        clip.fg_masks.push_back(mask_from_gray(load_gray8((dir / frame_name("mask", t)).string())));
    }
    clip.reference.pixels = load_rgb8((dir / "reference.png").string());
    clip.reference.fg_mask = mask_from_gray(load_gray8((dir / "reference_mask.png").string()));

    for (int t = 0; t < clip.config.t; ++t)
        if (clip.frames[t].h != clip.config.h || clip.frames[t].w != clip.config.w)
            throw DataError("load_clip: frame " + std::to_string(t) + " size does not match metadata");
    return clip;
}

}  // namespace linecolor::synthgen
