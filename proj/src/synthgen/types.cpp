#include "synthgen/types.hpp"

#include "core/errors.hpp"
#include "core/json_util.hpp"

namespace linecolor::synthgen {

ShapeKind parse_shape_kind(const std::string& s) {
    if (s == "ellipse") return ShapeKind::ellipse;
    if (s == "polygon") return ShapeKind::polygon;
    if (s == "blob") return ShapeKind::blob;
    throw ConfigError("unknown shape kind: " + s);
}

BackgroundKind parse_background_kind(const std::string& s) {
    if (s == "flat") return BackgroundKind::flat;
    if (s == "gradient") return BackgroundKind::gradient;
    if (s == "checker") return BackgroundKind::checker;
    throw ConfigError("unknown background kind: " + s);
}

LineartMode parse_lineart_mode(const std::string& s) {
    if (s == "oracle") return LineartMode::oracle;
    if (s == "leaky") return LineartMode::leaky;
    if (s == "edge") return LineartMode::edge;
    throw ConfigError("unknown line-art mode: " + s);
}

void GenConfig::validate() const {
    if (t < 1) throw ConfigError("gen.t must be >= 1");
    if (h < 8 || w < 8) throw ConfigError("gen.h and gen.w must be >= 8");
    if (n_sprites < 1) throw ConfigError("gen.n_sprites must be >= 1");
    if (reference_offset < 1) throw ConfigError("gen.reference_offset must be >= 1");
    if (!(sprite_scale > 0.0) || !std::isfinite(sprite_scale))
        throw ConfigError("gen.sprite_scale must be positive and finite");
}

nlohmann::json GenConfig::to_json() const {
    return {{"t", t},
            {"h", h},
            {"w", w},
            {"n_sprites", n_sprites},
            {"reference_offset", reference_offset},
            {"background", to_string(background)},
            {"sprite_scale", sprite_scale}};
}

GenConfig GenConfig::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"t", "h", "w", "n_sprites", "reference_offset", "background",
                            "sprite_scale"},
                        "gen");
    GenConfig c;
    read_if(j, "t", c.t);
    read_if(j, "h", c.h);
    read_if(j, "w", c.w);
    read_if(j, "n_sprites", c.n_sprites);
    read_if(j, "reference_offset", c.reference_offset);
    if (j.contains("background"))
        c.background = parse_background_kind(j.at("background").get<std::string>());
    read_if(j, "sprite_scale", c.sprite_scale);
    c.validate();
    return c;
}

}  // namespace linecolor::synthgen
