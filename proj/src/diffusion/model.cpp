#include "diffusion/model.hpp"

#include <cmath>
#include <set>

#include "core/blob_io.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"

namespace linecolor {

namespace {
constexpr const char* kCheckpointFormat = "lineflow.ckpt.v1";
}

std::string to_string(Stage s) { return s == Stage::dense ? "dense" : "sparse"; }

Stage parse_stage(const std::string& s) {
    if (s == "dense") return Stage::dense;
    if (s == "sparse") return Stage::sparse;
    throw ConfigError("unknown stage: " + s);
}

std::string to_string(TemporalKind k) {
    switch (k) {
        case TemporalKind::none: return "none";
        case TemporalKind::conv: return "conv";
        default: return "conv_attn";
    }
}

TemporalKind parse_temporal_kind(const std::string& s) {
    if (s == "none") return TemporalKind::none;
    if (s == "conv") return TemporalKind::conv;
    if (s == "conv_attn") return TemporalKind::conv_attn;
    throw ConfigError("unknown temporal mixing kind: " + s);
}

void DenoiserConfig::validate() const {
    if (base_channels < 1) throw ConfigError("base_channels must be positive");
    if (channel_mult.empty()) throw ConfigError("channel_mult must name at least one level");
    for (int m : channel_mult)
        if (m < 1) throw ConfigError("channel multipliers must be positive");
    if (temporal.size() != channel_mult.size())
        throw ConfigError("temporal kinds must match the number of levels");
    if (groups < 1) throw ConfigError("groups must be positive");
    for (int i = 0; i < levels(); ++i)
        if (channels(i) % groups != 0)
            throw ConfigError("level " + std::to_string(i) + " channels " +
                              std::to_string(channels(i)) + " not divisible by groups " +
                              std::to_string(groups));
    if (time_embed_dim < 4 || time_embed_dim % 2 != 0)
        throw ConfigError("time_embed_dim must be even and at least 4");
}

nlohmann::json DenoiserConfig::to_json() const {
    nlohmann::json j;
    j["base_channels"] = base_channels;
    j["channel_mult"] = channel_mult;
    std::vector<std::string> tk;
    for (TemporalKind k : temporal) tk.push_back(to_string(k));
    j["temporal"] = tk;
    j["mid_spatial_attention"] = mid_spatial_attention;
    j["time_embed_dim"] = time_embed_dim;
    j["groups"] = groups;
    return j;
}

DenoiserConfig DenoiserConfig::from_json(const nlohmann::json& j) {
    DenoiserConfig cfg;
    static const std::set<std::string> known = {"base_channels",         "channel_mult",
                                               "temporal",              "mid_spatial_attention",
                                               "time_embed_dim",        "groups"};
    for (auto& [key, value] : j.items())
        if (!known.count(key)) throw ConfigError("unknown denoiser config key: " + key);
    if (j.contains("base_channels")) cfg.base_channels = j.at("base_channels").get<int>();
    if (j.contains("channel_mult")) cfg.channel_mult = j.at("channel_mult").get<std::vector<int>>();
    if (j.contains("temporal")) {
        cfg.temporal.clear();
        for (const auto& s : j.at("temporal"))
            cfg.temporal.push_back(parse_temporal_kind(s.get<std::string>()));
    }
    if (j.contains("mid_spatial_attention"))
        cfg.mid_spatial_attention = j.at("mid_spatial_attention").get<bool>();
    if (j.contains("time_embed_dim")) cfg.time_embed_dim = j.at("time_embed_dim").get<int>();
    if (j.contains("groups")) cfg.groups = j.at("groups").get<int>();
    cfg.validate();
    return cfg;
}

ParamTensor& ParamStore::at(const std::string& name) {
    auto it = entries.find(name);
    if (it == entries.end()) throw RuntimeFailure("unknown parameter: " + name);
    return it->second;
}

const ParamTensor& ParamStore::at(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw RuntimeFailure("unknown parameter: " + name);
    return it->second;
}

void ParamStore::create(const std::string& name, Tensor init, bool decay) {
    if (entries.count(name)) throw RuntimeFailure("duplicate parameter: " + name);
    ParamTensor p;
    p.grad = Tensor(init.t, init.c, init.h, init.w);
    p.value = std::move(init);
    p.decay = decay;
    entries.emplace(name, std::move(p));
}

void ParamStore::zero_grads() {
    for (auto& [name, p] : entries) std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
}

size_t ParamStore::param_count() const {
    size_t n = 0;
    for (const auto& [name, p] : entries) n += p.value.size();
    return n;
}

double ParamStore::grad_norm() const {
    double acc = 0.0;
    for (const auto& [name, p] : entries)
        for (double g : p.grad.v) acc += g * g;
    return std::sqrt(acc);
}

namespace {

enum class InitKind { he_conv, linear, attn_proj, zero, gn_gamma, gn_beta, bias };

// Creates parameters with per-name forked rng streams so initialization is
// independent of registration order.
struct Registrar {
    ParamStore& ps;
    Rng& base;

    void tensor(const std::string& name, int t, int c, int h, int w, InitKind kind, bool decay) {
        Tensor val(t, c, h, w);
        switch (kind) {
            case InitKind::zero:
            case InitKind::bias:
            case InitKind::gn_beta:
                break;
            case InitKind::gn_gamma:
                std::fill(val.v.begin(), val.v.end(), 1.0);
                break;
            case InitKind::he_conv: {
                Rng r = base.fork(name);
                double std = std::sqrt(2.0 / (static_cast<double>(c) * h * w));
                for (double& x : val.v) x = r.normal() * std;
                break;
            }
            case InitKind::linear:
            case InitKind::attn_proj: {
                Rng r = base.fork(name);
                double std = std::sqrt(1.0 / static_cast<double>(c));
                for (double& x : val.v) x = r.normal() * std;
                break;
            }
        }
        ps.create(name, std::move(val), decay);
    }
    void conv(const std::string& pfx, int cin, int cout, int k, bool zero = false) {
        tensor(pfx + ".w", cout, cin, k, k, zero ? InitKind::zero : InitKind::he_conv, true);
        tensor(pfx + ".b", 1, cout, 1, 1, InitKind::bias, false);
    }
    void lin(const std::string& pfx, int in, int out) {
        tensor(pfx + ".w", out, in, 1, 1, InitKind::linear, true);
        tensor(pfx + ".b", 1, out, 1, 1, InitKind::bias, false);
    }
    void gn(const std::string& pfx, int c) {
        tensor(pfx + ".gamma", 1, c, 1, 1, InitKind::gn_gamma, false);
        tensor(pfx + ".beta", 1, c, 1, 1, InitKind::gn_beta, false);
    }
    void attn(const std::string& pfx, int c) {
        gn(pfx + ".gn", c);
        for (const char* p : {"wq", "wk", "wv", "wo"})
            tensor(pfx + "." + p, c, c, 1, 1, InitKind::attn_proj, true);
        for (const char* p : {"bq", "bk", "bv", "bo"})
            tensor(pfx + "." + p, 1, c, 1, 1, InitKind::bias, false);
    }
    void resblock(const std::string& pfx, int in, int out, int temb_dim) {
        gn(pfx + ".gn1", in);
        conv(pfx + ".conv1", in, out, 3);
        lin(pfx + ".temb", temb_dim, out);
        gn(pfx + ".gn2", out);
        conv(pfx + ".conv2", out, out, 3);
        if (in != out) conv(pfx + ".skip", in, out, 1);
    }
    void tblock(const std::string& pfx, int c, bool with_attn) {
        gn(pfx + ".tc.gn", c);
        conv(pfx + ".tc", 3 * c, c, 1);
        if (with_attn) attn(pfx + ".tattn", c);
    }
};

void register_params(ParamStore& ps, const DenoiserConfig& cfg, Stage stage, Rng& base) {
    Registrar reg{ps, base};
    int e2 = cfg.time_embed_dim * 2;
    reg.lin("time.l1", cfg.time_embed_dim, e2);
    reg.lin("time.l2", e2, e2);
    int ch0 = cfg.channels(0);
    reg.conv("den.stem", cfg.main_in_channels(), ch0, 3);
    reg.conv("ctl.stem", cfg.control_in_channels(stage), ch0, 3);
    int levels = cfg.levels();
    for (int i = 0; i < levels; ++i) {
        int ch = cfg.channels(i);
        std::string li = std::to_string(i);
        reg.resblock("den.enc" + li + ".res", ch, ch, e2);
        reg.resblock("ctl.enc" + li + ".res", ch, ch, e2);
        TemporalKind tk = cfg.temporal[static_cast<size_t>(i)];
        if (tk != TemporalKind::none) {
            bool wa = tk == TemporalKind::conv_attn;
            reg.tblock("den.enc" + li, ch, wa);
            reg.tblock("ctl.enc" + li, ch, wa);
        }
        reg.conv("fuse" + li, ch, ch, 1, /*zero=*/true);
        if (i < levels - 1) {
            reg.conv("den.down" + li, ch, cfg.channels(i + 1), 3);
            reg.conv("ctl.down" + li, ch, cfg.channels(i + 1), 3);
        }
    }
    int chl = cfg.channels(levels - 1);
    if (cfg.mid_spatial_attention) reg.attn("den.mid.sattn", chl);
    reg.resblock("den.mid.res2", chl, chl, e2);
    for (int i = levels - 2; i >= 0; --i) {
        std::string li = std::to_string(i);
        int ch = cfg.channels(i);
        reg.conv("den.dec" + li + ".up", cfg.channels(i + 1), ch, 3);
        reg.resblock("den.dec" + li + ".res", 2 * ch, ch, e2);
        TemporalKind tk = cfg.temporal[static_cast<size_t>(i)];
        if (tk != TemporalKind::none)
            reg.tblock("den.dec" + li, ch, tk == TemporalKind::conv_attn);
    }
    reg.gn("den.out.gn", ch0);
    reg.conv("den.out.conv", ch0, 3, 3, /*zero=*/true);
}

std::vector<double> sin_embedding(int t_index, int dim) {
    int half = dim / 2;
    std::vector<double> emb(static_cast<size_t>(dim));
    for (int i = 0; i < half; ++i) {
        double f = std::exp(-std::log(10000.0) * i / (half - 1));
        emb[static_cast<size_t>(i)] = std::sin(t_index * f);
        emb[static_cast<size_t>(half + i)] = std::cos(t_index * f);
    }
    return emb;
}

struct Builder {
    Tape& tp;
    const ParamStore& ps;
    ParamStore* sinks;  // non-null when gradients are wanted
    const DenoiserConfig& cfg;
    Var temb{-1};
    std::map<std::string, Var> leaf;

    Var P(const std::string& name) {
        auto it = leaf.find(name);
        if (it != leaf.end()) return it->second;
        Var v = sinks ? tp.param(ps.at(name).value, &sinks->at(name).grad)
                      : tp.input(ps.at(name).value);
        leaf.emplace(name, v);
        return v;
    }
    Var conv(const std::string& pfx, Var x, int stride, int pad) {
        return tp.conv2d(x, P(pfx + ".w"), P(pfx + ".b"), stride, pad);
    }
    Var gnorm(const std::string& pfx, Var x) {
        return tp.group_norm(x, P(pfx + ".gamma"), P(pfx + ".beta"), cfg.groups);
    }
    Var resblock(const std::string& pfx, Var x) {
        Var h = gnorm(pfx + ".gn1", x);
        h = tp.silu(h);
        h = conv(pfx + ".conv1", h, 1, 1);
        Var tb = tp.linear(temb, P(pfx + ".temb.w"), P(pfx + ".temb.b"));
        h = tp.add_channel_bias(h, tb);
        h = gnorm(pfx + ".gn2", h);
        h = tp.silu(h);
        h = conv(pfx + ".conv2", h, 1, 1);
        Var sk = ps.entries.count(pfx + ".skip.w") ? conv(pfx + ".skip", x, 1, 0) : x;
        return tp.add(h, sk);
    }
    Var attnblock(const std::string& pfx, Var x, bool temporal) {
        Var a = gnorm(pfx + ".gn", x);
        a = tp.attention(a, P(pfx + ".wq"), P(pfx + ".bq"), P(pfx + ".wk"), P(pfx + ".bk"),
                         P(pfx + ".wv"), P(pfx + ".bv"), P(pfx + ".wo"), P(pfx + ".bo"),
                         temporal);
        return tp.add(x, a);
    }
    Var tblock(const std::string& pfx, Var x, bool with_attn) {
        Var t = gnorm(pfx + ".tc.gn", x);
        t = tp.silu(t);
        t = tp.gather3(t);
        t = conv(pfx + ".tc", t, 1, 0);
        x = tp.add(x, t);
        if (with_attn) x = attnblock(pfx + ".tattn", x, /*temporal=*/true);
        return x;
    }
};

void validate_denoise_inputs(const DenoiserConfig& cfg, Stage stage, const Tensor& z_t,
                             int t_index, const Tensor& reference, const Tensor& controls) {
    if (t_index < 1) throw ConfigError("timestep index must be at least 1");
    if (z_t.t < 1) throw DataError("noisy input needs at least one frame");
    if (z_t.c != 3)
        throw DataError("noisy input must have 3 channels, got " + std::to_string(z_t.c));
    if (reference.t != 1 || reference.c != 3 || reference.h != z_t.h || reference.w != z_t.w)
        throw DataError("reference must be [1,3," + std::to_string(z_t.h) + "," +
                        std::to_string(z_t.w) + "], got " + reference.shape_str());
    if (controls.t != z_t.t || controls.h != z_t.h || controls.w != z_t.w)
        throw DataError("control tensor frame dims " + controls.shape_str() +
                        " do not match noisy input " + z_t.shape_str());
    int expect = cfg.control_in_channels(stage);
    if (controls.c != expect) {
        std::string layout = stage == Stage::dense
                                 ? "sketch + point-map pair + reference rgb"
                                 : "sketch + point-map pair + trajectory heatmap + reference rgb";
        throw DataError("control tensor has " + std::to_string(controls.c) + " channels but " +
                        to_string(stage) + " stage expects " + std::to_string(expect) + " (" +
                        layout + ")");
    }
    int down = 1 << (cfg.levels() - 1);
    if (z_t.h % down != 0 || z_t.w % down != 0)
        throw DataError("spatial size " + std::to_string(z_t.h) + "x" + std::to_string(z_t.w) +
                        " must be divisible by " + std::to_string(down));
}

Var build_eps(Tape& tp, const ModelState& state, ParamStore* sinks, const Tensor& z_t,
              int t_index, const Tensor& reference, const Tensor& controls) {
    const DenoiserConfig& cfg = state.config;
    validate_denoise_inputs(cfg, state.stage, z_t, t_index, reference, controls);
    Builder bd{tp, state.params, sinks, cfg, Var{-1}, {}};

    Var sin_in = tp.input(vector_tensor(sin_embedding(t_index, cfg.time_embed_dim)));
    Var te = tp.linear(sin_in, bd.P("time.l1.w"), bd.P("time.l1.b"));
    te = tp.silu(te);
    bd.temb = tp.linear(te, bd.P("time.l2.w"), bd.P("time.l2.b"));

    Var z = tp.input(z_t);
    Var ref = tp.input(reference);
    Var main = tp.concat_channels(z, tp.replicate_frames(ref, z_t.t));
    Var h = bd.conv("den.stem", main, 1, 1);
    Var c = bd.conv("ctl.stem", tp.input(controls), 1, 1);

    int levels = cfg.levels();
    std::vector<Var> skips(static_cast<size_t>(levels), Var{-1});
    for (int i = 0; i < levels; ++i) {
        std::string li = std::to_string(i);
        TemporalKind tk = cfg.temporal[static_cast<size_t>(i)];
        bool wa = tk == TemporalKind::conv_attn;
        h = bd.resblock("den.enc" + li + ".res", h);
        c = bd.resblock("ctl.enc" + li + ".res", c);
        if (tk != TemporalKind::none) {
            h = bd.tblock("den.enc" + li, h, wa);
            c = bd.tblock("ctl.enc" + li, c, wa);
        }
        h = tp.add(h, bd.conv("fuse" + li, c, 1, 0));
        if (i < levels - 1) {
            skips[static_cast<size_t>(i)] = h;
            h = bd.conv("den.down" + li, h, 2, 1);
            c = bd.conv("ctl.down" + li, c, 2, 1);
        }
    }
    if (cfg.mid_spatial_attention) h = bd.attnblock("den.mid.sattn", h, /*temporal=*/false);
    h = bd.resblock("den.mid.res2", h);
    for (int i = levels - 2; i >= 0; --i) {
        std::string li = std::to_string(i);
        h = tp.upsample2x(h);
        h = bd.conv("den.dec" + li + ".up", h, 1, 1);
        h = tp.concat_channels(h, skips[static_cast<size_t>(i)]);
        h = bd.resblock("den.dec" + li + ".res", h);
        TemporalKind tk = cfg.temporal[static_cast<size_t>(i)];
        if (tk != TemporalKind::none)
            h = bd.tblock("den.dec" + li, h, tk == TemporalKind::conv_attn);
    }
    h = bd.gnorm("den.out.gn", h);
    h = tp.silu(h);
    h = bd.conv("den.out.conv", h, 1, 1);
    return h;
}

}  // namespace

ModelState init_model(const DenoiserConfig& cfg, Stage stage, std::uint64_t seed) {
    cfg.validate();
    ModelState st;
    st.config = cfg;
    st.stage = stage;
    Rng base(seed);
    register_params(st.params, cfg, stage, base);
    return st;
}

void randomize_all_params(ModelState& state, std::uint64_t seed) {
    Rng base(seed);
    for (auto& [name, p] : state.params.entries) {
        Rng r = base.fork(name);
        bool is_gamma = name.size() >= 6 && name.compare(name.size() - 6, 6, ".gamma") == 0;
        for (double& x : p.value.v) x = (is_gamma ? 1.0 : 0.0) + 0.15 * r.normal();
    }
}

Tensor denoise(const ModelState& state, const Tensor& z_t, int t_index, const Tensor& reference,
               const Tensor& controls) {
    Tape tp;
    Var out = build_eps(tp, state, nullptr, z_t, t_index, reference, controls);
    return tp.val(out);
}

double loss_and_grads(ModelState& state, const Tensor& z_t, int t_index,
                      const Tensor& eps_target, const Tensor& reference,
                      const Tensor& controls) {
    if (!eps_target.same_shape(z_t))
        throw DataError("noise target shape " + eps_target.shape_str() +
                        " does not match noisy input " + z_t.shape_str());
    Tape tp;
    Var eps_hat = build_eps(tp, state, &state.params, z_t, t_index, reference, controls);
    Var loss = tp.mse(eps_hat, tp.input(eps_target));
    double value = tp.val(loss).v[0];
    if (!std::isfinite(value))
        throw RuntimeFailure("non-finite loss at model step " + std::to_string(state.step) +
                             ", timestep " + std::to_string(t_index));
    tp.backward(loss);
    double gn = state.params.grad_norm();
    if (!std::isfinite(gn))
        throw RuntimeFailure("non-finite gradients at model step " + std::to_string(state.step) +
                             ", timestep " + std::to_string(t_index) + ", loss " +
                             std::to_string(value));
    return value;
}

void save_checkpoint(const std::string& path, const ModelState& state, bool include_optimizer) {
    BlobFile bf;
    bf.meta["format"] = kCheckpointFormat;
    bf.meta["stage"] = to_string(state.stage);
    bf.meta["step"] = state.step;
    bf.meta["config"] = state.config.to_json();
    bf.meta["optimizer"] = include_optimizer;
    for (const auto& [name, p] : state.params.entries) {
        std::vector<int> shape = {p.value.t, p.value.c, p.value.h, p.value.w};
        bf.put("p/" + name, shape, p.value.v);
        if (include_optimizer) {
            if (p.m.v.empty() || p.s.v.empty())
                throw RuntimeFailure("optimizer state missing for parameter " + name +
                                     "; run at least one update before saving it");
            bf.put("m/" + name, shape, p.m.v);
            bf.put("s/" + name, shape, p.s.v);
        }
    }
    bf.save(path);
}

ModelState load_checkpoint(const std::string& path) {
    BlobFile bf = BlobFile::load(path);
    if (!bf.meta.contains("format") || bf.meta["format"] != kCheckpointFormat)
        throw DataError("not a model checkpoint: " + path);
    DenoiserConfig cfg = DenoiserConfig::from_json(bf.meta.at("config"));
    Stage stage = parse_stage(bf.meta.at("stage").get<std::string>());
    ModelState st = init_model(cfg, stage, 0);
    st.step = bf.meta.at("step").get<std::int64_t>();
    bool with_opt = bf.meta.value("optimizer", false);
    size_t expected = 0;
    for (auto& [name, p] : st.params.entries) {
        const BlobEntry& e = bf.get("p/" + name);
        std::vector<int> shape = {p.value.t, p.value.c, p.value.h, p.value.w};
        if (e.shape != shape)
            throw DataError("checkpoint tensor " + name + " has the wrong shape for this config");
        p.value.v = e.data;
        ++expected;
        if (with_opt) {
            const BlobEntry& em = bf.get("m/" + name);
            const BlobEntry& es = bf.get("s/" + name);
            if (em.shape != shape || es.shape != shape)
                throw DataError("checkpoint optimizer state for " + name + " has the wrong shape");
            p.m = Tensor(p.value.t, p.value.c, p.value.h, p.value.w);
            p.m.v = em.data;
            p.s = p.m;
            p.s.v = es.data;
            expected += 2;
        }
    }
    if (bf.entries.size() != expected)
        throw DataError("checkpoint holds " + std::to_string(bf.entries.size()) +
                        " tensors but this config expects " + std::to_string(expected));
    return st;
}

ModelState adapt_dense_to_sparse(const ModelState& dense) {
    if (dense.stage != Stage::dense)
        throw ConfigError("sparse adaptation needs a dense-stage model");
    ModelState sp = init_model(dense.config, Stage::sparse, 0);
    for (auto& [name, p] : sp.params.entries) {
        const ParamTensor& src = dense.params.at(name);
        if (name == "ctl.stem.w") {
            // Insert a zero-filled input channel for the heatmap plane.
            for (int co = 0; co < p.value.t; ++co)
                for (int ci = 0; ci < p.value.c; ++ci) {
                    int src_ci = ci < kHeatmapChannelIndex ? ci
                                 : ci == kHeatmapChannelIndex ? -1
                                                              : ci - 1;
                    for (int ky = 0; ky < p.value.h; ++ky)
                        for (int kx = 0; kx < p.value.w; ++kx)
                            p.value.at(co, ci, ky, kx) =
                                src_ci < 0 ? 0.0 : src.value.at(co, src_ci, ky, kx);
                }
        } else {
            if (!src.value.same_shape(p.value))
                throw RuntimeFailure("sparse adaptation shape mismatch for " + name);
            p.value = src.value;
        }
    }
    sp.step = 0;
    return sp;
}

}  // namespace linecolor
