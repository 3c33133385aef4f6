#include "diffusion/tape.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>
#include <memory>

#include "core/errors.hpp"

namespace linecolor {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using CMapM = Eigen::Map<const MatRM>;
using MapV = Eigen::Map<Eigen::VectorXd>;
using CMapV = Eigen::Map<const Eigen::VectorXd>;

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw RuntimeFailure("tensor op contract violated: " + what);
}

int conv_out(int n, int k, int stride, int pad) { return (n + 2 * pad - k) / stride + 1; }

// col: [Cin*kh*kw, OH*OW] row-major, gathered from one [C,H,W] frame slab.
void im2col(const double* x, int c, int h, int w, int kh, int kw, int stride, int pad,
            MatRM& col) {
    int oh = conv_out(h, kh, stride, pad);
    int ow = conv_out(w, kw, stride, pad);
    col.resize(static_cast<Eigen::Index>(c) * kh * kw, static_cast<Eigen::Index>(oh) * ow);
    for (int cc = 0; cc < c; ++cc) {
        const double* plane = x + static_cast<size_t>(cc) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                double* row = col.data() +
                              static_cast<size_t>((cc * kh + ky) * kw + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        row[oy * ow + ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                                                ? plane[iy * w + ix]
                                                : 0.0;
                    }
                }
            }
        }
    }
}

// Scatter-add transpose of im2col into one [C,H,W] frame slab.
void col2im_add(const MatRM& col, int c, int h, int w, int kh, int kw, int stride, int pad,
                double* dx) {
    int oh = conv_out(h, kh, stride, pad);
    int ow = conv_out(w, kw, stride, pad);
    for (int cc = 0; cc < c; ++cc) {
        double* plane = dx + static_cast<size_t>(cc) * h * w;
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const double* row = col.data() +
                                    static_cast<size_t>((cc * kh + ky) * kw + kx) * oh * ow;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix < 0 || ix >= w) continue;
                        plane[iy * w + ix] += row[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Var Tape::push(Tensor val, bool needs) {
    nodes_.push_back(Node{std::move(val), Tensor{}, nullptr, needs});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Tape::grad(Var v) {
    Node& n = node(v);
    if (n.grad.v.empty()) {
        const Tensor& t = n.val;
        n.grad = Tensor(t.t, t.c, t.h, t.w);
    }
    return n.grad;
}

Var Tape::input(Tensor value) { return push(std::move(value), false); }

Var Tape::param(const Tensor& value, Tensor* grad_sink) {
    Var v = push(value, true);
    node(v).back = [this, v, grad_sink]() {
        const Tensor& g = node(v).grad;
        for (size_t i = 0; i < g.v.size(); ++i) grad_sink->v[i] += g.v[i];
    };
    return v;
}

void Tape::backward(Var loss) {
    Node& ln = node(loss);
    require(ln.val.size() == 1, "backward needs a scalar loss");
    grad(loss).v[0] = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[static_cast<size_t>(i)];
        if (n.back && !n.grad.v.empty()) n.back();
    }
}

Var Tape::conv2d(Var x, Var w, Var b, int stride, int pad) {
    const Tensor& xt = val(x);
    const Tensor& wt = val(w);
    const Tensor& bt = val(b);
    require(wt.c == xt.c, "conv2d channel mismatch");
    require(bt.t == 1 && bt.c == wt.t && bt.h == 1 && bt.w == 1, "conv2d bias shape");
    int oh = conv_out(xt.h, wt.h, stride, pad);
    int ow = conv_out(xt.w, wt.w, stride, pad);
    require(oh > 0 && ow > 0, "conv2d output empty");
    int cout = wt.t, kh = wt.h, kw = wt.w;

    Tensor out(xt.t, cout, oh, ow);
    {
        CMapM wm(wt.v.data(), cout, static_cast<Eigen::Index>(xt.c) * kh * kw);
        CMapV bv(bt.v.data(), cout);
        MatRM col;
        for (int tt = 0; tt < xt.t; ++tt) {
            im2col(xt.frame(tt), xt.c, xt.h, xt.w, kh, kw, stride, pad, col);
            MapM ym(out.frame(tt), cout, static_cast<Eigen::Index>(oh) * ow);
            ym.noalias() = wm * col;
            ym.colwise() += bv;
        }
    }
    bool needs = needs_grad(x) || needs_grad(w) || needs_grad(b);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, w, b, y, stride, pad]() {
            const Tensor& xt2 = val(x);
            const Tensor& wt2 = val(w);
            const Tensor& gy = node(y).grad;
            int cout = wt2.t, kh = wt2.h, kw = wt2.w;
            int oh = gy.h, ow = gy.w;
            CMapM wm(wt2.v.data(), cout, static_cast<Eigen::Index>(xt2.c) * kh * kw);
            MatRM col;
            for (int tt = 0; tt < xt2.t; ++tt) {
                CMapM gym(gy.frame(tt), cout, static_cast<Eigen::Index>(oh) * ow);
                bool need_col = needs_grad(w);
                if (need_col || needs_grad(x))
                    im2col(xt2.frame(tt), xt2.c, xt2.h, xt2.w, kh, kw, stride, pad, col);
                if (needs_grad(w)) {
                    MapM gwm(grad(w).v.data(), cout,
                             static_cast<Eigen::Index>(xt2.c) * kh * kw);
                    gwm.noalias() += gym * col.transpose();
                }
                if (needs_grad(b)) {
                    MapV gbv(grad(b).v.data(), cout);
                    gbv.noalias() += gym.rowwise().sum();
                }
                if (needs_grad(x)) {
                    MatRM dcol = wm.transpose() * gym;
                    col2im_add(dcol, xt2.c, xt2.h, xt2.w, kh, kw, stride, pad,
                               grad(x).frame(tt));
                }
            }
        };
    }
    return y;
}

Var Tape::gather3(Var x) {
    const Tensor& xt = val(x);
    size_t slab = static_cast<size_t>(xt.c) * xt.h * xt.w;
    Tensor out(xt.t, 3 * xt.c, xt.h, xt.w);
    for (int tt = 0; tt < xt.t; ++tt) {
        double* dst = out.frame(tt);
        for (int k = -1; k <= 1; ++k) {
            int src = tt + k;
            double* seg = dst + static_cast<size_t>(k + 1) * slab;
            if (src >= 0 && src < xt.t)
                std::memcpy(seg, xt.frame(src), slab * sizeof(double));
        }
    }
    bool needs = needs_grad(x);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, y, slab]() {
            const Tensor& gy = node(y).grad;
            Tensor& gx = grad(x);
            for (int tt = 0; tt < gx.t; ++tt) {
                const double* src = gy.frame(tt);
                for (int k = -1; k <= 1; ++k) {
                    int dst = tt + k;
                    if (dst < 0 || dst >= gx.t) continue;
                    const double* seg = src + static_cast<size_t>(k + 1) * slab;
                    double* gslab = gx.frame(dst);
                    for (size_t i = 0; i < slab; ++i) gslab[i] += seg[i];
                }
            }
        };
    }
    return y;
}

Var Tape::group_norm(Var x, Var gamma, Var beta, int groups) {
    const Tensor& xt = val(x);
    const Tensor& gt = val(gamma);
    require(xt.c % groups == 0, "group_norm channels not divisible by groups");
    require(gt.c == xt.c && val(beta).c == xt.c, "group_norm affine shape");
    const double eps = 1e-5;
    int gc = xt.c / groups;
    size_t span = static_cast<size_t>(gc) * xt.h * xt.w;
    size_t hw = static_cast<size_t>(xt.h) * xt.w;

    auto stats = std::make_shared<std::vector<double>>(
        static_cast<size_t>(xt.t) * groups * 2);  // mu, istd interleaved
    Tensor out(xt.t, xt.c, xt.h, xt.w);
    const Tensor& bt = val(beta);
    for (int tt = 0; tt < xt.t; ++tt) {
        for (int g = 0; g < groups; ++g) {
            const double* src = xt.frame(tt) + static_cast<size_t>(g) * span;
            double mu = 0.0;
            for (size_t i = 0; i < span; ++i) mu += src[i];
            mu /= static_cast<double>(span);
            double var = 0.0;
            for (size_t i = 0; i < span; ++i) {
                double d = src[i] - mu;
                var += d * d;
            }
            var /= static_cast<double>(span);
            double istd = 1.0 / std::sqrt(var + eps);
            (*stats)[(static_cast<size_t>(tt) * groups + g) * 2] = mu;
            (*stats)[(static_cast<size_t>(tt) * groups + g) * 2 + 1] = istd;
            double* dst = out.frame(tt) + static_cast<size_t>(g) * span;
            for (int lc = 0; lc < gc; ++lc) {
                int cc = g * gc + lc;
                double ga = gt.v[static_cast<size_t>(cc)];
                double be = bt.v[static_cast<size_t>(cc)];
                const double* s = src + static_cast<size_t>(lc) * hw;
                double* d = dst + static_cast<size_t>(lc) * hw;
                for (size_t i = 0; i < hw; ++i) d[i] = ga * (s[i] - mu) * istd + be;
            }
        }
    }
    bool needs = needs_grad(x) || needs_grad(gamma) || needs_grad(beta);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, gamma, beta, y, groups, stats, span, hw]() {
            const Tensor& xt2 = val(x);
            const Tensor& gt2 = val(gamma);
            const Tensor& gy = node(y).grad;
            int gc = xt2.c / groups;
            std::vector<double> xhat(span), dxh(span);
            for (int tt = 0; tt < xt2.t; ++tt) {
                for (int g = 0; g < groups; ++g) {
                    double mu = (*stats)[(static_cast<size_t>(tt) * groups + g) * 2];
                    double istd = (*stats)[(static_cast<size_t>(tt) * groups + g) * 2 + 1];
                    const double* src = xt2.frame(tt) + static_cast<size_t>(g) * span;
                    const double* gsrc = gy.frame(tt) + static_cast<size_t>(g) * span;
                    for (size_t i = 0; i < span; ++i) xhat[i] = (src[i] - mu) * istd;
                    for (int lc = 0; lc < gc; ++lc) {
                        int cc = g * gc + lc;
                        double ga = gt2.v[static_cast<size_t>(cc)];
                        const double* gd = gsrc + static_cast<size_t>(lc) * hw;
                        double* dd = dxh.data() + static_cast<size_t>(lc) * hw;
                        for (size_t i = 0; i < hw; ++i) dd[i] = gd[i] * ga;
                        if (needs_grad(gamma) || needs_grad(beta)) {
                            double sg = 0.0, sb = 0.0;
                            const double* xh = xhat.data() + static_cast<size_t>(lc) * hw;
                            for (size_t i = 0; i < hw; ++i) {
                                sg += gd[i] * xh[i];
                                sb += gd[i];
                            }
                            if (needs_grad(gamma)) grad(gamma).v[static_cast<size_t>(cc)] += sg;
                            if (needs_grad(beta)) grad(beta).v[static_cast<size_t>(cc)] += sb;
                        }
                    }
                    if (needs_grad(x)) {
                        double m1 = 0.0, m2 = 0.0;
                        for (size_t i = 0; i < span; ++i) {
                            m1 += dxh[i];
                            m2 += dxh[i] * xhat[i];
                        }
                        m1 /= static_cast<double>(span);
                        m2 /= static_cast<double>(span);
                        double* gx = grad(x).frame(tt) + static_cast<size_t>(g) * span;
                        for (size_t i = 0; i < span; ++i)
                            gx[i] += istd * (dxh[i] - m1 - xhat[i] * m2);
                    }
                }
            }
        };
    }
    return y;
}

Var Tape::silu(Var x) {
    const Tensor& xt = val(x);
    Tensor out = xt;
    for (double& v : out.v) {
        double s = 1.0 / (1.0 + std::exp(-v));
        v = v * s;
    }
    bool needs = needs_grad(x);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, y]() {
            const Tensor& xt2 = val(x);
            const Tensor& gy = node(y).grad;
            Tensor& gx = grad(x);
            for (size_t i = 0; i < gx.v.size(); ++i) {
                double s = 1.0 / (1.0 + std::exp(-xt2.v[i]));
                gx.v[i] += gy.v[i] * s * (1.0 + xt2.v[i] * (1.0 - s));
            }
        };
    }
    return y;
}

Var Tape::add(Var a, Var b) {
    const Tensor& at = val(a);
    const Tensor& bt = val(b);
    require(at.same_shape(bt), "add shape mismatch " + at.shape_str() + " vs " + bt.shape_str());
    Tensor out = at;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += bt.v[i];
    bool needs = needs_grad(a) || needs_grad(b);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, a, b, y]() {
            const Tensor& gy = node(y).grad;
            if (needs_grad(a)) {
                Tensor& ga = grad(a);
                for (size_t i = 0; i < ga.v.size(); ++i) ga.v[i] += gy.v[i];
            }
            if (needs_grad(b)) {
                Tensor& gb = grad(b);
                for (size_t i = 0; i < gb.v.size(); ++i) gb.v[i] += gy.v[i];
            }
        };
    }
    return y;
}

Var Tape::scale(Var x, double s) {
    Tensor out = val(x);
    for (double& v : out.v) v *= s;
    bool needs = needs_grad(x);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, y, s]() {
            const Tensor& gy = node(y).grad;
            Tensor& gx = grad(x);
            for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gy.v[i] * s;
        };
    }
    return y;
}

Var Tape::add_channel_bias(Var x, Var bias) {
    const Tensor& xt = val(x);
    const Tensor& bt = val(bias);
    require(bt.t == 1 && bt.c == xt.c && bt.h == 1 && bt.w == 1, "channel bias shape");
    size_t hw = static_cast<size_t>(xt.h) * xt.w;
    Tensor out = xt;
    for (int tt = 0; tt < xt.t; ++tt)
        for (int cc = 0; cc < xt.c; ++cc) {
            double b = bt.v[static_cast<size_t>(cc)];
            double* d = out.frame(tt) + static_cast<size_t>(cc) * hw;
            for (size_t i = 0; i < hw; ++i) d[i] += b;
        }
    bool needs = needs_grad(x) || needs_grad(bias);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, bias, y, hw]() {
            const Tensor& gy = node(y).grad;
            if (needs_grad(x)) {
                Tensor& gx = grad(x);
                for (size_t i = 0; i < gx.v.size(); ++i) gx.v[i] += gy.v[i];
            }
            if (needs_grad(bias)) {
                Tensor& gb = grad(bias);
                for (int tt = 0; tt < gy.t; ++tt)
                    for (int cc = 0; cc < gy.c; ++cc) {
                        const double* s = gy.frame(tt) + static_cast<size_t>(cc) * hw;
                        double acc = 0.0;
                        for (size_t i = 0; i < hw; ++i) acc += s[i];
                        gb.v[static_cast<size_t>(cc)] += acc;
                    }
            }
        };
    }
    return y;
}

Var Tape::concat_channels(Var a, Var b) {
    const Tensor& at = val(a);
    const Tensor& bt = val(b);
    require(at.t == bt.t && at.h == bt.h && at.w == bt.w, "concat frame dims mismatch");
    size_t sa = static_cast<size_t>(at.c) * at.h * at.w;
    size_t sb = static_cast<size_t>(bt.c) * bt.h * bt.w;
    Tensor out(at.t, at.c + bt.c, at.h, at.w);
    for (int tt = 0; tt < at.t; ++tt) {
        std::memcpy(out.frame(tt), at.frame(tt), sa * sizeof(double));
        std::memcpy(out.frame(tt) + sa, bt.frame(tt), sb * sizeof(double));
    }
    bool needs = needs_grad(a) || needs_grad(b);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, a, b, y, sa, sb]() {
            const Tensor& gy = node(y).grad;
            for (int tt = 0; tt < gy.t; ++tt) {
                if (needs_grad(a)) {
                    double* ga = grad(a).frame(tt);
                    const double* s = gy.frame(tt);
                    for (size_t i = 0; i < sa; ++i) ga[i] += s[i];
                }
                if (needs_grad(b)) {
                    double* gb = grad(b).frame(tt);
                    const double* s = gy.frame(tt) + sa;
                    for (size_t i = 0; i < sb; ++i) gb[i] += s[i];
                }
            }
        };
    }
    return y;
}

Var Tape::upsample2x(Var x) {
    const Tensor& xt = val(x);
    Tensor out(xt.t, xt.c, xt.h * 2, xt.w * 2);
    for (int tt = 0; tt < xt.t; ++tt)
        for (int cc = 0; cc < xt.c; ++cc) {
            const double* s = xt.frame(tt) + static_cast<size_t>(cc) * xt.h * xt.w;
            double* d = out.frame(tt) + static_cast<size_t>(cc) * out.h * out.w;
            for (int yy = 0; yy < xt.h; ++yy)
                for (int xx = 0; xx < xt.w; ++xx) {
                    double v = s[yy * xt.w + xx];
                    int oy = yy * 2, ox = xx * 2;
                    d[oy * out.w + ox] = v;
                    d[oy * out.w + ox + 1] = v;
                    d[(oy + 1) * out.w + ox] = v;
                    d[(oy + 1) * out.w + ox + 1] = v;
                }
        }
    bool needs = needs_grad(x);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, y]() {
            const Tensor& gy = node(y).grad;
            Tensor& gx = grad(x);
            for (int tt = 0; tt < gx.t; ++tt)
                for (int cc = 0; cc < gx.c; ++cc) {
                    double* d = gx.frame(tt) + static_cast<size_t>(cc) * gx.h * gx.w;
                    const double* s = gy.frame(tt) + static_cast<size_t>(cc) * gy.h * gy.w;
                    for (int yy = 0; yy < gx.h; ++yy)
                        for (int xx = 0; xx < gx.w; ++xx) {
                            int oy = yy * 2, ox = xx * 2;
                            d[yy * gx.w + xx] += s[oy * gy.w + ox] + s[oy * gy.w + ox + 1] +
                                                 s[(oy + 1) * gy.w + ox] +
                                                 s[(oy + 1) * gy.w + ox + 1];
                        }
                }
        };
    }
    return y;
}

Var Tape::replicate_frames(Var x, int t) {
    const Tensor& xt = val(x);
    require(xt.t == 1, "replicate_frames input must have one frame");
    size_t slab = static_cast<size_t>(xt.c) * xt.h * xt.w;
    Tensor out(t, xt.c, xt.h, xt.w);
    for (int tt = 0; tt < t; ++tt) std::memcpy(out.frame(tt), xt.v.data(), slab * sizeof(double));
    bool needs = needs_grad(x);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, y, slab]() {
            const Tensor& gy = node(y).grad;
            Tensor& gx = grad(x);
            for (int tt = 0; tt < gy.t; ++tt) {
                const double* s = gy.frame(tt);
                for (size_t i = 0; i < slab; ++i) gx.v[i] += s[i];
            }
        };
    }
    return y;
}

Var Tape::linear(Var x, Var w, Var b) {
    const Tensor& xt = val(x);
    const Tensor& wt = val(w);
    const Tensor& bt = val(b);
    require(xt.t == 1 && xt.h == 1 && xt.w == 1, "linear input must be a vector");
    require(wt.c == xt.c, "linear in-features mismatch");
    require(bt.c == wt.t, "linear bias mismatch");
    int m = wt.t, n = wt.c;
    Tensor out(1, m, 1, 1);
    {
        CMapM wm(wt.v.data(), m, n);
        CMapV xv(xt.v.data(), n);
        MapV yv(out.v.data(), m);
        CMapV bv(bt.v.data(), m);
        yv.noalias() = wm * xv + bv;
    }
    bool needs = needs_grad(x) || needs_grad(w) || needs_grad(b);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, w, b, y, m, n]() {
            const Tensor& gy = node(y).grad;
            CMapV gyv(gy.v.data(), m);
            const Tensor& xt2 = val(x);
            const Tensor& wt2 = val(w);
            if (needs_grad(w)) {
                MapM gwm(grad(w).v.data(), m, n);
                CMapV xv(xt2.v.data(), n);
                gwm.noalias() += gyv * xv.transpose();
            }
            if (needs_grad(b)) {
                MapV gbv(grad(b).v.data(), m);
                gbv.noalias() += gyv;
            }
            if (needs_grad(x)) {
                CMapM wm(wt2.v.data(), m, n);
                MapV gxv(grad(x).v.data(), n);
                gxv.noalias() += wm.transpose() * gyv;
            }
        };
    }
    return y;
}

Var Tape::attention(Var x, Var wq, Var bq, Var wk, Var bk, Var wv, Var bv, Var wo, Var bo,
                    bool temporal) {
    const Tensor& xt = val(x);
    int c = xt.c;
    for (Var wvar : {wq, wk, wv, wo})
        require(val(wvar).t == c && val(wvar).c == c, "attention projection shape");
    int batches = temporal ? xt.h * xt.w : xt.t;
    int ntok = temporal ? xt.t : xt.h * xt.w;
    double scl = 1.0 / std::sqrt(static_cast<double>(c));
    size_t hw = static_cast<size_t>(xt.h) * xt.w;

    // Token matrix X_b is [C, N]; spatial batches view frame slabs directly,
    // temporal batches gather the strided per-pixel columns. Captured by value:
    // the backward closure outlives this stack frame.
    auto load_x = [c, ntok, temporal, hw](const Tensor& src, int b, MatRM& dst) {
        dst.resize(c, ntok);
        if (!temporal) {
            std::memcpy(dst.data(), src.frame(b), static_cast<size_t>(c) * ntok * sizeof(double));
        } else {
            for (int tt = 0; tt < ntok; ++tt)
                for (int cc = 0; cc < c; ++cc)
                    dst(cc, tt) = src.v[(static_cast<size_t>(tt) * c + cc) * hw + b];
        }
    };

    auto saved = std::make_shared<std::vector<MatRM>>();
    saved->reserve(static_cast<size_t>(batches) * 4);  // Q, K, V, P per batch

    Tensor out(xt.t, xt.c, xt.h, xt.w);
    {
        CMapM wqm(val(wq).v.data(), c, c), wkm(val(wk).v.data(), c, c),
            wvm(val(wv).v.data(), c, c), wom(val(wo).v.data(), c, c);
        CMapV bqv(val(bq).v.data(), c), bkv(val(bk).v.data(), c), bvv(val(bv).v.data(), c),
            bov(val(bo).v.data(), c);
        MatRM xb;
        for (int b = 0; b < batches; ++b) {
            load_x(xt, b, xb);
            MatRM q = wqm * xb;
            q.colwise() += bqv;
            MatRM k = wkm * xb;
            k.colwise() += bkv;
            MatRM vm = wvm * xb;
            vm.colwise() += bvv;
            MatRM s = (q.transpose() * k) * scl;
            for (int r = 0; r < ntok; ++r) {
                double mx = s.row(r).maxCoeff();
                for (int j = 0; j < ntok; ++j) s(r, j) = std::exp(s(r, j) - mx);
                s.row(r) /= s.row(r).sum();
            }
            MatRM yt = vm * s.transpose();
            MatRM ob = wom * yt;
            ob.colwise() += bov;
            if (!temporal) {
                std::memcpy(out.frame(b), ob.data(),
                            static_cast<size_t>(c) * ntok * sizeof(double));
            } else {
                for (int tt = 0; tt < ntok; ++tt)
                    for (int cc = 0; cc < c; ++cc)
                        out.v[(static_cast<size_t>(tt) * c + cc) * hw + b] = ob(cc, tt);
            }
            saved->push_back(std::move(q));
            saved->push_back(std::move(k));
            saved->push_back(std::move(vm));
            saved->push_back(std::move(s));
        }
    }
    bool needs = false;
    for (Var p : {x, wq, bq, wk, bk, wv, bv, wo, bo}) needs = needs || needs_grad(p);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, x, wq, bq, wk, bk, wv, bv, wo, bo, y, temporal, batches, ntok, scl,
                        hw, saved, load_x]() {
            const Tensor& xt2 = val(x);
            const Tensor& gy = node(y).grad;
            int c = xt2.c;
            CMapM wqm(val(wq).v.data(), c, c), wkm(val(wk).v.data(), c, c),
                wvm(val(wv).v.data(), c, c), wom(val(wo).v.data(), c, c);
            MatRM xb, gob;
            for (int b = 0; b < batches; ++b) {
                const MatRM& q = (*saved)[static_cast<size_t>(b) * 4];
                const MatRM& k = (*saved)[static_cast<size_t>(b) * 4 + 1];
                const MatRM& vm = (*saved)[static_cast<size_t>(b) * 4 + 2];
                const MatRM& p = (*saved)[static_cast<size_t>(b) * 4 + 3];
                load_x(xt2, b, xb);
                load_x(gy, b, gob);
                MatRM yt = vm * p.transpose();
                if (needs_grad(wo)) {
                    MapM g(grad(wo).v.data(), c, c);
                    g.noalias() += gob * yt.transpose();
                }
                if (needs_grad(bo)) {
                    MapV g(grad(bo).v.data(), c);
                    g.noalias() += gob.rowwise().sum();
                }
                MatRM dyt = wom.transpose() * gob;
                MatRM dp = dyt.transpose() * vm;   // [N,N]
                MatRM dv = dyt * p;                // dV[:,j] = sum_i dyt[:,i] p(i,j)
                MatRM ds(ntok, ntok);
                for (int r = 0; r < ntok; ++r) {
                    double dot = dp.row(r).dot(p.row(r));
                    for (int j = 0; j < ntok; ++j) ds(r, j) = p(r, j) * (dp(r, j) - dot);
                }
                MatRM dq = (k * ds.transpose()) * scl;
                MatRM dk = (q * ds) * scl;
                auto proj_back = [&](const MatRM& dproj, Var wvar, Var bvar, const MatRM& wmat,
                                     MatRM* gx) {
                    if (needs_grad(wvar)) {
                        MapM g(grad(wvar).v.data(), c, c);
                        g.noalias() += dproj * xb.transpose();
                    }
                    if (needs_grad(bvar)) {
                        MapV g(grad(bvar).v.data(), c);
                        g.noalias() += dproj.rowwise().sum();
                    }
                    if (gx) gx->noalias() += wmat.transpose() * dproj;
                };
                MatRM gxb;
                MatRM* gxp = nullptr;
                if (needs_grad(x)) {
                    gxb = MatRM::Zero(c, ntok);
                    gxp = &gxb;
                }
                proj_back(dq, wq, bq, MatRM(wqm), gxp);
                proj_back(dk, wk, bk, MatRM(wkm), gxp);
                proj_back(dv, wv, bv, MatRM(wvm), gxp);
                if (needs_grad(x)) {
                    Tensor& gx = grad(x);
                    if (!temporal) {
                        double* d = gx.frame(b);
                        for (size_t i = 0; i < static_cast<size_t>(c) * ntok; ++i)
                            d[i] += gxb.data()[i];
                    } else {
                        for (int tt = 0; tt < ntok; ++tt)
                            for (int cc = 0; cc < c; ++cc)
                                gx.v[(static_cast<size_t>(tt) * c + cc) * hw + b] += gxb(cc, tt);
                    }
                }
            }
        };
    }
    return y;
}

Var Tape::mse(Var a, Var b) {
    const Tensor& at = val(a);
    const Tensor& bt = val(b);
    require(at.same_shape(bt), "mse shape mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < at.v.size(); ++i) {
        double d = at.v[i] - bt.v[i];
        acc += d * d;
    }
    double n = static_cast<double>(at.v.size());
    Tensor out(1, 1, 1, 1);
    out.v[0] = acc / n;
    bool needs = needs_grad(a) || needs_grad(b);
    Var y = push(std::move(out), needs);
    if (needs) {
        node(y).back = [this, a, b, y, n]() {
            double g = node(y).grad.v[0] * 2.0 / n;
            const Tensor& at2 = val(a);
            const Tensor& bt2 = val(b);
            if (needs_grad(a)) {
                Tensor& ga = grad(a);
                for (size_t i = 0; i < ga.v.size(); ++i)
                    ga.v[i] += g * (at2.v[i] - bt2.v[i]);
            }
            if (needs_grad(b)) {
                Tensor& gb = grad(b);
                for (size_t i = 0; i < gb.v.size(); ++i)
                    gb.v[i] -= g * (at2.v[i] - bt2.v[i]);
            }
        };
    }
    return y;
}

}  // namespace linecolor
