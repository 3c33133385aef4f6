#include "eval/metrics.hpp"

#include <cmath>
#include <string>

#include "core/errors.hpp"
#include "synthgen/generator.hpp"

namespace linecolor::eval {

namespace {

void check_video_pair(const std::vector<Image>& a, const std::vector<Image>& b,
                      const std::vector<Mask>* mask) {
    if (a.empty() || a.size() != b.size())
        throw DataError("videos must be non-empty and the same length, got " +
                        std::to_string(a.size()) + " and " + std::to_string(b.size()));
    for (size_t t = 0; t < a.size(); ++t) {
        if (a[t].h != b[t].h || a[t].w != b[t].w)
            throw DataError("frame " + std::to_string(t) + " shapes differ");
        for (double v : a[t].rgb)
            if (v < 0.0 || v > 1.0) throw DataError("video values must lie in [0,1]");
        for (double v : b[t].rgb)
            if (v < 0.0 || v > 1.0) throw DataError("video values must lie in [0,1]");
    }
    if (mask) {
        if (mask->size() != a.size()) throw DataError("mask length does not match video");
        for (size_t t = 0; t < a.size(); ++t)
            if ((*mask)[t].h != a[t].h || (*mask)[t].w != a[t].w)
                throw DataError("mask frame " + std::to_string(t) + " shape differs");
    }
}

}  // namespace

double psnr(const std::vector<Image>& a, const std::vector<Image>& b,
            const std::vector<Mask>* mask) {
    check_video_pair(a, b, mask);
    double sq = 0.0;
    long long count = 0;
    for (size_t t = 0; t < a.size(); ++t) {
        for (int y = 0; y < a[t].h; ++y) {
            for (int x = 0; x < a[t].w; ++x) {
                if (mask && (*mask)[t].at(y, x) == 0) continue;
                for (int c = 0; c < 3; ++c) {
                    double d = a[t].at(y, x, c) - b[t].at(y, x, c);
                    sq += d * d;
                }
                count += 3;
            }
        }
    }
    if (count == 0) throw DataError("mask selects no pixels");
    double mse = sq / static_cast<double>(count);
    if (mse == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const std::vector<Image>& a, const std::vector<Image>& b,
            const std::vector<Mask>* mask) {
    check_video_pair(a, b, mask);
    const int win = kSsimWindow;
    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    long long windows = 0;
    for (size_t t = 0; t < a.size(); ++t) {
        const Image& fa = a[t];
        const Image& fb = b[t];
        if (fa.h < win || fa.w < win)
            throw DataError("frame " + std::to_string(t) + " is smaller than the " +
                            std::to_string(win) + "x" + std::to_string(win) + " window");
        for (int wy = 0; wy + win <= fa.h; wy += win) {
            for (int wx = 0; wx + win <= fa.w; wx += win) {
                if (mask) {
                    bool touches = false;
                    for (int y = wy; y < wy + win && !touches; ++y)
                        for (int x = wx; x < wx + win; ++x)
                            if ((*mask)[t].at(y, x) != 0) {
                                touches = true;
                                break;
                            }
                    if (!touches) continue;
                }
                for (int c = 0; c < 3; ++c) {
                    double ma = 0, mb = 0;
                    for (int y = wy; y < wy + win; ++y)
                        for (int x = wx; x < wx + win; ++x) {
                            ma += fa.at(y, x, c);
                            mb += fb.at(y, x, c);
                        }
                    const double n = static_cast<double>(win) * win;
                    ma /= n;
                    mb /= n;
                    double va = 0, vb = 0, cov = 0;
                    for (int y = wy; y < wy + win; ++y)
                        for (int x = wx; x < wx + win; ++x) {
                            double da = fa.at(y, x, c) - ma;
                            double db = fb.at(y, x, c) - mb;
                            va += da * da;
                            vb += db * db;
                            cov += da * db;
                        }
                    va /= n;
                    vb /= n;
                    cov /= n;
                    total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                             ((ma * ma + mb * mb + c1) * (va + vb + c2));
                    ++windows;
                }
            }
        }
    }
    if (windows == 0) throw DataError("mask touches no windows");
    return total / static_cast<double>(windows);
}

std::vector<double> region_color_error(const std::vector<Image>& video,
                                       const synthgen::SyntheticClip& gt) {
    if (static_cast<int>(video.size()) != gt.config.t)
        throw DataError("video length " + std::to_string(video.size()) +
                        " does not match the clip's " + std::to_string(gt.config.t));
    for (const Image& f : video)
        if (f.h != gt.config.h || f.w != gt.config.w)
            throw DataError("video frame size does not match the clip");

    std::vector<double> errors;
    for (size_t si = 0; si < gt.sprites.size(); ++si) {
        std::vector<Mask> interiors =
            synthgen::sprite_interior_masks(gt, static_cast<int>(si));
        double acc = 0.0;
        int visible_frames = 0;
        for (int t = 0; t < gt.config.t; ++t) {
            double sum[3] = {0, 0, 0};
            long long count = 0;
            for (int y = 0; y < gt.config.h; ++y)
                for (int x = 0; x < gt.config.w; ++x) {
                    if (interiors[t].at(y, x) == 0) continue;
                    for (int c = 0; c < 3; ++c) sum[c] += video[t].at(y, x, c);
                    ++count;
                }
            if (count == 0) continue;
            double d2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                double d = sum[c] / static_cast<double>(count) - gt.sprites[si].fill[c];
                d2 += d * d;
            }
            acc += std::sqrt(d2);
            ++visible_frames;
        }
        if (visible_frames == 0)
            throw DataError("sprite " + std::to_string(si) +
                            " has no visible fill interior in any frame");
        errors.push_back(acc / visible_frames);
    }
    return errors;
}

double temporal_consistency(const std::vector<Image>& video, const std::vector<Image>& gt) {
    check_video_pair(video, gt, nullptr);
    if (video.size() < 2) throw DataError("temporal consistency needs at least 2 frames");
    double total = 0.0;
    for (size_t t = 0; t + 1 < video.size(); ++t) {
        double acc = 0.0;
        const Image& v0 = video[t];
        const Image& v1 = video[t + 1];
        const Image& g0 = gt[t];
        const Image& g1 = gt[t + 1];
        for (size_t i = 0; i < v0.rgb.size(); ++i)
            acc += std::abs((v1.rgb[i] - v0.rgb[i]) - (g1.rgb[i] - g0.rgb[i]));
        total += acc / (static_cast<double>(v0.h) * v0.w);
    }
    return total / static_cast<double>(video.size() - 1);
}

}  // namespace linecolor::eval
