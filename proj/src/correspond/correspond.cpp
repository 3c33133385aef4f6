#include "correspond/correspond.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "core/errors.hpp"
#include "core/json_util.hpp"
#include "synthgen/lineart.hpp"

namespace linecolor::correspond {

using conditioning::Match;
using conditioning::Track;

const char* to_string(MatcherBackend b) { return b == MatcherBackend::oracle ? "oracle" : "descriptor"; }

const char* to_string(TrackerBackend b) { return b == TrackerBackend::oracle ? "oracle" : "interpolated"; }

nlohmann::json MatcherSpec::to_json() const {
    return {{"backend", to_string(backend)},
            {"max_keypoints", max_keypoints},
            {"patch_size", patch_size},
            {"corner_threshold", corner_threshold},
            {"ratio_test", ratio_test}};
}

MatcherSpec MatcherSpec::from_json(const nlohmann::json& j) {
    reject_unknown_keys(j, {"backend", "max_keypoints", "patch_size", "corner_threshold",
                            "ratio_test"},
                        "matcher");
    MatcherSpec s;
    if (j.contains("backend")) s.backend = parse_matcher_backend(j.at("backend").get<std::string>());
    read_if(j, "max_keypoints", s.max_keypoints);
    read_if(j, "patch_size", s.patch_size);
    read_if(j, "corner_threshold", s.corner_threshold);
    read_if(j, "ratio_test", s.ratio_test);
    if (s.max_keypoints < 1) throw ConfigError("matcher.max_keypoints must be >= 1");
    if (s.patch_size < 3 || s.patch_size % 2 == 0)
        throw ConfigError("matcher.patch_size must be odd and >= 3");
    return s;
}

MatcherBackend parse_matcher_backend(const std::string& s) {
    if (s == "oracle") return MatcherBackend::oracle;
    if (s == "descriptor") return MatcherBackend::descriptor;
    throw ConfigError("unknown matcher backend: " + s);
}

TrackerBackend parse_tracker_backend(const std::string& s) {
    if (s == "oracle") return TrackerBackend::oracle;
    if (s == "interpolated") return TrackerBackend::interpolated;
    throw ConfigError("unknown tracker backend: " + s);
}

namespace {

MatchSet oracle_matches(const std::vector<synthgen::AnchorTrack>& registry, int frame_index, int max_keypoints,
                        Report* report) {
    std::vector<const synthgen::AnchorTrack*> candidates;
    for (const synthgen::AnchorTrack& tr : registry) {
        if (frame_index < 0 || frame_index >= static_cast<int>(tr.pos.size()))
            throw DataError("oracle matcher: frame index " + std::to_string(frame_index) + " outside clip");
        if (tr.ref_visible && tr.visible[frame_index]) candidates.push_back(&tr);
    }
    // row-major over reference positions, sprite/name as deterministic tie-breaks
    std::sort(candidates.begin(), candidates.end(),
              [](const synthgen::AnchorTrack* a, const synthgen::AnchorTrack* b) {
                  if (a->ref_pos[1] != b->ref_pos[1]) return a->ref_pos[1] < b->ref_pos[1];
                  if (a->ref_pos[0] != b->ref_pos[0]) return a->ref_pos[0] < b->ref_pos[0];
                  if (a->sprite != b->sprite) return a->sprite < b->sprite;
                  return a->name < b->name;
              });

    MatchSet out;
    std::set<std::array<int, 2>> ref_used, frame_used;
    for (const synthgen::AnchorTrack* tr : candidates) {
        if (out.n() >= max_keypoints) break;
        std::array<int, 2> rp = tr->ref_pos;
        std::array<int, 2> fp = tr->pos[frame_index];
        if (ref_used.count(rp) || frame_used.count(fp)) {
            report_note(report, "anchor " + std::to_string(tr->sprite) + "/" + tr->name +
                                    " shares a pixel with an earlier match, skipped");
            continue;
        }
        ref_used.insert(rp);
        frame_used.insert(fp);
        out.matches.push_back(Match{rp, fp, out.n() + 1});
    }
    return out;
}

// --- descriptor backend ---

struct Corner {
    int x = 0, y = 0;
    double score = 0;
};

Mask ink_mask(const Sketch& s) {
    Mask m(s.h, s.w, 0);
    for (size_t i = 0; i < s.v.size(); ++i) m.v[i] = s.v[i] < 128 ? 1 : 0;
    return m;
}

std::vector<Corner> detect_corners(const Mask& ink, double threshold) {
    int h = ink.h, w = ink.w;
    GridF smooth(h, w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int yy = std::clamp(y + dy, 0, h - 1), xx = std::clamp(x + dx, 0, w - 1);
                    acc += ink.at(yy, xx);
                }
            smooth.at(y, x) = acc / 9.0;
        }

    GridF ix(h, w, 0.0), iy(h, w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
            int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
            ix.at(y, x) = (smooth.at(y, xr) - smooth.at(y, xl)) * 0.5;
            iy.at(y, x) = (smooth.at(yd, x) - smooth.at(yu, x)) * 0.5;
        }

    GridF score(h, w, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double sxx = 0, syy = 0, sxy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int yy = std::clamp(y + dy, 0, h - 1), xx = std::clamp(x + dx, 0, w - 1);
                    double gx = ix.at(yy, xx), gy = iy.at(yy, xx);
                    sxx += gx * gx;
                    syy += gy * gy;
                    sxy += gx * gy;
                }
            double det = sxx * syy - sxy * sxy;
            double tr = sxx + syy;
            score.at(y, x) = det - 0.04 * tr * tr;
        }

    // non-max suppression over 3x3; first cell of an exact-tie plateau wins
    std::vector<Corner> corners;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = score.at(y, x);
            if (s <= threshold) continue;
            bool is_max = true;
            for (int dy = -1; dy <= 1 && is_max; ++dy)
                for (int dx = -1; dx <= 1 && is_max; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    double sn = score.at(yy, xx);
                    bool earlier = (dy < 0) || (dy == 0 && dx < 0);
                    if (earlier ? sn >= s : sn > s) is_max = false;
                }
            if (is_max) corners.push_back(Corner{x, y, s});
        }
    std::sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    constexpr size_t kMaxCorners = 300;
    if (corners.size() > kMaxCorners) corners.resize(kMaxCorners);
    return corners;
}

// Zero-mean, unit-norm patch vector; empty when the patch is flat or clipped.
std::vector<double> patch_descriptor(const Mask& ink, int cx, int cy, int patch) {
    int r = patch / 2;
    if (cx - r < 0 || cy - r < 0 || cx + r >= ink.w || cy + r >= ink.h) return {};
    std::vector<double> d;
    d.reserve(static_cast<size_t>(patch) * patch);
    double mean = 0;
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            d.push_back(ink.at(cy + dy, cx + dx));
            mean += d.back();
        }
    mean /= d.size();
    double norm = 0;
    for (double& v : d) {
        v -= mean;
        norm += v * v;
    }
    if (norm < 1e-12) return {};
    norm = std::sqrt(norm);
    for (double& v : d) v /= norm;
    return d;
}

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

MatchSet descriptor_matches(const synthgen::ReferenceImage& ref, const Sketch& target, const MatcherSpec& spec,
                            Report* report) {
    // Canonicalize both sides into the same edge domain: the color reference
    // through the edge detector, and the target sketch through the identical
    // detector so stroke thickness statistics agree.
    Sketch ref_edges = synthgen::extract_lineart(ref.pixels, nullptr, synthgen::LineartMode::edge);
    Image target_img(target.h, target.w);
    for (int y = 0; y < target.h; ++y)
        for (int x = 0; x < target.w; ++x) {
            double v = from_u8(target.at(y, x));
            target_img.set(y, x, {v, v, v});
        }
    Sketch tgt_edges = synthgen::extract_lineart(target_img, nullptr, synthgen::LineartMode::edge);
    Mask ref_ink = ink_mask(ref_edges);
    Mask tgt_ink = ink_mask(tgt_edges);

    std::vector<Corner> ref_corners = detect_corners(ref_ink, spec.corner_threshold);
    std::vector<Corner> tgt_corners = detect_corners(tgt_ink, spec.corner_threshold);
    if (ref_corners.empty() || tgt_corners.empty()) {
        report_note(report, std::string("descriptor matcher: no corners detected on ") +
                                (ref_corners.empty() ? "reference" : "target"));
        return {};
    }

    std::vector<std::vector<double>> ref_desc, tgt_desc;
    std::vector<Corner> ref_kept, tgt_kept;
    for (const Corner& c : ref_corners) {
        auto d = patch_descriptor(ref_ink, c.x, c.y, spec.patch_size);
        if (!d.empty()) {
            ref_desc.push_back(std::move(d));
            ref_kept.push_back(c);
        }
    }
    for (const Corner& c : tgt_corners) {
        auto d = patch_descriptor(tgt_ink, c.x, c.y, spec.patch_size);
        if (!d.empty()) {
            tgt_desc.push_back(std::move(d));
            tgt_kept.push_back(c);
        }
    }
    if (ref_kept.empty() || tgt_kept.empty()) {
        report_note(report, "descriptor matcher: no usable corner patches");
        return {};
    }

    // Corner localization differs by up to a pixel between the two edge
    // renderings, so score each pair as the best correlation over a +-1 px
    // alignment search around the target corner.
    struct Shifted {
        std::vector<double> desc;
        int dx = 0, dy = 0;
    };
    std::vector<std::vector<Shifted>> tgt_shift(tgt_kept.size());
    for (size_t j = 0; j < tgt_kept.size(); ++j)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                auto d = patch_descriptor(tgt_ink, tgt_kept[j].x + dx, tgt_kept[j].y + dy, spec.patch_size);
                if (!d.empty()) tgt_shift[j].push_back(Shifted{std::move(d), dx, dy});
            }

    std::vector<std::vector<double>> corr(ref_kept.size(), std::vector<double>(tgt_kept.size(), -2.0));
    std::vector<std::vector<std::array<int, 2>>> shift(ref_kept.size(),
                                                       std::vector<std::array<int, 2>>(tgt_kept.size(), {0, 0}));
    for (size_t i = 0; i < ref_kept.size(); ++i)
        for (size_t j = 0; j < tgt_kept.size(); ++j)
            for (const Shifted& s : tgt_shift[j]) {
                double c = correlation(ref_desc[i], s.desc);
                if (c > corr[i][j]) {
                    corr[i][j] = c;
                    shift[i][j] = {s.dx, s.dy};
                }
            }

    std::vector<int> ref_best(ref_kept.size(), -1);
    std::vector<double> ref_best_c(ref_kept.size(), -2), ref_second_c(ref_kept.size(), -2);
    for (size_t i = 0; i < ref_kept.size(); ++i)
        for (size_t j = 0; j < tgt_kept.size(); ++j) {
            double c = corr[i][j];
            if (c > ref_best_c[i]) {
                ref_second_c[i] = ref_best_c[i];
                ref_best_c[i] = c;
                ref_best[i] = static_cast<int>(j);
            } else if (c > ref_second_c[i]) {
                ref_second_c[i] = c;
            }
        }
    std::vector<int> tgt_best(tgt_kept.size(), -1);
    std::vector<double> tgt_best_c(tgt_kept.size(), -2);
    for (size_t j = 0; j < tgt_kept.size(); ++j)
        for (size_t i = 0; i < ref_kept.size(); ++i)
            if (corr[i][j] > tgt_best_c[j]) {
                tgt_best_c[j] = corr[i][j];
                tgt_best[j] = static_cast<int>(i);
            }

    struct Pair {
        int rx, ry, tx, ty;
    };
    std::vector<Pair> pairs;
    constexpr double kMinCorrelation = 0.5;
    for (size_t i = 0; i < ref_kept.size(); ++i) {
        int j = ref_best[i];
        if (j < 0 || tgt_best[j] != static_cast<int>(i)) continue;  // mutual best only
        if (ref_best_c[i] < kMinCorrelation) continue;
        double d1 = 1.0 - ref_best_c[i];
        double d2 = 1.0 - ref_second_c[i];
        if (ref_second_c[i] > -1.5 && d1 > spec.ratio_test * d2) continue;  // ambiguous
        pairs.push_back(
            Pair{ref_kept[i].x, ref_kept[i].y, tgt_kept[j].x + shift[i][j][0], tgt_kept[j].y + shift[i][j][1]});
    }

    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.ry != b.ry) return a.ry < b.ry;
        return a.rx < b.rx;
    });

    MatchSet out;
    std::set<std::array<int, 2>> ref_used, tgt_used;
    for (const Pair& p : pairs) {
        if (out.n() >= spec.max_keypoints) break;
        std::array<int, 2> rp{p.rx, p.ry}, tp{p.tx, p.ty};
        if (ref_used.count(rp) || tgt_used.count(tp)) continue;
        ref_used.insert(rp);
        tgt_used.insert(tp);
        out.matches.push_back(Match{rp, tp, out.n() + 1});
    }
    if (out.matches.empty()) report_note(report, "descriptor matcher: no matches survived filtering");
    return out;
}

}  // namespace

MatchSet match_reference(const synthgen::ReferenceImage& ref, const Sketch& target,
                         const std::vector<synthgen::AnchorTrack>* registry, const MatcherSpec& spec, int frame_index,
                         Report* report) {
    if (spec.max_keypoints < 1) throw ConfigError("matcher: max_keypoints must be >= 1");
    if (spec.backend == MatcherBackend::oracle) {
        if (registry == nullptr) throw DataError("oracle matcher requires the clip's anchor registry");
        return oracle_matches(*registry, frame_index, spec.max_keypoints, report);
    }
    return descriptor_matches(ref, target, spec, report);
}

TrajectorySet track_points(const synthgen::SyntheticClip& clip, const MatchSet& start_matches, TrackerBackend backend,
                           const MatchSet* end_matches, Report* report) {
    if (backend == TrackerBackend::interpolated) {
        if (end_matches == nullptr) throw DataError("interpolated tracker requires end-frame matches");
        conditioning::MatchSet joined;
        return conditioning::interpolate_trajectories(start_matches, *end_matches, clip.config.t, &joined, report);
    }

    TrajectorySet out;
    for (const Match& m : start_matches.matches) {
        const synthgen::AnchorTrack* best = nullptr;
        double best_d2 = 1e300;
        for (const synthgen::AnchorTrack& tr : clip.registry) {
            double dx = tr.pos[0][0] - m.frame_point[0];
            double dy = tr.pos[0][1] - m.frame_point[1];
            double d2 = dx * dx + dy * dy;
            if (d2 < best_d2) {
                best_d2 = d2;
                best = &tr;
            }
        }
        if (best == nullptr || best_d2 > 1.0 + 1e-9)
            throw DataError("oracle tracker: no anchor within 1 px of match label " + std::to_string(m.label));
        Track track;
        track.label = m.label;
        for (int t = 0; t < clip.config.t; ++t) {
            track.pos.push_back({static_cast<double>(best->pos[t][0]), static_cast<double>(best->pos[t][1])});
            track.valid.push_back(best->valid[t]);
        }
        out.tracks.push_back(std::move(track));
    }
    return out;
}

}  // namespace linecolor::correspond
