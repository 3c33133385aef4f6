#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "core/grid.hpp"
#include "core/report.hpp"
#include "core/rng.hpp"
#include "synthgen/types.hpp"

namespace linecolor::conditioning {

// One matched keypoint: the same scene point seen in the reference image and
// in a target frame, tagged with a shared integer label >= 1.
struct Match {
    std::array<int, 2> ref_point{0, 0};    // (x, y) in the reference
    std::array<int, 2> frame_point{0, 0};  // (x, y) in the target frame
    int label = 0;

    bool operator==(const Match&) const = default;
};

struct MatchSet {
    std::vector<Match> matches;

    int n() const { return static_cast<int>(matches.size()); }
    // Throws DataError when labels are not exactly 1..n, a pixel repeats on
    // either side, or a coordinate falls outside the H x W canvas.
    void validate(int h, int w) const;

    bool operator==(const MatchSet&) const = default;
};

// Integer label grids: 0 = unmatched, label i at the pixel where match i sits.
struct PointMapPair {
    LabelMap ref_map;
    LabelMap frame_map;

    bool operator==(const PointMapPair&) const = default;
};

// Per-frame pairs; the reference side is identical across frames.
struct PointMapSequence {
    std::vector<PointMapPair> frames;

    int t() const { return static_cast<int>(frames.size()); }
    bool operator==(const PointMapSequence&) const = default;
};

// Keypoint positions per frame. Positions may be fractional (interpolated
// trajectories); validity is false while the rounded position is off-canvas.
struct Track {
    int label = 0;
    std::vector<std::array<double, 2>> pos;  // (x, y) per frame
    std::vector<std::uint8_t> valid;

    bool operator==(const Track&) const = default;
};

struct TrajectorySet {
    std::vector<Track> tracks;

    int t() const { return tracks.empty() ? 0 : static_cast<int>(tracks[0].pos.size()); }
    bool operator==(const TrajectorySet&) const = default;
};

struct HeatmapSequence {
    double sigma = 2.0;
    std::vector<GridF> frames;

    int t() const { return static_cast<int>(frames.size()); }
};

// Normalized label planes ready for channel concatenation: plane 0 holds the
// reference map, plane 1 the frame map, both scaled to [0,1].
struct EncodedPointMaps {
    int t = 0, h = 0, w = 0;
    std::vector<double> v;  // [2][T][H][W]

    double& at(int plane, int tt, int y, int x) {
        return v[((static_cast<size_t>(plane) * t + tt) * h + y) * w + x];
    }
    double at(int plane, int tt, int y, int x) const {
        return v[((static_cast<size_t>(plane) * t + tt) * h + y) * w + x];
    }
};

enum class SampleMode { uniform, motion_weighted };

// --- sketch-side conditioning ---

// Hard threshold: values strictly greater than `threshold` become 255 (paper),
// everything else 0 (ink). Removes shading and grayscale leaks.
Sketch binarize(const Sketch& sketch, int threshold = 200);

// With probability p, paints the reference background white and clears
// has_background. The draw consumes exactly one uniform from `rng`.
synthgen::ReferenceImage augment_background(const synthgen::ReferenceImage& ref, double p, Rng& rng);

// --- point maps ---

PointMapPair build_point_map_pair(const MatchSet& matches, int h, int w);

// Frame t writes each track's rounded position while valid. When two tracks
// round to the same cell the lowest label keeps it and the loss is reported.
PointMapSequence build_point_map_sequence(const MatchSet& matches, const TrajectorySet& tracks, int h, int w,
                                          Report* report = nullptr);

// --- trajectories ---

// Linear interpolation between two keyframe match sets, joined on ref_point
// identity. Tracks are relabeled 1..m in start-set label order; `joined`
// (optional) receives the corresponding start-frame MatchSet. Keypoints
// present on only one side are dropped with a report.
TrajectorySet interpolate_trajectories(const MatchSet& start, const MatchSet& end, int t_frames,
                                       MatchSet* joined = nullptr, Report* report = nullptr);

// --- heatmaps ---

// G_t(p) = max_k exp(-||p - k_t||^2 / (2 sigma^2)) over valid keypoints,
// evaluated at pixel centers with keypoints rounded to their nearest pixel so
// the per-frame maximum is exactly 1 whenever any keypoint is valid.
HeatmapSequence build_heatmaps(const TrajectorySet& tracks, double sigma, int h, int w);

// --- subsampling ---

struct SampledKeypoints {
    MatchSet matches;
    TrajectorySet tracks;
};

// Draws up to max_n keypoints without replacement and relabels them 1..m in
// draw order. motion_weighted draws proportionally to track arc length
// (uniform fallback when every track is static).
SampledKeypoints sample_keypoints(const MatchSet& matches, const TrajectorySet& tracks, int max_n, SampleMode mode,
                                  Rng& rng);

// --- network encoding ---

// label -> label / max_label; 0 stays 0 ("unmatched" is reserved).
EncodedPointMaps encode_labels(const PointMapSequence& maps, int max_label);

}  // namespace linecolor::conditioning
