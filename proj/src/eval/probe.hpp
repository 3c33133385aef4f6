#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/grid.hpp"
#include "synthgen/types.hpp"

namespace linecolor::eval {

// One (sketch patch, region color) observation: flattened non-outline patch
// intensities in [0,1] and the region's ground-truth mean color.
struct ProbeSample {
    std::vector<double> features;
    std::array<double, 3> color{0, 0, 0};
};

struct ProbeResult {
    bool defined = false;
    double r2 = 0.0;        // meaningful only when defined
    std::string reason;     // why r2 is undefined, otherwise empty
};

// Fits ordinary least squares (with intercept) from patch intensities to
// region mean color on a seeded 80% split and reports pooled out-of-sample
// R^2 on the held-out 20%. Requires at least kMinProbeSamples observations;
// an underdetermined fit or zero-variance held-out targets are reported as
// undefined rather than thrown.
inline constexpr int kMinProbeSamples = 50;
ProbeResult leakage_probe(const std::vector<ProbeSample>& samples, std::uint64_t seed = 0);

// One sample per sprite: from the first frame offering a patch x patch
// window entirely inside the sprite's pure-fill interior with no outline ink
// in the given sketch. One region contributes one observation — repeating a
// static sprite across frames would duplicate rows without adding
// information and only destabilize the train/test split. Sprites with no
// valid window contribute nothing. sketches must align with the clip's
// frames.
std::vector<ProbeSample> collect_probe_samples(const synthgen::SyntheticClip& clip,
                                               const std::vector<Sketch>& sketches,
                                               int patch = 3);

}  // namespace linecolor::eval
