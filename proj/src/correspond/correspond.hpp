#pragma once

#include <vector>

#include "conditioning/conditioning.hpp"
#include "core/report.hpp"
#include "synthgen/types.hpp"

namespace linecolor::correspond {

using conditioning::MatchSet;
using conditioning::TrajectorySet;

enum class MatcherBackend { oracle, descriptor };
enum class TrackerBackend { oracle, interpolated };

struct MatcherSpec {
    MatcherBackend backend = MatcherBackend::oracle;
    int max_keypoints = 50;
    // descriptor backend: corner detection + patch correlation
    int patch_size = 9;
    double corner_threshold = 0.02;
    double ratio_test = 0.9;

    nlohmann::json to_json() const;
    static MatcherSpec from_json(const nlohmann::json& j);  // strict: unknown keys rejected
    bool operator==(const MatcherSpec&) const = default;
};

const char* to_string(MatcherBackend b);
const char* to_string(TrackerBackend b);
MatcherBackend parse_matcher_backend(const std::string& s);
TrackerBackend parse_tracker_backend(const std::string& s);

// Matches reference-image keypoints against one target sketch.
//   oracle:     reads the clip's anchor registry; a match is emitted for every
//               anchor visible both in the reference and in clip frame
//               `frame_index`. The target image itself is not inspected.
//   descriptor: corner detection on the reference's edge rendering, 9x9
//               binary-patch correlation against the target sketch, mutual
//               best with a ratio test. Zero corners is reported, not fatal.
// Labels are assigned 1..n in row-major scan order of the reference points.
MatchSet match_reference(const synthgen::ReferenceImage& ref, const Sketch& target,
                         const std::vector<synthgen::AnchorTrack>* registry, const MatcherSpec& spec,
                         int frame_index = 0, Report* report = nullptr);

// Extends first-frame matches to per-frame trajectories.
//   oracle:       each start point is attributed to a registry anchor within
//                 1 px of its frame-0 position and follows that anchor's
//                 ground-truth path (error naming the label otherwise).
//   interpolated: straight lines toward `end_matches` (required), joined on
//                 reference points like the sparse-stage conditioning path.
TrajectorySet track_points(const synthgen::SyntheticClip& clip, const MatchSet& start_matches, TrackerBackend backend,
                           const MatchSet* end_matches = nullptr, Report* report = nullptr);

}  // namespace linecolor::correspond
