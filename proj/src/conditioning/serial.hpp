#pragma once

#include <filesystem>

#include <json.hpp>

#include "conditioning/conditioning.hpp"

namespace linecolor::conditioning {

// JSON schema shared between the conditioning and correspondence modules.
nlohmann::json match_set_to_json(const MatchSet& m);
MatchSet match_set_from_json(const nlohmann::json& j);

nlohmann::json trajectory_set_to_json(const TrajectorySet& t);
TrajectorySet trajectory_set_from_json(const nlohmann::json& j);

// 16-bit single-channel images, one per frame per side
// (pointmap_ref_%04d.png / pointmap_frame_%04d.png under `dir`).
void save_point_map_sequence(const PointMapSequence& seq, const std::filesystem::path& dir);
PointMapSequence load_point_map_sequence(const std::filesystem::path& dir);

}  // namespace linecolor::conditioning
