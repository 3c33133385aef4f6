#pragma once

#include <filesystem>

#include "synthgen/types.hpp"

namespace linecolor::synthgen {

// On-disk clip layout: metadata.json (scene spec, motion, anchor registry) plus
// frame_%04d.png / outline_%04d.png / mask_%04d.png per frame and
// reference.png / reference_mask.png. Loading a saved clip reproduces the
// in-memory structure exactly, including every floating-point field.
void save_clip(const SyntheticClip& clip, const std::filesystem::path& dir);
SyntheticClip load_clip(const std::filesystem::path& dir);

}  // namespace linecolor::synthgen
