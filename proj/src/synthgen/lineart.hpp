#pragma once

#include "core/grid.hpp"
#include "synthgen/types.hpp"

namespace linecolor::synthgen {

// Turns a rendered color frame into a grayscale line drawing.
//   oracle: returns the renderer's own two-tone outline pass (ink on paper).
//   leaky:  oracle outline with a faint color-dependent tint mixed into the
//           paper region; darker fills leak slightly darker paper values.
//   edge:   luma gradient-magnitude detector, no renderer internals needed.
// `oracle_outline` may be null only for edge mode (oracle/leaky need it).
Sketch extract_lineart(const Image& frame, const Sketch* oracle_outline, LineartMode mode,
                       double leak_strength = 0.04);

}  // namespace linecolor::synthgen
