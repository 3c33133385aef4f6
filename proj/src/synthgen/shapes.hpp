#pragma once

#include "synthgen/types.hpp"

namespace linecolor::synthgen {

// Signed distance (negative inside) from a world-space point to the sprite
// boundary at time tau. Exact for ellipse axes and polygons; first-order
// approximation for blobs (adequate for outline banding at small wobble).
double sprite_signed_distance(const SpriteSpec& spec, double tau, double px, double py);

// Largest radius of a centered disc guaranteed inside the shape (local units).
double shape_inradius(const SpriteSpec& spec);

// Smallest radius of a centered disc guaranteed to contain the shape (local units).
double shape_outradius(const SpriteSpec& spec);

}  // namespace linecolor::synthgen
