#pragma once

#include <span>

#include "core/image.hpp"

namespace iiie::mask {

Mask complement(const Mask& m);

// Bitwise OR. Throws DimensionMismatch, PreconditionViolation on empty input.
Mask union_of(std::span<const Mask> masks);

Mask intersection(const Mask& a, const Mask& b);

// Disk dilation: a bit is set iff some source bit lies within Euclidean
// distance <= radius. Radius 0 is the identity.
Mask dilate(const Mask& m, int radius);

// Largest dx with dx*dx + dy*dy <= r*r, or -1 when |dy| > r.
int disk_half_width(int radius, int dy);

// Throws EmptyBoxAfterClamp when nothing of the box lies inside the image.
Mask rasterize_box(const BoundingBox& box, int width, int height);

// Box centred in the image covering `area_fraction` of it, same aspect as
// the image.
BoundingBox centered_box(int width, int height, double area_fraction);

// Square box of `area_fraction` of the image area, centred horizontally with
// its vertical centre at 62% of the height, shifted to stay in bounds.
BoundingBox addition_heuristic_box(int width, int height, double area_fraction);

// Default dilation radius for an image: max(8, round(0.03 * min(w, h))).
int default_dilation_radius(int width, int height);

}  // namespace iiie::mask
