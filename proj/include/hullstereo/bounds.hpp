#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hullstereo/camera.hpp"
#include "hullstereo/hull.hpp"

namespace hullstereo {

// Per-pixel disparity interval at feature resolution. Invalid pixels (ray
// never enters the hull) carry b_min = b_max = 0.
struct BoundsMap {
    int width = 0, height = 0;
    std::vector<float> b_min, b_max;
    std::vector<uint8_t> valid;

    BoundsMap() = default;
    BoundsMap(int w, int h)
        : width(w), height(h), b_min(static_cast<size_t>(w) * h, 0.0f),
          b_max(static_cast<size_t>(w) * h, 0.0f), valid(static_cast<size_t>(w) * h, 0) {}

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// z > 0 required; both directions of d = fx * baseline / z.
double disparity_from_depth(double z, const StereoRig& rig);
double depth_from_disparity(double d, const StereoRig& rig);

// Casts one ray per feature-pixel center of the left view, marches it in
// steps of half the finest leaf edge, and converts the first/last depths seen
// inside the hull to a disparity interval in feature pixels.
BoundsMap compute_bounds(const VisualHull& hull, const StereoRig& rig,
                         double feature_scale = 0.25);

// Bounds travel as one 3-channel PFM: (b_min, b_max, valid ? 1 : 0).
void bounds_save(const std::string& path, const BoundsMap& bounds);
BoundsMap bounds_load(const std::string& path);

} // namespace hullstereo
