#pragma once

#include <array>
#include <string>
#include <vector>

#include "hullstereo/image.hpp"

namespace hullstereo {

struct FeatureConfig {
    int channels = 64;     // 48 census comparisons + 16 patch taps
    int groups = 8;        // must divide channels
    int census_radius = 7; // full-res pixels; comparisons sample a 7x7 grid
};

void validate_feature_config(const FeatureConfig& cfg);

// Unit-norm per-pixel descriptors at quarter resolution. Each pixel also
// stores the inverse norm of every channel group so group-wise correlations
// come out normalized; a zero-energy group stores 0 and contributes zero.
struct FeatureMap {
    int width = 0, height = 0;
    int channels = 0, groups = 0;
    std::vector<float> values;         // w*h*channels
    std::vector<float> group_inv_norm; // w*h*groups

    const float* at(int x, int y) const {
        return &values[(static_cast<size_t>(y) * width + x) * channels];
    }
    const float* inv_norms(int x, int y) const {
        return &group_inv_norm[(static_cast<size_t>(y) * width + x) * groups];
    }
    bool same_shape(const FeatureMap& o) const {
        return width == o.width && height == o.height && channels == o.channels &&
               groups == o.groups;
    }
};

// One correlation value per channel group, each in [-1, 1].
using GroupCostVector = std::vector<float>;

// Builds descriptors from the 16x16 patch around each feature pixel's
// footprint: census sign comparisons against the patch mean plus
// mean-removed, contrast-normalized patch taps. Replicate padding.
FeatureMap extract_features(const GrayImage& image, const FeatureConfig& cfg = {});

// Inner product of f at p and g at p - (d, 0). Requires 0 <= d <= p.x.
float cost(const FeatureMap& f, const FeatureMap& g, int x, int y, int d);

// Per-group normalized inner products, same operand rule as cost().
GroupCostVector group_cost(const FeatureMap& f, const FeatureMap& g, int x, int y, int d);
void group_cost_into(const FeatureMap& f, const FeatureMap& g, int x, int y, int d, float* out);

void feature_map_save(const std::string& path, const FeatureMap& map);
FeatureMap feature_map_load(const std::string& path, int groups);

} // namespace hullstereo
