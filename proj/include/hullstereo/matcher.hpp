#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hullstereo/bounds.hpp"
#include "hullstereo/features.hpp"
#include "hullstereo/image.hpp"
#include "hullstereo/memstat.hpp"

namespace hullstereo {

enum class DispUnits : uint8_t { Feature, Full };

struct DisparityMap {
    int width = 0, height = 0;
    DispUnits units = DispUnits::Feature;
    std::vector<float> d;
    std::vector<uint8_t> valid;

    DisparityMap() = default;
    DisparityMap(int w, int h, DispUnits u)
        : width(w), height(h), units(u), d(static_cast<size_t>(w) * h, 0.0f),
          valid(static_cast<size_t>(w) * h, 0) {}

    size_t index(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

// Disparity maps travel as single-channel PFM with NaN = invalid.
void disparity_save(const std::string& path, const DisparityMap& map);
DisparityMap disparity_load(const std::string& path, DispUnits units);

// Per-pixel top-k disparity candidates, stored as fixed k slots sorted by
// descending cost (ties: lower disparity first). Unused slots carry d = -1.
struct SparseCostVolume {
    int width = 0, height = 0, k = 0;
    TrackedBuffer<int32_t> disp;
    TrackedBuffer<float> cost;

    SparseCostVolume() = default;
    SparseCostVolume(int w, int h, int k_)
        : width(w), height(h), k(k_), disp(static_cast<size_t>(w) * h * k_, -1),
          cost(static_cast<size_t>(w) * h * k_, 0.0f) {}

    size_t slot(int x, int y, int l) const {
        return (static_cast<size_t>(y) * width + x) * k + l;
    }
    int count(int x, int y) const {
        int n = 0;
        while (n < k && disp[slot(x, y, n)] >= 0)
            ++n;
        return n;
    }
};

struct RefineConfig {
    int r = 4;               // correlation window radius (feature px)
    int iterations = 16;
    float tau_init = 0.1f;   // softmax temperature for the initial estimate
    float tau_update = 0.25f;
    float lambda_flag = 0.05f; // weight of the hull-membership flag
    int smooth_radius = 2;    // 0 disables the edge-aware pass
    float smooth_sigma = 1e-4f;
};

void validate_refine_config(const RefineConfig& cfg);

// Which stages consume the disparity bounds.
enum class HullMode { None, InitialOnly, UpdateOnly, Both };

std::string hull_mode_name(HullMode mode);
HullMode hull_mode_from_name(const std::string& name);

struct MatchConfig {
    FeatureConfig features;
    RefineConfig refine;
    int k = 8;
    int d_threshold = -1; // fallback search ceiling; -1 = feature width / 2
    HullMode mode = HullMode::Both;
};

// Candidate range per pixel: [ceil(b_min), floor(b_max)] ∩ [0, x] where
// bounds are valid, otherwise [0, min(d_threshold, x)]. Disparities outside
// the range are never scored.
SparseCostVolume knn_volume(const FeatureMap& f, const FeatureMap& g, const BoundsMap* bounds,
                            int k, int d_threshold);

// Softmax-weighted mean of each pixel's stored candidates; pixels with no
// candidates come back invalid.
DisparityMap initial_disparity(const SparseCostVolume& scv, float tau_init);

// Group correlations at the 2r+1 integer disparities centered on
// round(center_disparity); offsets leaving the image yield -1 in every group.
// Layout: (2r+1) consecutive group vectors.
std::vector<float> local_correlation(const FeatureMap& f, const FeatureMap& g, int x, int y,
                                     float center_disparity, int r);

// +1 where the window disparity lies in [b_min, b_max], -1 outside, all 0
// when bounds are absent or the pixel is invalid.
std::vector<int8_t> prior_flags(int x, int y, float center_disparity, int r,
                                const BoundsMap* bounds);

struct RefineStats {
    float max_abs_delta = 0; // before smoothing; soft-argmin keeps it <= r
};

// One update: flag-biased soft-argmin over the JIT window, then an optional
// edge-aware smoothing pass guided by the quarter-resolution left image, then
// clamping to [0, x]. Correlation state is one (2r+1)*G window buffer.
DisparityMap refine_step(const DisparityMap& disp, const FeatureMap& f, const FeatureMap& g,
                         const BoundsMap* bounds, const RefineConfig& cfg,
                         const GrayImage& guide, RefineStats* stats = nullptr);

struct MatchDebug {
    std::vector<float> max_abs_delta;        // one entry per iteration
    std::vector<DisparityMap> iterates;      // filled when keep_iterates
    bool keep_iterates = false;
};

// Full pipeline at feature resolution, upsampled x4 (values scaled x4) to the
// input size. lambda_flag = 0 disables hull guidance entirely, so supplying
// bounds then changes nothing.
DisparityMap match(const GrayImage& left, const GrayImage& right, const BoundsMap* bounds,
                   const MatchConfig& cfg, MatchDebug* debug = nullptr);

// Reference dense path (memory-model baseline): full scalar cost volume over
// every disparity 0..width-1; entries with d > x hold the sentinel -1.
struct DenseCostVolume {
    int width = 0, height = 0, levels = 0;
    TrackedBuffer<float> c;

    float at(int x, int y, int d) const {
        return c[(static_cast<size_t>(y) * width + x) * levels + d];
    }
};

DenseCostVolume build_dense_cost_volume(const FeatureMap& f, const FeatureMap& g);

} // namespace hullstereo
