#include "hullstereo/features.hpp"

#include <cmath>

#include "hullstereo/errors.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/math.hpp"
#include "hullstereo/parallel.hpp"

namespace hullstereo {

namespace {
constexpr int kCensusChannels = 48;
constexpr int kTapChannels = 16;
} // namespace

void validate_feature_config(const FeatureConfig& cfg) {
    if (cfg.channels != kCensusChannels + kTapChannels)
        throw ConfigError("features: channels must be 64 (48 census + 16 taps)");
    if (cfg.groups < 1 || cfg.channels % cfg.groups != 0)
        throw ConfigError("features: groups must divide channels");
    if (cfg.census_radius < 3 || cfg.census_radius > 7)
        throw ConfigError("features: census_radius must be in [3, 7]");
}

FeatureMap extract_features(const GrayImage& image, const FeatureConfig& cfg) {
    validate_feature_config(cfg);
    if (image.width < 16 || image.height < 16)
        throw ConfigError("extract_features: image must be at least 16x16");

    FeatureMap map;
    map.width = (image.width + 3) / 4;
    map.height = (image.height + 3) / 4;
    map.channels = cfg.channels;
    map.groups = cfg.groups;
    map.values.assign(static_cast<size_t>(map.width) * map.height * map.channels, 0.0f);
    map.group_inv_norm.assign(static_cast<size_t>(map.width) * map.height * map.groups, 0.0f);

    // Descriptor samples read the patch through a horizontal 7-tap box so the
    // correlation stays smooth under the sub-integer misalignment that a
    // quarter-resolution disparity grid cannot represent. Rectified pairs have
    // no vertical misalignment, so vertical detail stays sharp.
    GrayImage smooth(image.width, image.height);
    parallel_for(image.height, [&](int y) {
        for (int x = 0; x < image.width; ++x) {
            float s = 0;
            for (int dx = -3; dx <= 3; ++dx)
                s += image.at_clamped(x + dx, y);
            smooth.at(x, y) = s / 7.0f;
        }
    });

    // Census sampling grid: 7 offsets spread over [-radius, radius].
    std::array<int, 7> grid{};
    for (int i = -3; i <= 3; ++i)
        grid[static_cast<size_t>(i + 3)] = static_cast<int>(std::lround(i * cfg.census_radius / 3.0));

    const int group_size = cfg.channels / cfg.groups;

    parallel_for(map.height, [&](int fy) {
        std::vector<float> desc(static_cast<size_t>(cfg.channels));
        for (int fx = 0; fx < map.width; ++fx) {
            // Integer center of this feature pixel's 4x4 footprint.
            const int cx = 4 * fx + 2;
            const int cy = 4 * fy + 2;

            float mean = 0;
            float taps[kTapChannels];
            // Taps form a 4x4 lattice over the whole patch, not just the
            // footprint: descriptor discrimination needs samples that stay
            // independent after the horizontal box.
            static constexpr int kTapOff[4] = {-6, -2, 2, 6};
            for (int dy = 0; dy < 4; ++dy)
                for (int dx = 0; dx < 4; ++dx) {
                    float v = smooth.at_clamped(cx + kTapOff[dx], cy + kTapOff[dy]);
                    taps[dy * 4 + dx] = v;
                    mean += v;
                }
            mean /= kTapChannels;

            // Census reference is the footprint mean rather than the center
            // pixel: one noisy sample must not be able to flip all 48 bits.
            int c = 0;
            for (int gy = 0; gy < 7; ++gy)
                for (int gx = 0; gx < 7; ++gx) {
                    if (gx == 3 && gy == 3)
                        continue; // the center sample is the reference's own patch
                    float v = smooth.at_clamped(cx + grid[static_cast<size_t>(gx)],
                                                cy + grid[static_cast<size_t>(gy)]);
                    desc[static_cast<size_t>(c++)] = v > mean ? 1.0f : -1.0f;
                }
            float var = 0;
            for (float t : taps)
                var += (t - mean) * (t - mean);
            var /= kTapChannels;
            const float contrast = std::sqrt(var + 1e-8f);
            for (float t : taps)
                desc[static_cast<size_t>(c++)] = (t - mean) / contrast;

            double norm_sq = 0;
            for (float v : desc)
                norm_sq += static_cast<double>(v) * v;
            const float inv_norm = static_cast<float>(1.0 / std::sqrt(norm_sq));

            float* out = &map.values[(static_cast<size_t>(fy) * map.width + fx) * cfg.channels];
            for (int i = 0; i < cfg.channels; ++i)
                out[i] = desc[static_cast<size_t>(i)] * inv_norm;

            float* inv = &map.group_inv_norm[(static_cast<size_t>(fy) * map.width + fx) * cfg.groups];
            for (int g = 0; g < cfg.groups; ++g) {
                double s = 0;
                for (int i = 0; i < group_size; ++i) {
                    float v = out[g * group_size + i];
                    s += static_cast<double>(v) * v;
                }
                inv[g] = s > 1e-24 ? static_cast<float>(1.0 / std::sqrt(s)) : 0.0f;
            }
        }
    });
    return map;
}

float cost(const FeatureMap& f, const FeatureMap& g, int x, int y, int d) {
    if (d < 0 || d > x)
        throw NumericError("cost: disparity leaves the image");
    const float* a = f.at(x, y);
    const float* b = g.at(x - d, y);
    float s = 0;
    for (int i = 0; i < f.channels; ++i)
        s += a[i] * b[i];
    return s;
}

void group_cost_into(const FeatureMap& f, const FeatureMap& g, int x, int y, int d, float* out) {
    if (d < 0 || d > x)
        throw NumericError("group_cost: disparity leaves the image");
    const float* a = f.at(x, y);
    const float* b = g.at(x - d, y);
    const float* ia = f.inv_norms(x, y);
    const float* ib = g.inv_norms(x - d, y);
    const int group_size = f.channels / f.groups;
    for (int gr = 0; gr < f.groups; ++gr) {
        float s = 0;
        const float* ag = a + gr * group_size;
        const float* bg = b + gr * group_size;
        for (int i = 0; i < group_size; ++i)
            s += ag[i] * bg[i];
        out[gr] = s * ia[gr] * ib[gr];
    }
}

GroupCostVector group_cost(const FeatureMap& f, const FeatureMap& g, int x, int y, int d) {
    GroupCostVector out(static_cast<size_t>(f.groups));
    group_cost_into(f, g, x, y, d, out.data());
    return out;
}

void feature_map_save(const std::string& path, const FeatureMap& map) {
    feature_blob_write(path, map.width, map.height, map.channels, map.values);
}

FeatureMap feature_map_load(const std::string& path, int groups) {
    FeatureMap map;
    map.values = feature_blob_read(path, map.width, map.height, map.channels);
    if (groups < 1 || map.channels % groups != 0)
        throw ConfigError("feature_map_load: groups must divide channels");
    map.groups = groups;
    map.group_inv_norm.assign(static_cast<size_t>(map.width) * map.height * groups, 0.0f);
    const int group_size = map.channels / groups;
    for (size_t p = 0; p < static_cast<size_t>(map.width) * map.height; ++p) {
        const float* v = &map.values[p * map.channels];
        for (int g = 0; g < groups; ++g) {
            double s = 0;
            for (int i = 0; i < group_size; ++i) {
                float x = v[g * group_size + i];
                s += static_cast<double>(x) * x;
            }
            map.group_inv_norm[p * groups + g] = s > 1e-24 ? static_cast<float>(1.0 / std::sqrt(s)) : 0.0f;
        }
    }
    return map;
}

} // namespace hullstereo
