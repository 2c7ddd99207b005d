#include "hullstereo/matcher.hpp"

#include <cmath>
#include <limits>

#include "hullstereo/errors.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/math.hpp"
#include "hullstereo/parallel.hpp"

namespace hullstereo {

void disparity_save(const std::string& path, const DisparityMap& map) {
    PfmImage img;
    img.width = map.width;
    img.height = map.height;
    img.channels = 1;
    img.data.resize(static_cast<size_t>(map.width) * map.height);
    const float nan = std::numeric_limits<float>::quiet_NaN();
    for (size_t i = 0; i < img.data.size(); ++i)
        img.data[i] = map.valid[i] ? map.d[i] : nan;
    pfm_write(path, img);
}

DisparityMap disparity_load(const std::string& path, DispUnits units) {
    PfmImage img = pfm_read(path);
    if (img.channels != 1)
        throw IoError(path + ": disparity map must be single-channel");
    DisparityMap map(img.width, img.height, units);
    for (size_t i = 0; i < img.data.size(); ++i) {
        if (std::isnan(img.data[i])) {
            map.d[i] = 0.0f;
            map.valid[i] = 0;
        } else {
            map.d[i] = img.data[i];
            map.valid[i] = 1;
        }
    }
    return map;
}

void validate_refine_config(const RefineConfig& cfg) {
    if (cfg.r < 1 || cfg.r > 32)
        throw ConfigError("refine: window radius must be in [1, 32]");
    if (cfg.iterations < 0)
        throw ConfigError("refine: iterations must be >= 0");
    if (!(cfg.tau_init > 0) || !(cfg.tau_update > 0))
        throw ConfigError("refine: softmax temperatures must be positive");
    if (cfg.lambda_flag < 0)
        throw ConfigError("refine: lambda_flag must be >= 0");
    if (cfg.smooth_radius < 0)
        throw ConfigError("refine: smoothing radius must be >= 0");
    if (cfg.smooth_radius > 0 && !(cfg.smooth_sigma > 0))
        throw ConfigError("refine: smoothing sigma must be positive");
}

std::string hull_mode_name(HullMode mode) {
    switch (mode) {
    case HullMode::None: return "none";
    case HullMode::InitialOnly: return "initial_only";
    case HullMode::UpdateOnly: return "update_only";
    case HullMode::Both: return "both";
    }
    return "none";
}

HullMode hull_mode_from_name(const std::string& name) {
    if (name == "none") return HullMode::None;
    if (name == "initial_only") return HullMode::InitialOnly;
    if (name == "update_only") return HullMode::UpdateOnly;
    if (name == "both") return HullMode::Both;
    throw ConfigError("unknown hull mode '" + name + "'");
}

namespace {

// Single definition of the Eq.-1 inner product so the sparse path, the dense
// reference volume, and cost() are bitwise comparable.
inline float dot_features(const FeatureMap& f, const FeatureMap& g, int x, int y, int d) {
    const float* a = f.at(x, y);
    const float* b = g.at(x - d, y);
    float s = 0;
    for (int i = 0; i < f.channels; ++i)
        s += a[i] * b[i];
    return s;
}

} // namespace

SparseCostVolume knn_volume(const FeatureMap& f, const FeatureMap& g, const BoundsMap* bounds,
                            int k, int d_threshold) {
    if (k < 1 || k > 32)
        throw ConfigError("knn_volume: k must be in [1, 32]");
    if (!f.same_shape(g))
        throw ConfigError("knn_volume: feature maps differ in shape");
    if (bounds && (bounds->width != f.width || bounds->height != f.height))
        throw ConfigError("knn_volume: bounds shape does not match features");
    if (d_threshold < 0)
        throw ConfigError("knn_volume: d_threshold must be >= 0");

    SparseCostVolume scv(f.width, f.height, k);
    int32_t* sd = scv.disp.data();
    float* sc = scv.cost.data();

    parallel_for(f.height, [&](int y) {
        int32_t dd[32];
        float cc[32];
        for (int x = 0; x < f.width; ++x) {
            int lo = 0, hi = std::min(d_threshold, x);
            if (bounds) {
                size_t bi = bounds->index(x, y);
                if (bounds->valid[bi]) {
                    lo = std::max(static_cast<int>(std::ceil(bounds->b_min[bi])), 0);
                    hi = std::min(static_cast<int>(std::floor(bounds->b_max[bi])), x);
                }
            }
            int cnt = 0;
            for (int d = lo; d <= hi; ++d) {
                float c = dot_features(f, g, x, y, d);
                int pos;
                if (cnt < k) {
                    pos = cnt++;
                } else {
                    if (!(c > cc[k - 1]))
                        continue; // ties keep the earlier (lower) disparity
                    pos = k - 1;
                }
                while (pos > 0 && cc[pos - 1] < c) {
                    cc[pos] = cc[pos - 1];
                    dd[pos] = dd[pos - 1];
                    --pos;
                }
                cc[pos] = c;
                dd[pos] = d;
            }
            size_t base = scv.slot(x, y, 0);
            for (int l = 0; l < cnt; ++l) {
                sd[base + static_cast<size_t>(l)] = dd[l];
                sc[base + static_cast<size_t>(l)] = cc[l];
            }
        }
    });
    return scv;
}

DisparityMap initial_disparity(const SparseCostVolume& scv, float tau_init) {
    if (!(tau_init > 0))
        throw ConfigError("initial_disparity: tau_init must be positive");
    DisparityMap out(scv.width, scv.height, DispUnits::Feature);
    parallel_for(scv.height, [&](int y) {
        for (int x = 0; x < scv.width; ++x) {
            size_t base = scv.slot(x, y, 0);
            int cnt = scv.count(x, y);
            if (cnt == 0)
                continue; // stays invalid
            // Slots are sorted by descending cost, so slot 0 anchors the softmax.
            double top = scv.cost[base];
            double wsum = 0, dsum = 0;
            for (int l = 0; l < cnt; ++l) {
                double w = std::exp((scv.cost[base + static_cast<size_t>(l)] - top) / tau_init);
                wsum += w;
                dsum += w * scv.disp[base + static_cast<size_t>(l)];
            }
            size_t i = out.index(x, y);
            out.d[i] = static_cast<float>(dsum / wsum);
            out.valid[i] = 1;
        }
    });
    return out;
}

namespace {

// Shared by local_correlation and the batched window fill in refine_step so
// the JIT window is bit-identical to any dense reference slice.
inline void fill_window(const FeatureMap& f, const FeatureMap& g, int x, int y, int center,
                        int r, float* out) {
    const int groups = f.groups;
    for (int j = -r; j <= r; ++j) {
        float* w = out + static_cast<size_t>(j + r) * groups;
        int d = center + j;
        if (d < 0 || d > x) {
            for (int gr = 0; gr < groups; ++gr)
                w[gr] = -1.0f;
        } else {
            group_cost_into(f, g, x, y, d, w);
        }
    }
}

} // namespace

std::vector<float> local_correlation(const FeatureMap& f, const FeatureMap& g, int x, int y,
                                     float center_disparity, int r) {
    if (r < 0)
        throw ConfigError("local_correlation: r must be >= 0");
    std::vector<float> out(static_cast<size_t>(2 * r + 1) * f.groups);
    fill_window(f, g, x, y, round_half_up(center_disparity), r, out.data());
    return out;
}

std::vector<int8_t> prior_flags(int x, int y, float center_disparity, int r,
                                const BoundsMap* bounds) {
    std::vector<int8_t> flags(static_cast<size_t>(2 * r + 1), 0);
    if (!bounds)
        return flags;
    size_t bi = bounds->index(x, y);
    if (!bounds->valid[bi])
        return flags;
    int center = round_half_up(center_disparity);
    for (int j = -r; j <= r; ++j) {
        int d = center + j;
        bool in = static_cast<float>(d) >= bounds->b_min[bi] &&
                  static_cast<float>(d) <= bounds->b_max[bi];
        flags[static_cast<size_t>(j + r)] = in ? 1 : -1;
    }
    return flags;
}

DisparityMap refine_step(const DisparityMap& disp, const FeatureMap& f, const FeatureMap& g,
                         const BoundsMap* bounds, const RefineConfig& cfg,
                         const GrayImage& guide, RefineStats* stats) {
    validate_refine_config(cfg);
    if (disp.width != f.width || disp.height != f.height || !f.same_shape(g))
        throw ConfigError("refine_step: shape mismatch");
    if (guide.width != f.width || guide.height != f.height)
        throw ConfigError("refine_step: guide image must be at feature resolution");
    if (bounds && (bounds->width != f.width || bounds->height != f.height))
        throw ConfigError("refine_step: bounds shape mismatch");
    if (disp.units != DispUnits::Feature)
        throw ConfigError("refine_step: expects feature-resolution disparities");

    const int r = cfg.r;
    const int window = 2 * r + 1;
    const int groups = f.groups;
    const size_t px_count = static_cast<size_t>(f.width) * f.height;

    // The only correlation state of the update: one JIT window per pixel.
    TrackedBuffer<float> corr(px_count * static_cast<size_t>(window) * groups, 0.0f);

    parallel_for(f.height, [&](int y) {
        for (int x = 0; x < f.width; ++x) {
            size_t i = disp.index(x, y);
            if (!disp.valid[i])
                continue;
            fill_window(f, g, x, y, round_half_up(disp.d[i]), r,
                        corr.data() + i * static_cast<size_t>(window) * groups);
        }
    });

    DisparityMap stepped(f.width, f.height, DispUnits::Feature);
    std::vector<float> row_max(static_cast<size_t>(f.height), 0.0f);

    parallel_for(f.height, [&](int y) {
        float local_max = 0;
        for (int x = 0; x < f.width; ++x) {
            size_t i = disp.index(x, y);
            if (!disp.valid[i])
                continue;
            const float* w = corr.data() + i * static_cast<size_t>(window) * groups;
            const int center = round_half_up(disp.d[i]);

            bool use_flags = false;
            float b_lo = 0, b_hi = 0;
            if (cfg.lambda_flag != 0.0f && bounds) {
                size_t bi = bounds->index(x, y);
                if (bounds->valid[bi]) {
                    use_flags = true;
                    b_lo = bounds->b_min[bi];
                    b_hi = bounds->b_max[bi];
                }
            }

            double scores[65]; // window <= 2*32+1 in any sane config
            for (int j = 0; j < window; ++j) {
                double mean = 0;
                const float* wj = w + static_cast<size_t>(j) * groups;
                for (int gr = 0; gr < groups; ++gr)
                    mean += wj[gr];
                mean /= groups;
                if (use_flags) {
                    int d = center + j - r;
                    bool in = static_cast<float>(d) >= b_lo && static_cast<float>(d) <= b_hi;
                    mean += static_cast<double>(cfg.lambda_flag) * (in ? 1.0 : -1.0);
                }
                scores[j] = mean;
            }

            double top = scores[0];
            for (int j = 1; j < window; ++j)
                top = std::max(top, scores[j]);
            double wsum = 0, jsum = 0;
            for (int j = 0; j < window; ++j) {
                double e = std::exp((scores[j] - top) / cfg.tau_update);
                wsum += e;
                jsum += e * (j - r);
            }
            float delta = static_cast<float>(jsum / wsum);
            local_max = std::max(local_max, std::abs(delta));

            // The soft-argmin locates the peak relative to the window center,
            // so the update re-anchors there. Adding delta to the unrounded
            // estimate instead would freeze each pixel's fractional error:
            // symmetric costs give delta = 0 at any fraction.
            stepped.d[i] = static_cast<float>(center) + delta;
            stepped.valid[i] = 1;
        }
        row_max[static_cast<size_t>(y)] = local_max;
    });

    if (stats) {
        float m = 0;
        for (float v : row_max)
            m = std::max(m, v);
        stats->max_abs_delta = m;
    }

    DisparityMap out(f.width, f.height, DispUnits::Feature);
    const int sr = cfg.smooth_radius;
    const double inv_two_sigma_sq =
        sr > 0 ? 1.0 / (2.0 * static_cast<double>(cfg.smooth_sigma) * cfg.smooth_sigma) : 0.0;

    parallel_for(f.height, [&](int y) {
        for (int x = 0; x < f.width; ++x) {
            size_t i = out.index(x, y);
            if (!stepped.valid[i])
                continue;
            float value;
            if (sr == 0) {
                value = stepped.d[i];
            } else {
                // Convex combination of stepped values: weights are positive
                // and include the center, so min/max never expand.
                const float ip = guide.at(x, y);
                double wsum = 0, vsum = 0;
                for (int dy = -sr; dy <= sr; ++dy)
                    for (int dx = -sr; dx <= sr; ++dx) {
                        int qx = x + dx, qy = y + dy;
                        if (qx < 0 || qy < 0 || qx >= f.width || qy >= f.height)
                            continue;
                        size_t qi = out.index(qx, qy);
                        if (!stepped.valid[qi])
                            continue;
                        double diff = static_cast<double>(guide.at(qx, qy)) - ip;
                        double wq = std::exp(-diff * diff * inv_two_sigma_sq);
                        wsum += wq;
                        vsum += wq * stepped.d[qi];
                    }
                value = static_cast<float>(vsum / wsum);
            }
            out.d[i] = clamp(value, 0.0f, static_cast<float>(x));
            out.valid[i] = 1;
        }
    });
    return out;
}

namespace {

DisparityMap upsample4(const DisparityMap& fm, int full_width, int full_height) {
    DisparityMap out(full_width, full_height, DispUnits::Full);
    parallel_for(full_height, [&](int v) {
        double fy = (v + 0.5) / 4.0 - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        double ty = fy - y0;
        for (int u = 0; u < full_width; ++u) {
            double fx = (u + 0.5) / 4.0 - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            double tx = fx - x0;
            double wsum = 0, vsum = 0;
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    int qx = clamp(x0 + sx, 0, fm.width - 1);
                    int qy = clamp(y0 + sy, 0, fm.height - 1);
                    size_t qi = fm.index(qx, qy);
                    if (!fm.valid[qi])
                        continue;
                    double w = (sx ? tx : 1.0 - tx) * (sy ? ty : 1.0 - ty);
                    wsum += w;
                    vsum += w * fm.d[qi];
                }
            size_t i = out.index(u, v);
            if (wsum > 0) {
                out.d[i] = static_cast<float>(4.0 * vsum / wsum);
                out.valid[i] = 1;
            }
        }
    });
    return out;
}

} // namespace

DisparityMap match(const GrayImage& left, const GrayImage& right, const BoundsMap* bounds,
                   const MatchConfig& cfg, MatchDebug* debug) {
    if (!left.same_shape(right))
        throw ConfigError("match: left/right sizes differ");
    validate_refine_config(cfg.refine);

    FeatureMap f = extract_features(left, cfg.features);
    FeatureMap g = extract_features(right, cfg.features);
    GrayImage guide = box_downsample4(left);

    // lambda_flag = 0 switches hull guidance off wholesale; combined with the
    // mode routing this makes bounds a true optional input.
    const BoundsMap* knn_bounds = nullptr;
    const BoundsMap* flag_bounds = nullptr;
    if (bounds && cfg.refine.lambda_flag != 0.0f) {
        if (cfg.mode == HullMode::InitialOnly || cfg.mode == HullMode::Both)
            knn_bounds = bounds;
        if (cfg.mode == HullMode::UpdateOnly || cfg.mode == HullMode::Both)
            flag_bounds = bounds;
    }

    int d_threshold = cfg.d_threshold >= 0 ? cfg.d_threshold : f.width / 2;

    DisparityMap disp;
    {
        // Scoped so the sparse volume is gone before refinement windows exist.
        SparseCostVolume scv = knn_volume(f, g, knn_bounds, cfg.k, d_threshold);
        disp = initial_disparity(scv, cfg.refine.tau_init);
    }

    for (int it = 0; it < cfg.refine.iterations; ++it) {
        RefineStats stats;
        disp = refine_step(disp, f, g, flag_bounds, cfg.refine, guide, &stats);
        if (debug) {
            debug->max_abs_delta.push_back(stats.max_abs_delta);
            if (debug->keep_iterates)
                debug->iterates.push_back(disp);
        }
    }
    return upsample4(disp, left.width, left.height);
}

DenseCostVolume build_dense_cost_volume(const FeatureMap& f, const FeatureMap& g) {
    if (!f.same_shape(g))
        throw ConfigError("build_dense_cost_volume: feature maps differ in shape");
    DenseCostVolume vol;
    vol.width = f.width;
    vol.height = f.height;
    vol.levels = f.width;
    vol.c = TrackedBuffer<float>(static_cast<size_t>(f.width) * f.height * f.width, -1.0f);
    float* out = vol.c.data();
    parallel_for(f.height, [&](int y) {
        for (int x = 0; x < f.width; ++x) {
            size_t base = (static_cast<size_t>(y) * f.width + x) * static_cast<size_t>(vol.levels);
            for (int d = 0; d <= x; ++d)
                out[base + static_cast<size_t>(d)] = dot_features(f, g, x, y, d);
        }
    });
    return vol;
}

} // namespace hullstereo
