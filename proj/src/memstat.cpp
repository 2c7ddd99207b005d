#include "hullstereo/memstat.hpp"

#include <cmath>

#include "hullstereo/errors.hpp"
#include "hullstereo/matcher.hpp"
#include "hullstereo/rng.hpp"

namespace hullstereo {

std::string strategy_name(Strategy s) {
    switch (s) {
    case Strategy::Dense: return "dense";
    case Strategy::SparseKnn: return "sparse_knn";
    case Strategy::JitWindow: return "jit_window";
    }
    return "dense";
}

Strategy strategy_from_name(const std::string& name) {
    if (name == "dense") return Strategy::Dense;
    if (name == "sparse_knn") return Strategy::SparseKnn;
    if (name == "jit_window") return Strategy::JitWindow;
    throw ConfigError("unknown strategy '" + name + "'");
}

MemoryProfile model_memory(Strategy strategy, int width, int height, int k, int r, int groups,
                           int bytes_per_value) {
    if (width <= 0 || height <= 0 || k <= 0 || r <= 0 || groups <= 0 || bytes_per_value <= 0)
        throw ConfigError("model_memory: all dimensions must be positive");
    MemoryProfile p;
    p.strategy = strategy;
    p.width = width;
    p.height = height;
    p.k = k;
    p.r = r;
    p.groups = groups;
    p.bytes_per_value = bytes_per_value;
    const uint64_t wf = static_cast<uint64_t>((width + 3) / 4);
    const uint64_t hf = static_cast<uint64_t>((height + 3) / 4);
    const uint64_t bpv = static_cast<uint64_t>(bytes_per_value);
    switch (strategy) {
    case Strategy::Dense:
        p.peak_bytes = wf * hf * wf * bpv; // disparity axis spans the feature width
        break;
    case Strategy::SparseKnn:
        p.peak_bytes = wf * hf * static_cast<uint64_t>(k) * 2 * bpv; // (d, c) per slot
        break;
    case Strategy::JitWindow:
        p.peak_bytes = wf * hf * static_cast<uint64_t>(2 * r + 1) * groups * bpv;
        break;
    }
    return p;
}

namespace accounting {

namespace {
std::atomic<bool> g_enabled{false};
std::atomic<uint64_t> g_current{0};
std::atomic<uint64_t> g_peak{0};
} // namespace

void enable(bool on) { g_enabled.store(on); }
bool enabled() { return g_enabled.load(); }

void reset() {
    g_current.store(0);
    g_peak.store(0);
}

uint64_t current_bytes() { return g_current.load(); }
uint64_t peak_bytes() { return g_peak.load(); }

void add(uint64_t bytes) {
    uint64_t now = g_current.fetch_add(bytes) + bytes;
    uint64_t peak = g_peak.load();
    while (peak < now && !g_peak.compare_exchange_weak(peak, now)) {
    }
}

void sub(uint64_t bytes) { g_current.fetch_sub(bytes); }

} // namespace accounting

namespace {

GrayImage noise_image(int width, int height, uint64_t seed) {
    GrayImage img(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img.at(x, y) = static_cast<float>(value_noise2(seed, x / 3.0, y / 3.0));
    return img;
}

} // namespace

uint64_t instrument_run(Strategy strategy, int width, int height, int k, int r, int groups,
                        uint64_t seed) {
    if (!accounting::enabled())
        throw ConfigError("instrument_run: accounting hooks are disabled");
    GrayImage left = noise_image(width, height, seed);
    GrayImage right = noise_image(width, height, hash_combine(seed, 1));

    FeatureConfig fcfg;
    fcfg.groups = groups;
    FeatureMap f = extract_features(left, fcfg);
    FeatureMap g = extract_features(right, fcfg);

    accounting::reset();
    switch (strategy) {
    case Strategy::Dense: {
        DenseCostVolume vol = build_dense_cost_volume(f, g);
        (void)vol;
        break;
    }
    case Strategy::SparseKnn: {
        SparseCostVolume scv = knn_volume(f, g, nullptr, k, f.width / 2);
        (void)scv;
        break;
    }
    case Strategy::JitWindow: {
        RefineConfig rcfg;
        rcfg.r = r;
        DisparityMap disp;
        {
            SparseCostVolume scv = knn_volume(f, g, nullptr, k, f.width / 2);
            disp = initial_disparity(scv, rcfg.tau_init);
        }
        GrayImage guide = box_downsample4(left);
        disp = refine_step(disp, f, g, nullptr, rcfg, guide);
        break;
    }
    }
    return accounting::peak_bytes();
}

double modeled_loglog_slope(Strategy strategy, const std::vector<int>& widths, int height, int k,
                            int r, int groups) {
    if (widths.size() < 2)
        throw ConfigError("modeled_loglog_slope: need at least two widths");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(widths.size());
    for (int w : widths) {
        double x = std::log2(static_cast<double>(w));
        double y = std::log2(static_cast<double>(model_memory(strategy, w, height, k, r, groups).peak_bytes));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace hullstereo
