#include "hullstereo/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include <nlohmann/json.hpp>

#include "hullstereo/bounds.hpp"
#include "hullstereo/errors.hpp"
#include "hullstereo/hull.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/synth.hpp"

namespace hullstereo {

MetricReport compute_metrics(const DisparityMap& pred, const DisparityMap& gt,
                             const ByteImage* occlusion) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw ConfigError("compute_metrics: prediction/GT shapes differ");
    if (occlusion && (occlusion->width != gt.width || occlusion->height != gt.height))
        throw ConfigError("compute_metrics: occlusion mask shape differs");

    MetricReport rep;
    double sum_all = 0, sum_noc = 0;
    uint64_t epe_all_n = 0, epe_noc_n = 0;
    uint64_t out4_all = 0, d1_out_all = 0;

    for (size_t i = 0; i < gt.d.size(); ++i) {
        if (!gt.valid[i])
            continue;
        ++rep.count_all;
        bool occluded = occlusion && occlusion->data[i] >= 128;
        if (!occluded)
            ++rep.count_noc;
        if (!pred.valid[i]) {
            ++rep.count_missing;
            ++out4_all;
            ++d1_out_all;
            continue;
        }
        double err = std::abs(static_cast<double>(pred.d[i]) - gt.d[i]);
        sum_all += err;
        ++epe_all_n;
        if (!occluded) {
            sum_noc += err;
            ++epe_noc_n;
        }
        if (err > 4.0)
            ++out4_all;
        if (err > 3.0 && err > 0.05 * gt.d[i])
            ++d1_out_all;
    }
    if (rep.count_all == 0)
        throw NumericError("compute_metrics: no valid GT pixels to evaluate");

    rep.epe_all = epe_all_n ? sum_all / static_cast<double>(epe_all_n) : 0.0;
    rep.epe_noc = epe_noc_n ? sum_noc / static_cast<double>(epe_noc_n) : 0.0;
    rep.gt4_all = 100.0 * static_cast<double>(out4_all) / static_cast<double>(rep.count_all);
    rep.d1_all = 100.0 * static_cast<double>(d1_out_all) / static_cast<double>(rep.count_all);
    return rep;
}

void report_save(const std::string& path, const MetricReport& report) {
    nlohmann::json j;
    j["epe_all"] = report.epe_all;
    j["epe_noc"] = report.epe_noc;
    j["gt4_all"] = report.gt4_all;
    j["d1_all"] = report.d1_all;
    j["count_all"] = report.count_all;
    j["count_noc"] = report.count_noc;
    j["count_missing"] = report.count_missing;
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
    if (!out)
        throw IoError("short write to " + path);
}

namespace {

// Felzenszwalb & Huttenlocher lower-envelope pass over one line.
void dt1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -std::numeric_limits<double>::infinity();
    z[1] = std::numeric_limits<double>::infinity();
    for (int q = 1; q < n; ++q) {
        double s;
        while (true) {
            int p = v[k];
            s = ((f[q] + q * double(q)) - (f[p] + p * double(p))) / (2.0 * q - 2.0 * p);
            if (s <= z[k])
                --k;
            else
                break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = std::numeric_limits<double>::infinity();
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q)
            ++k;
        int p = v[k];
        d[q] = (q - double(p)) * (q - double(p)) + f[p];
    }
}

// Squared Euclidean distance to the nearest set pixel (inf if none).
std::vector<double> squared_edt(const ByteImage& mask, bool to_foreground) {
    const int w = mask.width, h = mask.height;
    const double inf = 1e18;
    std::vector<double> grid(static_cast<size_t>(w) * h);
    for (size_t i = 0; i < grid.size(); ++i) {
        bool set = mask.data[i] >= 128;
        grid[i] = (set == to_foreground) ? 0.0 : inf;
    }
    int n = std::max(w, h);
    std::vector<double> f(static_cast<size_t>(n)), d(static_cast<size_t>(n));
    std::vector<int> v(static_cast<size_t>(n));
    std::vector<double> z(static_cast<size_t>(n) + 1);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y)
            f[static_cast<size_t>(y)] = grid[static_cast<size_t>(y) * w + x];
        dt1d(f.data(), d.data(), h, v.data(), z.data());
        for (int y = 0; y < h; ++y)
            grid[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(y)];
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x)
            f[static_cast<size_t>(x)] = grid[static_cast<size_t>(y) * w + x];
        dt1d(f.data(), d.data(), w, v.data(), z.data());
        for (int x = 0; x < w; ++x)
            grid[static_cast<size_t>(y) * w + x] = d[static_cast<size_t>(x)];
    }
    return grid;
}

} // namespace

ByteImage perturb_mask(const ByteImage& mask, MorphOp op, double radius) {
    if (radius < 0)
        throw ConfigError("perturb_mask: radius must be >= 0");
    if (radius == 0)
        return mask;
    const double r_sq = radius * radius;
    ByteImage out(mask.width, mask.height);
    if (op == MorphOp::Dilate) {
        std::vector<double> dist = squared_edt(mask, true);
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = dist[i] <= r_sq ? 255 : 0;
    } else {
        std::vector<double> dist = squared_edt(mask, false);
        for (size_t i = 0; i < out.data.size(); ++i)
            out.data[i] = dist[i] > r_sq ? 255 : 0;
    }
    return out;
}

namespace {

namespace fs = std::filesystem;

bool has_scene_inputs(const fs::path& dir) {
    return fs::exists(dir / "left.pgm") && fs::exists(dir / "right.pgm") &&
           fs::exists(dir / "gt.pfm") && fs::exists(dir / "cameras.json");
}

} // namespace

std::vector<AblationRow> ablation_run(const std::string& data_dir,
                                      const std::vector<HullMode>& modes,
                                      const MatchConfig& base_config, int hull_depth) {
    std::vector<fs::path> scene_dirs;
    {
        std::error_code ec;
        fs::directory_iterator it(data_dir, ec);
        if (ec)
            throw IoError("cannot list " + data_dir + ": " + ec.message());
        for (const auto& entry : it)
            if (entry.is_directory())
                scene_dirs.push_back(entry.path());
    }
    std::sort(scene_dirs.begin(), scene_dirs.end());
    if (scene_dirs.empty())
        throw ConfigError("ablation_run: no scene directories under " + data_dir);

    std::vector<AblationRow> rows;
    for (const fs::path& dir : scene_dirs) {
        if (!has_scene_inputs(dir)) {
            std::cerr << "warning: skipping " << dir.string() << " (missing inputs)\n";
            continue;
        }
        GrayImage left = pgm_read_gray((dir / "left.pgm").string());
        GrayImage right = pgm_read_gray((dir / "right.pgm").string());
        DisparityMap gt = disparity_load((dir / "gt.pfm").string(), DispUnits::Full);
        ByteImage occ;
        bool have_occ = fs::exists(dir / "occ.pgm");
        if (have_occ)
            occ = pgm_read((dir / "occ.pgm").string());

        CameraSet cams = load_cameras((dir / "cameras.json").string());
        std::vector<SilhouetteMask> masks;
        for (const RingView& view : cams.ring) {
            SilhouetteMask m;
            m.pixels = pgm_read((dir / view.mask_file).string());
            m.camera = view.camera;
            masks.push_back(std::move(m));
        }
        if (masks.size() < 2) {
            std::cerr << "warning: skipping " << dir.string() << " (fewer than 2 masks)\n";
            continue;
        }

        Vec3 stage_center{0, 0, 1.7};
        double stage_radius = 0.5;
        if (fs::exists(dir / "scene.json")) {
            Scene scene = scene_load((dir / "scene.json").string());
            stage_center = scene.stage_center;
            stage_radius = scene.stage_radius;
        }
        VisualHull hull = carve_hull(masks, stage_center, stage_radius * 1.1, hull_depth);
        BoundsMap bounds = compute_bounds(hull, cams.rig);

        for (HullMode mode : modes) {
            MatchConfig cfg = base_config;
            cfg.mode = mode;
            const BoundsMap* b = mode == HullMode::None ? nullptr : &bounds;
            DisparityMap pred = match(left, right, b, cfg);
            AblationRow row;
            row.scene = dir.filename().string();
            row.mode = mode;
            row.report = compute_metrics(pred, gt, have_occ ? &occ : nullptr);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void ablation_csv(const std::string& path, const std::vector<AblationRow>& rows) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << "scene,mode,epe_all,epe_noc,gt4_all,d1_all\n";
    for (const AblationRow& row : rows)
        out << row.scene << "," << hull_mode_name(row.mode) << "," << row.report.epe_all << ","
            << row.report.epe_noc << "," << row.report.gt4_all << "," << row.report.d1_all
            << "\n";
    if (!out)
        throw IoError("short write to " + path);
}

} // namespace hullstereo
