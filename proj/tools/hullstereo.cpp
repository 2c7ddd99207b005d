#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hullstereo/bounds.hpp"
#include "hullstereo/config.hpp"
#include "hullstereo/errors.hpp"
#include "hullstereo/eval.hpp"
#include "hullstereo/hull.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/matcher.hpp"
#include "hullstereo/memstat.hpp"
#include "hullstereo/parallel.hpp"
#include "hullstereo/synth.hpp"

namespace fs = std::filesystem;
using namespace hullstereo;

namespace {

// Cube enclosing the stage with 10% margin; scene.json refines the default.
void stage_cube(const fs::path& near_json, Vec3& center, double& half_extent) {
    Scene fallback;
    center = fallback.stage_center;
    half_extent = fallback.stage_radius * 1.1;
    fs::path scene_json = near_json.parent_path() / "scene.json";
    if (fs::exists(scene_json)) {
        Scene scene = scene_load(scene_json.string());
        center = scene.stage_center;
        half_extent = scene.stage_radius * 1.1;
    }
}

std::vector<SilhouetteMask> load_ring_masks(const CameraSet& cams, const fs::path& base_dir) {
    std::vector<SilhouetteMask> masks;
    for (const RingView& view : cams.ring) {
        SilhouetteMask m;
        m.pixels = pgm_read((base_dir / view.mask_file).string());
        m.camera = view.camera;
        masks.push_back(std::move(m));
    }
    return masks;
}

int run(int argc, char** argv) {
    CLI::App app{"Visual-hull guided sparse-dense stereo matcher"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "worker threads (0 = HULLSTEREO_THREADS or hardware)");
    app.parse_complete_callback([&] { set_thread_count(threads); });

    // --- synth ---------------------------------------------------------
    auto* synth = app.add_subcommand("synth", "generate a synthetic capture-stage scene");
    struct {
        uint64_t seed = 1;
        uint64_t pattern_seed = 99;
        std::string out;
        int ring = 12;
    } sy;
    synth->add_option("--seed", sy.seed, "scene seed");
    synth->add_option("--pattern-seed", sy.pattern_seed, "projected-pattern seed");
    synth->add_option("--ring", sy.ring, "number of silhouette cameras")->check(CLI::Range(2, 64));
    synth->add_option("--out", sy.out, "output directory")->required();
    synth->callback([&] {
        Scene scene = generate_scene(sy.seed);
        StereoRig rig = synth_default_rig();
        std::vector<PinholeCamera> ring = synth_ring_cameras(scene.stage_center, sy.ring);
        RenderOutput out = render(scene, rig, ring, sy.pattern_seed);
        write_scene_outputs(sy.out, scene, rig, ring, out);
        std::cout << "scene " << sy.seed << ": " << scene.objects.size() << " objects -> "
                  << sy.out << "\n";
    });

    // --- hull ----------------------------------------------------------
    auto* hullc = app.add_subcommand("hull", "carve a visual hull from silhouette masks");
    struct {
        std::string cameras, out;
        int depth = 8;
        std::vector<double> center;
        double half_extent = 0;
    } hu;
    hullc->add_option("--cameras", hu.cameras, "cameras.json with ring masks")->required();
    hullc->add_option("--out", hu.out, "output .vhull file")->required();
    hullc->add_option("--depth", hu.depth, "octree depth")->check(CLI::Range(1, 12));
    hullc->add_option("--center", hu.center, "cube center x y z")->expected(3);
    hullc->add_option("--half-extent", hu.half_extent, "cube half extent (m)");
    hullc->callback([&] {
        CameraSet cams = load_cameras(hu.cameras);
        std::vector<SilhouetteMask> masks = load_ring_masks(cams, fs::path(hu.cameras).parent_path());
        Vec3 center;
        double half_extent;
        stage_cube(hu.cameras, center, half_extent);
        if (!hu.center.empty())
            center = {hu.center[0], hu.center[1], hu.center[2]};
        if (hu.half_extent > 0)
            half_extent = hu.half_extent;
        VisualHull hull = carve_hull(masks, center, half_extent, hu.depth);
        hull_save(hu.out, hull);
        std::cout << "hull: " << hull.nodes.size() << " nodes -> " << hu.out << "\n";
    });

    // --- bounds --------------------------------------------------------
    auto* boundsc = app.add_subcommand("bounds", "per-pixel disparity bounds from a hull");
    struct {
        std::string hull, cameras, out;
        double scale = 0.25;
    } bo;
    boundsc->add_option("--hull", bo.hull, ".vhull file")->required();
    boundsc->add_option("--cameras", bo.cameras, "cameras.json with the rig")->required();
    boundsc->add_option("--out", bo.out, "output bounds PFM")->required();
    boundsc->add_option("--scale", bo.scale, "feature scale (default 1/4)");
    boundsc->callback([&] {
        VisualHull hull = hull_load(bo.hull);
        CameraSet cams = load_cameras(bo.cameras);
        BoundsMap bounds = compute_bounds(hull, cams.rig, bo.scale);
        bounds_save(bo.out, bounds);
        uint64_t valid = 0;
        for (uint8_t v : bounds.valid)
            valid += v;
        std::cout << "bounds: " << valid << "/" << bounds.valid.size() << " valid pixels -> "
                  << bo.out << "\n";
    });

    // --- match ---------------------------------------------------------
    auto* matchc = app.add_subcommand("match", "sparse-dense stereo matching");
    struct {
        std::string left, right, bounds, config, out, dump_iters, dump_features, mode;
    } ma;
    matchc->add_option("--left", ma.left, "left image (PGM)")->required();
    matchc->add_option("--right", ma.right, "right image (PGM)")->required();
    matchc->add_option("--bounds", ma.bounds, "bounds PFM (optional)");
    matchc->add_option("--config", ma.config, "run config JSON");
    matchc->add_option("--mode", ma.mode, "hull routing: none|initial_only|update_only|both");
    matchc->add_option("--out", ma.out, "output disparity PFM")->required();
    matchc->add_option("--dump-iters", ma.dump_iters, "directory for per-iteration maps");
    matchc->add_option("--dump-features", ma.dump_features, "directory for feature blobs");
    matchc->callback([&] {
        RunConfig cfg = ma.config.empty() ? run_config_defaults() : run_config_load(ma.config);
        if (!ma.mode.empty())
            cfg.match.mode = hull_mode_from_name(ma.mode);
        GrayImage left = pgm_read_gray(ma.left);
        GrayImage right = pgm_read_gray(ma.right);
        BoundsMap bounds;
        bool have_bounds = !ma.bounds.empty();
        if (have_bounds)
            bounds = bounds_load(ma.bounds);

        MatchDebug debug;
        debug.keep_iterates = !ma.dump_iters.empty();
        DisparityMap disp =
            match(left, right, have_bounds ? &bounds : nullptr, cfg.match, &debug);
        disparity_save(ma.out, disp);

        if (!ma.dump_iters.empty()) {
            fs::create_directories(ma.dump_iters);
            for (size_t i = 0; i < debug.iterates.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "iter_%02zu.pfm", i);
                disparity_save((fs::path(ma.dump_iters) / name).string(), debug.iterates[i]);
            }
        }
        if (!ma.dump_features.empty()) {
            fs::create_directories(ma.dump_features);
            feature_map_save((fs::path(ma.dump_features) / "left.feat").string(),
                             extract_features(left, cfg.match.features));
            feature_map_save((fs::path(ma.dump_features) / "right.feat").string(),
                             extract_features(right, cfg.match.features));
        }
        fs::path resolved = fs::path(ma.out).parent_path() / "resolved_config.json";
        run_config_save(resolved.string(), cfg);
        std::cout << "match -> " << ma.out << "\n";
    });

    // --- eval ----------------------------------------------------------
    auto* evalc = app.add_subcommand("eval", "disparity metrics against ground truth");
    struct {
        std::string pred, gt, occ, out;
    } ev;
    evalc->add_option("--pred", ev.pred, "predicted disparity PFM")->required();
    evalc->add_option("--gt", ev.gt, "ground-truth disparity PFM")->required();
    evalc->add_option("--occ", ev.occ, "occlusion mask PGM (255 = occluded)");
    evalc->add_option("--out", ev.out, "report JSON")->required();
    evalc->callback([&] {
        DisparityMap pred = disparity_load(ev.pred, DispUnits::Full);
        DisparityMap gt = disparity_load(ev.gt, DispUnits::Full);
        ByteImage occ;
        bool have_occ = !ev.occ.empty();
        if (have_occ)
            occ = pgm_read(ev.occ);
        MetricReport rep = compute_metrics(pred, gt, have_occ ? &occ : nullptr);
        report_save(ev.out, rep);
        std::cout << "epe_all " << rep.epe_all << "  epe_noc " << rep.epe_noc << "  >4px "
                  << rep.gt4_all << "%  d1 " << rep.d1_all << "%\n";
    });

    // --- ablate --------------------------------------------------------
    auto* ablatec = app.add_subcommand("ablate", "hull-guidance ablation over a scene suite");
    struct {
        std::string data, out, config;
        std::vector<std::string> modes{"none", "initial_only", "update_only", "both"};
    } ab;
    ablatec->add_option("--data", ab.data, "directory of scene subdirectories")->required();
    ablatec->add_option("--out", ab.out, "output CSV")->required();
    ablatec->add_option("--config", ab.config, "run config JSON");
    ablatec->add_option("--modes", ab.modes, "modes to run")->delimiter(',');
    ablatec->callback([&] {
        RunConfig cfg = ab.config.empty() ? run_config_defaults() : run_config_load(ab.config);
        std::vector<HullMode> modes;
        for (const std::string& m : ab.modes)
            modes.push_back(hull_mode_from_name(m));
        std::vector<AblationRow> rows = ablation_run(ab.data, modes, cfg.match, cfg.hull_depth);
        ablation_csv(ab.out, rows);
        fs::path resolved = fs::path(ab.out).parent_path() / "resolved_config.json";
        run_config_save(resolved.string(), cfg);
        std::cout << rows.size() << " rows -> " << ab.out << "\n";
    });

    // --- memstat -------------------------------------------------------
    auto* memc = app.add_subcommand("memstat", "correlation-memory model and instrumentation");
    struct {
        std::vector<int> widths{256, 512, 1024};
        int height = 320;
        int k = 8, r = 4, groups = 8;
        int instrument_max = 256;
        std::string out;
    } me;
    memc->add_option("--widths", me.widths, "input widths")->delimiter(',');
    memc->add_option("--height", me.height, "input height");
    memc->add_option("--k", me.k, "sparse candidates");
    memc->add_option("--r", me.r, "window radius");
    memc->add_option("--groups", me.groups, "correlation groups");
    memc->add_option("--instrument-max", me.instrument_max,
                     "instrument runs for widths up to this (0 = never)");
    memc->add_option("--out", me.out, "output CSV")->required();
    memc->callback([&] {
        std::ofstream out(me.out);
        if (!out)
            throw IoError("cannot open " + me.out + " for writing");
        out << "strategy,w,modeled_bytes,observed_bytes\n";
        accounting::enable(true);
        for (Strategy s : {Strategy::Dense, Strategy::SparseKnn, Strategy::JitWindow}) {
            for (int w : me.widths) {
                MemoryProfile p = model_memory(s, w, me.height, me.k, me.r, me.groups);
                out << strategy_name(s) << "," << w << "," << p.peak_bytes << ",";
                if (me.instrument_max > 0 && w <= me.instrument_max)
                    out << instrument_run(s, w, me.height, me.k, me.r, me.groups);
                out << "\n";
            }
        }
        accounting::enable(false);
        if (!out)
            throw IoError("short write to " + me.out);
        uint64_t jit = model_memory(Strategy::JitWindow, me.widths[0], me.height, me.k, me.r,
                                    me.groups)
                           .peak_bytes;
        uint64_t sparse = model_memory(Strategy::SparseKnn, me.widths[0], me.height, me.k, me.r,
                                       me.groups)
                              .peak_bytes;
        std::cout << "jit window " << (jit <= sparse ? "<=" : ">") << " sparse volume at w="
                  << me.widths[0] << " ((2r+1)*G = " << (2 * me.r + 1) * me.groups
                  << " vs 2k = " << 2 * me.k << ") -> " << me.out << "\n";
    });

    // --- pipeline ------------------------------------------------------
    auto* pipec = app.add_subcommand("pipeline", "synth -> hull -> bounds -> match -> eval");
    struct {
        uint64_t seed = 1;
        std::string out, scene_dir, config, mode;
        bool no_hull = false;
    } pi;
    pipec->add_option("--seed", pi.seed, "scene seed (ignored with --scene-dir)");
    pipec->add_option("--out", pi.out, "output directory")->required();
    pipec->add_option("--scene-dir", pi.scene_dir, "ingest an existing scene directory");
    pipec->add_option("--config", pi.config, "run config JSON");
    pipec->add_option("--mode", pi.mode, "hull routing: none|initial_only|update_only|both");
    pipec->add_flag("--no-hull", pi.no_hull, "skip carving; match without bounds");
    pipec->callback([&] {
        RunConfig cfg = pi.config.empty() ? run_config_defaults() : run_config_load(pi.config);
        cfg.seed = pi.seed;
        if (!pi.mode.empty())
            cfg.match.mode = hull_mode_from_name(pi.mode);

        fs::path scene_dir;
        if (pi.scene_dir.empty()) {
            Scene scene = generate_scene(cfg.seed);
            StereoRig rig = synth_default_rig();
            std::vector<PinholeCamera> ring = synth_ring_cameras(scene.stage_center);
            RenderOutput ro = render(scene, rig, ring, cfg.pattern_seed);
            scene_dir = fs::path(pi.out) / "scene";
            write_scene_outputs(scene_dir.string(), scene, rig, ring, ro);
        } else {
            scene_dir = pi.scene_dir;
        }

        // Validate every input before the first write so a bad configuration
        // leaves no partial outputs behind.
        fs::path cam_json = scene_dir / "cameras.json";
        if (!fs::exists(scene_dir / "left.pgm") || !fs::exists(scene_dir / "right.pgm") ||
            !fs::exists(cam_json))
            throw ConfigError("pipeline: " + scene_dir.string() +
                              " lacks left.pgm/right.pgm/cameras.json");
        CameraSet cams = load_cameras(cam_json.string());
        if (!pi.no_hull) {
            if (cams.ring.size() < 2)
                throw ConfigError("pipeline: hull requested but cameras.json lists fewer than 2 masks");
            for (const RingView& view : cams.ring)
                if (!fs::exists(scene_dir / view.mask_file))
                    throw ConfigError("pipeline: missing mask " + view.mask_file);
        }
        GrayImage left = pgm_read_gray((scene_dir / "left.pgm").string());
        GrayImage right = pgm_read_gray((scene_dir / "right.pgm").string());

        fs::create_directories(pi.out);
        BoundsMap bounds;
        bool have_bounds = false;
        if (!pi.no_hull) {
            std::vector<SilhouetteMask> masks = load_ring_masks(cams, scene_dir);
            Vec3 center;
            double half_extent;
            stage_cube(cam_json, center, half_extent);
            VisualHull hull = carve_hull(masks, center, half_extent, cfg.hull_depth);
            hull_save((fs::path(pi.out) / "hull.vhull").string(), hull);
            bounds = compute_bounds(hull, cams.rig);
            bounds_save((fs::path(pi.out) / "bounds.pfm").string(), bounds);
            have_bounds = true;
        }

        DisparityMap disp = match(left, right, have_bounds ? &bounds : nullptr, cfg.match);
        disparity_save((fs::path(pi.out) / "disp.pfm").string(), disp);

        if (fs::exists(scene_dir / "gt.pfm")) {
            DisparityMap gt = disparity_load((scene_dir / "gt.pfm").string(), DispUnits::Full);
            ByteImage occ;
            bool have_occ = fs::exists(scene_dir / "occ.pgm");
            if (have_occ)
                occ = pgm_read((scene_dir / "occ.pgm").string());
            MetricReport rep = compute_metrics(disp, gt, have_occ ? &occ : nullptr);
            report_save((fs::path(pi.out) / "report.json").string(), rep);
            std::cout << "epe_all " << rep.epe_all << "  epe_noc " << rep.epe_noc << "\n";
        }
        run_config_save((fs::path(pi.out) / "resolved_config.json").string(), cfg);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
