#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "hullstereo/errors.hpp"
#include "hullstereo/eval.hpp"
#include "hullstereo/rng.hpp"
#include "hullstereo/synth.hpp"

namespace fs = std::filesystem;
using namespace hullstereo;

namespace {

fs::path tmp_dir() {
    fs::path p = fs::temp_directory_path() / "hullstereo_test_eval";
    fs::create_directories(p);
    return p;
}

DisparityMap flat_map(int w, int h, float value) {
    DisparityMap m(w, h, DispUnits::Full);
    for (size_t i = 0; i < m.d.size(); ++i) {
        m.d[i] = value;
        m.valid[i] = 1;
    }
    return m;
}

// Brute-force disc morphology oracle.
ByteImage brute_morph(const ByteImage& mask, MorphOp op, double radius) {
    ByteImage out(mask.width, mask.height);
    int r = static_cast<int>(std::ceil(radius));
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x) {
            bool hit = false;
            for (int dy = -r; dy <= r && !hit; ++dy)
                for (int dx = -r; dx <= r && !hit; ++dx) {
                    if (double(dx) * dx + double(dy) * dy > radius * radius)
                        continue;
                    int qx = x + dx, qy = y + dy;
                    if (!mask.in_bounds(qx, qy))
                        continue;
                    bool fg = mask.at(qx, qy) >= 128;
                    if (op == MorphOp::Dilate ? fg : !fg)
                        hit = true;
                }
            if (op == MorphOp::Dilate)
                out.at(x, y) = hit ? 255 : 0;
            else
                out.at(x, y) = hit ? 0 : 255;
        }
    return out;
}

} // namespace

TEST_CASE("perfect predictions score zero everywhere") {
    DisparityMap gt = flat_map(10, 6, 50.0f);
    MetricReport rep = compute_metrics(gt, gt, nullptr);
    CHECK(rep.epe_all == 0.0);
    CHECK(rep.epe_noc == 0.0);
    CHECK(rep.gt4_all == 0.0);
    CHECK(rep.d1_all == 0.0);
    CHECK(rep.count_all == 60);
    CHECK(rep.count_noc == 60);
    CHECK(rep.count_missing == 0);
}

TEST_CASE("small constant error moves EPE but not the outlier rates") {
    DisparityMap gt = flat_map(10, 6, 50.0f);
    DisparityMap pred = flat_map(10, 6, 51.0f);
    MetricReport rep = compute_metrics(pred, gt, nullptr);
    CHECK(rep.epe_all == doctest::Approx(1.0));
    CHECK(rep.gt4_all == 0.0);
    CHECK(rep.d1_all == 0.0); // 1 px is under both the 3 px and 5% gates
}

TEST_CASE("outlier rates count the failing half") {
    DisparityMap gt = flat_map(10, 6, 50.0f);
    DisparityMap pred = gt;
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 10; ++x)
            pred.d[pred.index(x, y)] = 55.0f; // err 5 > 4 and > max(3, 2.5)
    MetricReport rep = compute_metrics(pred, gt, nullptr);
    CHECK(rep.epe_all == doctest::Approx(2.5));
    CHECK(rep.gt4_all == doctest::Approx(50.0));
    CHECK(rep.d1_all == doctest::Approx(50.0));
}

TEST_CASE("the d1 gate needs both an absolute and a relative miss") {
    DisparityMap gt = flat_map(4, 1, 100.0f);
    DisparityMap pred = flat_map(4, 1, 104.0f); // err 4: > 3 but not > 5
    MetricReport rep = compute_metrics(pred, gt, nullptr);
    CHECK(rep.d1_all == 0.0);
    CHECK(rep.gt4_all == 0.0); // gt4 needs err > 4, not >= 4

    DisparityMap low = flat_map(4, 1, 10.0f);
    DisparityMap off = flat_map(4, 1, 13.5f); // err 3.5 > 3 and > 0.5
    MetricReport rep2 = compute_metrics(off, low, nullptr);
    CHECK(rep2.d1_all == doctest::Approx(100.0));
    CHECK(rep2.gt4_all == 0.0);
}

TEST_CASE("missing predictions are outliers excluded from EPE") {
    DisparityMap gt = flat_map(10, 1, 50.0f);
    DisparityMap pred = flat_map(10, 1, 52.0f);
    pred.valid[3] = 0;
    pred.valid[7] = 0;
    MetricReport rep = compute_metrics(pred, gt, nullptr);
    CHECK(rep.count_missing == 2);
    CHECK(rep.epe_all == doctest::Approx(2.0)); // over the 8 covered pixels
    CHECK(rep.gt4_all == doctest::Approx(20.0));
    CHECK(rep.d1_all == doctest::Approx(20.0));
}

TEST_CASE("occlusion splits the noc tally") {
    DisparityMap gt = flat_map(10, 1, 40.0f);
    DisparityMap pred = flat_map(10, 1, 40.0f);
    for (int x = 0; x < 10; ++x)
        pred.d[x] = x < 5 ? 40.0f : 46.0f;
    ByteImage occ(10, 1);
    for (int x = 5; x < 10; ++x)
        occ.at(x, 0) = 200; // all bad pixels occluded
    MetricReport rep = compute_metrics(pred, gt, &occ);
    CHECK(rep.count_all == 10);
    CHECK(rep.count_noc == 5);
    CHECK(rep.epe_noc == doctest::Approx(0.0));
    CHECK(rep.epe_all == doctest::Approx(3.0));
    CHECK(rep.gt4_all == doctest::Approx(50.0)); // rates stay over all pixels
}

TEST_CASE("metrics reject unusable inputs") {
    DisparityMap gt = flat_map(4, 4, 10.0f);
    DisparityMap small(3, 4, DispUnits::Full);
    CHECK_THROWS_AS(compute_metrics(small, gt, nullptr), ConfigError);
    ByteImage occ(5, 4);
    DisparityMap pred = flat_map(4, 4, 10.0f);
    CHECK_THROWS_AS(compute_metrics(pred, gt, &occ), ConfigError);

    DisparityMap hollow(4, 4, DispUnits::Full); // no valid GT anywhere
    CHECK_THROWS_AS(compute_metrics(pred, hollow, nullptr), NumericError);
}

TEST_CASE("report JSON parses back with the same numbers") {
    MetricReport rep;
    rep.epe_all = 1.25;
    rep.epe_noc = 0.75;
    rep.gt4_all = 12.5;
    rep.d1_all = 6.25;
    rep.count_all = 1000;
    rep.count_noc = 900;
    rep.count_missing = 17;
    fs::path p = tmp_dir() / "report.json";
    report_save(p.string(), rep);

    std::ifstream in(p);
    nlohmann::json j;
    in >> j;
    CHECK(j.at("epe_all").get<double>() == 1.25);
    CHECK(j.at("epe_noc").get<double>() == 0.75);
    CHECK(j.at("gt4_all").get<double>() == 12.5);
    CHECK(j.at("d1_all").get<double>() == 6.25);
    CHECK(j.at("count_all").get<uint64_t>() == 1000);
    CHECK(j.at("count_noc").get<uint64_t>() == 900);
    CHECK(j.at("count_missing").get<uint64_t>() == 17);
}

TEST_CASE("mask morphology matches a brute-force disc") {
    Rng rng(12);
    ByteImage mask(40, 28);
    // Blobby random mask: threshold smooth noise.
    for (int y = 0; y < 28; ++y)
        for (int x = 0; x < 40; ++x)
            mask.at(x, y) = value_noise2(8, x / 6.0, y / 6.0) > 0.55 ? 255 : 0;

    for (double radius : {2.5, 5.0}) {
        ByteImage dil = perturb_mask(mask, MorphOp::Dilate, radius);
        ByteImage ero = perturb_mask(mask, MorphOp::Erode, radius);
        ByteImage dil_ref = brute_morph(mask, MorphOp::Dilate, radius);
        ByteImage ero_ref = brute_morph(mask, MorphOp::Erode, radius);
        CHECK(dil.data == dil_ref.data);
        CHECK(ero.data == ero_ref.data);

        // Dilation grows the set, erosion shrinks it.
        for (size_t i = 0; i < mask.data.size(); ++i) {
            if (mask.data[i] >= 128)
                CHECK(dil.data[i] == 255);
            if (ero.data[i] == 255)
                CHECK(mask.data[i] >= 128);
        }
    }

    // Radius zero is the identity; negative radii are rejected.
    ByteImage same = perturb_mask(mask, MorphOp::Dilate, 0.0);
    CHECK(same.data == mask.data);
    CHECK_THROWS_AS(perturb_mask(mask, MorphOp::Erode, -1.0), ConfigError);

    // Empty and full masks are fixpoints.
    ByteImage none(16, 16, 0);
    ByteImage full(16, 16, 255);
    CHECK(perturb_mask(none, MorphOp::Dilate, 3.0).data == none.data);
    CHECK(perturb_mask(none, MorphOp::Erode, 3.0).data == none.data);
    CHECK(perturb_mask(full, MorphOp::Dilate, 3.0).data == full.data);
    CHECK(perturb_mask(full, MorphOp::Erode, 3.0).data == full.data);
}

TEST_CASE("ablation sweeps every scene and mode") {
    fs::path data = tmp_dir() / "suite";
    fs::create_directories(data);
    StereoRig rig = synth_default_rig();
    for (uint64_t seed : {31ull, 32ull}) {
        Scene scene = generate_scene(seed);
        std::vector<PinholeCamera> ring = synth_ring_cameras(scene.stage_center);
        RenderOutput out = render(scene, rig, ring, 99);
        write_scene_outputs((data / ("scene_" + std::to_string(seed))).string(), scene, rig,
                            ring, out);
    }

    MatchConfig cfg;
    cfg.refine.iterations = 4; // keep the sweep quick
    std::vector<AblationRow> rows =
        ablation_run(data.string(), {HullMode::None, HullMode::Both}, cfg, 6);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].scene == "scene_31");
    CHECK(rows[0].mode == HullMode::None);
    CHECK(rows[1].mode == HullMode::Both);
    CHECK(rows[2].scene == "scene_32");
    for (const AblationRow& row : rows) {
        CHECK(std::isfinite(row.report.epe_all));
        CHECK(row.report.count_all > 500);
    }

    fs::path csv = tmp_dir() / "ablation.csv";
    ablation_csv(csv.string(), rows);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "scene,mode,epe_all,epe_noc,gt4_all,d1_all");
    int lines = 0;
    for (std::string line; std::getline(in, line) && !line.empty();)
        ++lines;
    CHECK(lines == 4);

    fs::path hollow = tmp_dir() / "hollow";
    fs::create_directories(hollow);
    CHECK_THROWS_AS(ablation_run(hollow.string(), {HullMode::None}, cfg, 6), ConfigError);
    CHECK_THROWS_AS(ablation_run((tmp_dir() / "no_dir").string(), {HullMode::None}, cfg, 6),
                    IoError);
}
