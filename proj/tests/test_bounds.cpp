#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "hullstereo/bounds.hpp"
#include "hullstereo/errors.hpp"
#include "hullstereo/eval.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/synth.hpp"

namespace fs = std::filesystem;
using namespace hullstereo;

namespace {

fs::path tmp_dir() {
    fs::path p = fs::temp_directory_path() / "hullstereo_test_bounds";
    fs::create_directories(p);
    return p;
}

// Exact cone-test silhouette of a sphere, independent of the renderer.
ByteImage sphere_mask(const PinholeCamera& cam, const Vec3& center, double radius) {
    ByteImage m(cam.width, cam.height);
    Vec3 eye = cam.center();
    Vec3 oc = center - eye;
    double dist = norm(oc);
    REQUIRE(dist > radius);
    Vec3 axis = oc / dist;
    double cos_half = std::sqrt(1.0 - (radius / dist) * (radius / dist));
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            Vec3 dir = normalized(cam.backproject(x, y, 1.0) - eye);
            m.at(x, y) = dot(dir, axis) >= cos_half ? 255 : 0;
        }
    return m;
}

StereoRig front_rig() {
    StereoRig rig;
    rig.left.width = rig.right.width = 640;
    rig.left.height = rig.right.height = 480;
    rig.left.fx = rig.left.fy = rig.right.fx = rig.right.fy = 400.0;
    rig.left.cx = rig.right.cx = 319.5;
    rig.left.cy = rig.right.cy = 239.5;
    rig.right.translation = {-0.2, 0, 0};
    rig.baseline = 0.2;
    validate_rig(rig);
    return rig;
}

struct SphereSetup {
    VisualHull hull;
    StereoRig rig;
    std::vector<SilhouetteMask> masks;
};

SphereSetup carve_sphere(double dilation = 0.0) {
    const Vec3 c{0, 0, 2.0};
    const double R = 0.5;
    SphereSetup s;
    s.rig = front_rig();
    for (const PinholeCamera& cam : synth_ring_cameras(c)) {
        SilhouetteMask m;
        m.pixels = sphere_mask(cam, c, R);
        if (dilation > 0.0)
            m.pixels = perturb_mask(m.pixels, MorphOp::Dilate, dilation);
        m.camera = cam;
        s.masks.push_back(std::move(m));
    }
    s.hull = carve_hull(s.masks, c, 0.7, 8);
    return s;
}

} // namespace

TEST_CASE("disparity and depth conversions invert each other") {
    StereoRig rig = front_rig();
    CHECK(disparity_from_depth(2.0, rig) == doctest::Approx(400.0 * 0.2 / 2.0));
    CHECK(depth_from_disparity(40.0, rig) == doctest::Approx(2.0));
    for (double z : {0.3, 1.0, 5.5})
        CHECK(depth_from_disparity(disparity_from_depth(z, rig), rig) == doctest::Approx(z));
    CHECK_THROWS_AS(disparity_from_depth(0.0, rig), NumericError);
    CHECK_THROWS_AS(disparity_from_depth(-1.0, rig), NumericError);
    CHECK_THROWS_AS(depth_from_disparity(0.0, rig), NumericError);
}

TEST_CASE("empty hull leaves every pixel invalid") {
    StereoRig rig = front_rig();
    VisualHull hull;
    hull.center = {0, 0, 2.0};
    hull.half_extent = 0.7;
    hull.max_depth = 6;
    hull.nodes.resize(1); // root Outside
    BoundsMap b = compute_bounds(hull, rig);
    CHECK(b.width == 160);
    CHECK(b.height == 120);
    for (size_t i = 0; i < b.valid.size(); ++i) {
        CHECK(b.valid[i] == 0);
        CHECK(b.b_min[i] == 0.0f);
        CHECK(b.b_max[i] == 0.0f);
    }
}

TEST_CASE("sphere bounds bracket the analytic depth interval") {
    SphereSetup s = carve_sphere();
    BoundsMap b = compute_bounds(s.hull, s.rig);
    REQUIRE(b.width == 160);
    REQUIRE(b.height == 120);

    // Central feature pixel: the ray pierces the sphere close to its poles at
    // z = 1.5 and z = 2.5, so the interval must cover the matching disparity
    // range (over 4, the feature scale) and cannot stretch far beyond it.
    size_t center = b.index(80, 60);
    REQUIRE(b.valid[center] == 1);
    double d_near = 400.0 * 0.2 / 1.5 / 4.0; // 13.33 feature px
    double d_far = 400.0 * 0.2 / 2.5 / 4.0;  // 8.0 feature px
    CHECK(b.b_max[center] >= float(d_near - 0.1));
    CHECK(b.b_min[center] <= float(d_far + 0.1));
    CHECK(b.b_max[center] <= float(d_near + 2.5));
    CHECK(b.b_min[center] >= float(d_far - 2.5));

    int valid_count = 0;
    for (int y = 0; y < b.height; ++y)
        for (int x = 0; x < b.width; ++x) {
            size_t i = b.index(x, y);
            if (!b.valid[i])
                continue;
            ++valid_count;
            CHECK(b.b_min[i] >= 0.0f);
            CHECK(b.b_min[i] <= b.b_max[i]);
            CHECK(b.b_max[i] <= float(b.width));
        }
    // The sphere spans about 53 feature pixels across; expect a solid disc.
    CHECK(valid_count > 1500);
    CHECK(valid_count < 4000);

    // A ray far from the sphere never enters the hull.
    CHECK(b.valid[b.index(5, 5)] == 0);
}

TEST_CASE("mask dilation only widens the intervals") {
    SphereSetup base = carve_sphere();
    SphereSetup fat = carve_sphere(6.0);
    BoundsMap b0 = compute_bounds(base.hull, base.rig);
    BoundsMap b1 = compute_bounds(fat.hull, fat.rig);
    REQUIRE(b0.width == b1.width);
    REQUIRE(b0.height == b1.height);
    int widened = 0;
    for (size_t i = 0; i < b0.valid.size(); ++i) {
        if (!b0.valid[i])
            continue;
        // A dilated hull is a superset, so coverage and span can only grow.
        REQUIRE(b1.valid[i] == 1);
        CHECK(b1.b_min[i] <= b0.b_min[i] + 0.51f);
        CHECK(b1.b_max[i] >= b0.b_max[i] - 0.51f);
        if (b1.b_max[i] - b1.b_min[i] > b0.b_max[i] - b0.b_min[i])
            ++widened;
    }
    CHECK(widened > 500);
}

TEST_CASE("bounds are deterministic") {
    SphereSetup s = carve_sphere();
    BoundsMap a = compute_bounds(s.hull, s.rig);
    BoundsMap b = compute_bounds(s.hull, s.rig);
    CHECK(a.b_min == b.b_min);
    CHECK(a.b_max == b.b_max);
    CHECK(a.valid == b.valid);
}

TEST_CASE("feature scale must be in (0, 1]") {
    SphereSetup s = carve_sphere();
    CHECK_THROWS_AS(compute_bounds(s.hull, s.rig, 0.0), ConfigError);
    CHECK_THROWS_AS(compute_bounds(s.hull, s.rig, -0.25), ConfigError);
    CHECK_THROWS_AS(compute_bounds(s.hull, s.rig, 1.5), ConfigError);
}

TEST_CASE("bounds round-trip through the 3-channel file") {
    SphereSetup s = carve_sphere();
    BoundsMap b = compute_bounds(s.hull, s.rig);
    std::string p = (tmp_dir() / "b.pfm").string();
    bounds_save(p, b);
    BoundsMap back = bounds_load(p);
    CHECK(back.width == b.width);
    CHECK(back.height == b.height);
    CHECK(back.b_min == b.b_min);
    CHECK(back.b_max == b.b_max);
    CHECK(back.valid == b.valid);
}

TEST_CASE("bounds file with data on an invalid pixel is rejected") {
    PfmImage img;
    img.width = 4;
    img.height = 2;
    img.channels = 3;
    img.data.assign(4 * 2 * 3, 0.0f);
    img.at(1, 0, 0) = 2.0f; // b_min on a pixel whose valid channel is 0
    std::string p = (tmp_dir() / "poison.pfm").string();
    pfm_write(p, img);
    CHECK_THROWS_AS(bounds_load(p), IoError);

    CHECK_THROWS_AS(bounds_load((tmp_dir() / "absent.pfm").string()), IoError);

    // A 1-channel file is not a bounds map.
    PfmImage gray;
    gray.width = 4;
    gray.height = 2;
    gray.channels = 1;
    gray.data.assign(8, 0.0f);
    std::string q = (tmp_dir() / "gray.pfm").string();
    pfm_write(q, gray);
    CHECK_THROWS_AS(bounds_load(q), IoError);
}
