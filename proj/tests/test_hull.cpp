#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hullstereo/errors.hpp"
#include "hullstereo/hull.hpp"
#include "hullstereo/rng.hpp"
#include "hullstereo/synth.hpp"

namespace fs = std::filesystem;
using namespace hullstereo;

namespace {

fs::path tmp_dir() {
    fs::path p = fs::temp_directory_path() / "hullstereo_test_hull";
    fs::create_directories(p);
    return p;
}

// Exact silhouette of a sphere: foreground iff the pixel ray lies inside the
// cone tangent to the sphere. Independent of the renderer.
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

std::vector<SilhouetteMask> ring_sphere_masks(const Vec3& center, double radius) {
    std::vector<SilhouetteMask> masks;
    for (const PinholeCamera& cam : synth_ring_cameras(center)) {
        SilhouetteMask m;
        m.pixels = sphere_mask(cam, center, radius);
        m.camera = cam;
        masks.push_back(std::move(m));
    }
    return masks;
}

bool same_nodes(const VisualHull& a, const VisualHull& b) {
    if (a.nodes.size() != b.nodes.size())
        return false;
    for (size_t i = 0; i < a.nodes.size(); ++i)
        if (a.nodes[i].state != b.nodes[i].state || a.nodes[i].first_child != b.nodes[i].first_child)
            return false;
    return true;
}

} // namespace

TEST_CASE("all-foreground masks keep the root whole") {
    std::vector<SilhouetteMask> masks;
    for (const PinholeCamera& cam : synth_ring_cameras({0, 0, 1.7}, 4)) {
        SilhouetteMask m;
        m.pixels = ByteImage(cam.width, cam.height);
        for (auto& v : m.pixels.data)
            v = 255;
        m.camera = cam;
        masks.push_back(std::move(m));
    }
    VisualHull hull = carve_hull(masks, {0, 0, 1.7}, 0.3, 6);
    CHECK_FALSE(hull.empty());
    CHECK(hull.nodes.size() == 1);
    CHECK(hull.nodes[0].state == CellState::Inside);
    CHECK(hull_contains(hull, {0, 0, 1.7}));
    CHECK(hull_contains(hull, {0.29, -0.29, 1.41}));
    CHECK_FALSE(hull_contains(hull, {0, 0, 2.5}));
}

TEST_CASE("one all-background view empties the hull") {
    std::vector<SilhouetteMask> masks;
    std::vector<PinholeCamera> ring = synth_ring_cameras({0, 0, 1.7}, 4);
    for (size_t i = 0; i < ring.size(); ++i) {
        SilhouetteMask m;
        m.pixels = ByteImage(ring[i].width, ring[i].height);
        for (auto& v : m.pixels.data)
            v = i == 2 ? 0 : 255;
        m.camera = ring[i];
        masks.push_back(std::move(m));
    }
    VisualHull hull = carve_hull(masks, {0, 0, 1.7}, 0.3, 6);
    CHECK(hull.empty());
    CHECK_FALSE(hull_contains(hull, {0, 0, 1.7}));
}

TEST_CASE("carve requires at least two views") {
    std::vector<SilhouetteMask> one = ring_sphere_masks({0, 0, 1.7}, 0.2);
    one.resize(1);
    CHECK_THROWS_AS(carve_hull(one, {0, 0, 1.7}, 0.5, 5), ConfigError);
    CHECK_THROWS_AS(carve_hull(ring_sphere_masks({0, 0, 1.7}, 0.2), {0, 0, 1.7}, 0.5, 0),
                    ConfigError);
}

TEST_CASE("ring-carved sphere matches a geometric probe oracle") {
    const Vec3 c{0, 0, 1.7};
    const double R = 0.25;
    std::vector<SilhouetteMask> masks = ring_sphere_masks(c, R);
    VisualHull hull = carve_hull(masks, c, 0.55, 7);
    REQUIRE_FALSE(hull.empty());
    CHECK(hull.max_depth == 7);
    CHECK(hull.finest_leaf_edge() == doctest::Approx(2.0 * 0.55 / 128.0));

    // The hull encloses the sphere and cannot extend far beyond it; probe
    // points away from the boundary where voxelization cannot excuse either
    // answer. A 12-view ring bulges by at most a few percent laterally.
    Rng rng(99);
    int checked_in = 0, checked_out = 0;
    for (int i = 0; i < 6000; ++i) {
        Vec3 p{c.x + rng.uniform(-0.5, 0.5), c.y + rng.uniform(-0.5, 0.5),
               c.z + rng.uniform(-0.5, 0.5)};
        double dist = norm(p - c);
        if (dist <= R * 0.82) {
            CHECK(hull_contains(hull, p));
            ++checked_in;
        } else if (dist >= R * 1.45 && std::abs(p.x - c.x) < 0.54 &&
                   std::abs(p.y - c.y) < 0.54 && std::abs(p.z - c.z) < 0.54) {
            CHECK_FALSE(hull_contains(hull, p));
            ++checked_out;
        }
    }
    CHECK(checked_in > 100);
    CHECK(checked_out > 1000);
    CHECK(hull_contains(hull, c));
}

TEST_CASE("leaf lookup returns cubes that cover their state") {
    const Vec3 c{0, 0, 1.7};
    std::vector<SilhouetteMask> masks = ring_sphere_masks(c, 0.25);
    VisualHull hull = carve_hull(masks, c, 0.55, 6);
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        Vec3 p{c.x + rng.uniform(-0.54, 0.54), c.y + rng.uniform(-0.54, 0.54),
               c.z + rng.uniform(-0.54, 0.54)};
        HullLeaf leaf = hull_leaf_at(hull, p);
        CHECK(p.x >= leaf.lo.x);
        CHECK(p.x < leaf.hi.x);
        CHECK(p.y >= leaf.lo.y);
        CHECK(p.y < leaf.hi.y);
        CHECK(p.z >= leaf.lo.z);
        CHECK(p.z < leaf.hi.z);
        CHECK((leaf.state == CellState::Inside) == hull_contains(hull, p));
        // The leaf is uniform: its center agrees with the queried point.
        Vec3 mid = (leaf.lo + leaf.hi) * 0.5;
        CHECK((leaf.state == CellState::Inside) == hull_contains(hull, mid));
    }
}

TEST_CASE("carving is deterministic") {
    const Vec3 c{0, 0, 1.7};
    std::vector<SilhouetteMask> masks = ring_sphere_masks(c, 0.2);
    VisualHull a = carve_hull(masks, c, 0.5, 6);
    VisualHull b = carve_hull(masks, c, 0.5, 6);
    CHECK(same_nodes(a, b));
}

TEST_CASE("hull snapshot round-trips") {
    const Vec3 c{0, 0, 1.7};
    VisualHull hull = carve_hull(ring_sphere_masks(c, 0.22), c, 0.5, 6);
    std::string p = (tmp_dir() / "h.vhull").string();
    hull_save(p, hull);
    VisualHull back = hull_load(p);
    CHECK(back.center.x == hull.center.x);
    CHECK(back.half_extent == hull.half_extent);
    CHECK(back.max_depth == hull.max_depth);
    CHECK(same_nodes(back, hull));

    CHECK_THROWS_AS(hull_load((tmp_dir() / "absent.vhull").string()), IoError);
    std::ofstream bad(tmp_dir() / "bad.vhull", std::ios::binary);
    bad << "NOPEnope";
    bad.close();
    CHECK_THROWS_AS(hull_load((tmp_dir() / "bad.vhull").string()), IoError);
}
