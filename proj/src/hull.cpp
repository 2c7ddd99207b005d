#include "hullstereo/hull.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "hullstereo/errors.hpp"

namespace hullstereo {

namespace {

// Integral image over the binary mask for O(1) box counts.
struct MaskTable {
    int width = 0, height = 0;
    std::vector<uint32_t> sums; // (w+1)*(h+1)
    PinholeCamera camera;

    explicit MaskTable(const SilhouetteMask& m) : width(m.pixels.width), height(m.pixels.height),
                                                  camera(m.camera) {
        sums.assign(static_cast<size_t>(width + 1) * (height + 1), 0);
        for (int y = 0; y < height; ++y) {
            uint32_t row = 0;
            for (int x = 0; x < width; ++x) {
                row += m.pixels.at(x, y) >= 128 ? 1u : 0u;
                sums[static_cast<size_t>(y + 1) * (width + 1) + (x + 1)] =
                    sums[static_cast<size_t>(y) * (width + 1) + (x + 1)] + row;
            }
        }
    }

    // Inclusive pixel box [x0,x1]x[y0,y1], assumed clipped to the image.
    uint32_t count(int x0, int y0, int x1, int y1) const {
        auto s = [&](int x, int y) { return sums[static_cast<size_t>(y) * (width + 1) + x]; };
        return s(x1 + 1, y1 + 1) - s(x0, y1 + 1) - s(x1 + 1, y0) + s(x0, y0);
    }

    bool foreground_at(int x, int y) const { return count(x, y, x, y) > 0; }
};

// What one view says about a cube.
enum class ViewVerdict {
    Uninformative, // cube (partly) behind the camera or view sees nothing decisive
    Carve,         // whole projection is background or off-image: cube is empty
    Keep,          // visible projection is entirely foreground
    Mixed          // both foreground and background under the projection
};

ViewVerdict classify_view(const MaskTable& view, const Vec3& lo, const Vec3& hi) {
    double min_u = 0, max_u = 0, min_v = 0, max_v = 0;
    bool first = true;
    for (int corner = 0; corner < 8; ++corner) {
        Vec3 p{corner & 1 ? hi.x : lo.x, corner & 2 ? hi.y : lo.y, corner & 4 ? hi.z : lo.z};
        Vec3 cam = view.camera.to_camera(p);
        if (cam.z <= 1e-9) {
            // Any corner behind the image plane makes the projected box
            // unreliable; the caller subdivides instead.
            return ViewVerdict::Uninformative;
        }
        double u = view.camera.fx * cam.x / cam.z + view.camera.cx;
        double v = view.camera.fy * cam.y / cam.z + view.camera.cy;
        if (first) {
            min_u = max_u = u;
            min_v = max_v = v;
            first = false;
        } else {
            min_u = std::min(min_u, u);
            max_u = std::max(max_u, u);
            min_v = std::min(min_v, v);
            max_v = std::max(max_v, v);
        }
    }
    // Nearest-pixel-center box of the projection.
    int x0 = static_cast<int>(std::floor(min_u + 0.5));
    int x1 = static_cast<int>(std::floor(max_u + 0.5));
    int y0 = static_cast<int>(std::floor(min_v + 0.5));
    int y1 = static_cast<int>(std::floor(max_v + 0.5));
    if (x1 < 0 || y1 < 0 || x0 >= view.width || y0 >= view.height)
        return ViewVerdict::Carve; // silhouette cones only contain on-image rays
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, view.width - 1);
    y1 = std::min(y1, view.height - 1);
    uint32_t fg = view.count(x0, y0, x1, y1);
    uint32_t area = static_cast<uint32_t>(x1 - x0 + 1) * static_cast<uint32_t>(y1 - y0 + 1);
    if (fg == 0)
        return ViewVerdict::Carve;
    // The part hanging off the image is uninformative; an all-foreground
    // visible box cannot veto the cube.
    if (fg == area)
        return ViewVerdict::Keep;
    return ViewVerdict::Mixed;
}

// Leaf decision at max_depth: cube-center test against every view that sees
// the point (in front and on the image).
CellState classify_center(const std::vector<MaskTable>& views, const Vec3& center) {
    for (const MaskTable& view : views) {
        Vec3 cam = view.camera.to_camera(center);
        if (cam.z <= 1e-9)
            continue;
        double u = view.camera.fx * cam.x / cam.z + view.camera.cx;
        double v = view.camera.fy * cam.y / cam.z + view.camera.cy;
        int x = static_cast<int>(std::floor(u + 0.5));
        int y = static_cast<int>(std::floor(v + 0.5));
        if (x < 0 || y < 0 || x >= view.width || y >= view.height)
            return CellState::Outside;
        if (!view.foreground_at(x, y))
            return CellState::Outside;
    }
    return CellState::Inside;
}

struct Carver {
    const std::vector<MaskTable>& views;
    int max_depth;
    std::vector<HullNode> nodes;

    // Child order follows the corner bit pattern: bit0 = +x, bit1 = +y, bit2 = +z.
    void build(uint32_t index, const Vec3& lo, const Vec3& hi, int depth) {
        bool keep_all = true;
        for (const MaskTable& view : views) {
            ViewVerdict v = classify_view(view, lo, hi);
            if (v == ViewVerdict::Carve) {
                nodes[index].state = CellState::Outside;
                return;
            }
            if (v != ViewVerdict::Keep)
                keep_all = false;
        }
        if (keep_all) {
            nodes[index].state = CellState::Inside;
            return;
        }
        if (depth == max_depth) {
            nodes[index].state = classify_center(views, (lo + hi) / 2.0);
            return;
        }
        nodes[index].state = CellState::Branch;
        uint32_t first = static_cast<uint32_t>(nodes.size());
        nodes[index].first_child = first;
        nodes.resize(nodes.size() + 8);
        Vec3 mid = (lo + hi) / 2.0;
        for (int c = 0; c < 8; ++c) {
            Vec3 clo{c & 1 ? mid.x : lo.x, c & 2 ? mid.y : lo.y, c & 4 ? mid.z : lo.z};
            Vec3 chi{c & 1 ? hi.x : mid.x, c & 2 ? hi.y : mid.y, c & 4 ? hi.z : mid.z};
            build(first + static_cast<uint32_t>(c), clo, chi, depth + 1);
        }
    }
};

} // namespace

VisualHull carve_hull(const std::vector<SilhouetteMask>& masks, const Vec3& cube_center,
                      double cube_half_extent, int max_depth) {
    if (masks.size() < 2)
        throw ConfigError("carve_hull: need at least 2 masks");
    if (!(cube_half_extent > 0))
        throw ConfigError("carve_hull: cube half-extent must be positive");
    if (max_depth < 1 || max_depth > 12)
        throw ConfigError("carve_hull: max_depth must be in [1, 12]");
    std::vector<MaskTable> views;
    views.reserve(masks.size());
    for (const SilhouetteMask& m : masks) {
        validate_camera(m.camera, "mask camera");
        if (m.pixels.width != m.camera.width || m.pixels.height != m.camera.height)
            throw ConfigError("carve_hull: mask size does not match its camera");
        views.emplace_back(m);
    }

    VisualHull hull;
    hull.center = cube_center;
    hull.half_extent = cube_half_extent;
    hull.max_depth = max_depth;

    Carver carver{views, max_depth, {}};
    carver.nodes.resize(1);
    Vec3 ext{cube_half_extent, cube_half_extent, cube_half_extent};
    carver.build(0, cube_center - ext, cube_center + ext, 0);
    hull.nodes = std::move(carver.nodes);
    return hull;
}

bool hull_contains(const VisualHull& hull, const Vec3& point) {
    if (hull.nodes.empty())
        return false;
    Vec3 ext{hull.half_extent, hull.half_extent, hull.half_extent};
    Vec3 lo = hull.center - ext, hi = hull.center + ext;
    if (point.x < lo.x || point.x >= hi.x || point.y < lo.y || point.y >= hi.y ||
        point.z < lo.z || point.z >= hi.z)
        return false;
    return hull_leaf_at(hull, point).state == CellState::Inside;
}

HullLeaf hull_leaf_at(const VisualHull& hull, const Vec3& point) {
    Vec3 ext{hull.half_extent, hull.half_extent, hull.half_extent};
    Vec3 lo = hull.center - ext, hi = hull.center + ext;
    uint32_t index = 0;
    while (hull.nodes[index].state == CellState::Branch) {
        Vec3 mid = (lo + hi) / 2.0;
        int c = 0;
        if (point.x >= mid.x) {
            c |= 1;
            lo.x = mid.x;
        } else {
            hi.x = mid.x;
        }
        if (point.y >= mid.y) {
            c |= 2;
            lo.y = mid.y;
        } else {
            hi.y = mid.y;
        }
        if (point.z >= mid.z) {
            c |= 4;
            lo.z = mid.z;
        } else {
            hi.z = mid.z;
        }
        index = hull.nodes[index].first_child + static_cast<uint32_t>(c);
    }
    return {hull.nodes[index].state, lo, hi};
}

namespace {
constexpr uint32_t kHullMagic = 0x4c554856u; // "VHUL" little-endian
}

void hull_save(const std::string& path, const VisualHull& hull) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    auto put_u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    put_u32(kHullMagic);
    put_f64(hull.center.x);
    put_f64(hull.center.y);
    put_f64(hull.center.z);
    put_f64(hull.half_extent);
    put_u32(static_cast<uint32_t>(hull.max_depth));
    put_u32(static_cast<uint32_t>(hull.nodes.size()));
    for (const HullNode& n : hull.nodes) {
        put_u32(n.first_child);
        put_u32(static_cast<uint32_t>(n.state));
    }
    if (!out)
        throw IoError("short write to " + path);
}

VisualHull hull_load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    auto get_u32 = [&]() {
        uint32_t v = 0;
        in.read(reinterpret_cast<char*>(&v), 4);
        return v;
    };
    auto get_f64 = [&]() {
        double v = 0;
        in.read(reinterpret_cast<char*>(&v), 8);
        return v;
    };
    if (get_u32() != kHullMagic)
        throw IoError(path + ": not a hull file");
    VisualHull hull;
    hull.center.x = get_f64();
    hull.center.y = get_f64();
    hull.center.z = get_f64();
    hull.half_extent = get_f64();
    hull.max_depth = static_cast<int>(get_u32());
    uint32_t count = get_u32();
    if (!in || count == 0 || count > (1u << 28))
        throw IoError(path + ": corrupt hull header");
    hull.nodes.resize(count);
    for (HullNode& n : hull.nodes) {
        n.first_child = get_u32();
        uint32_t s = get_u32();
        if (s > 2)
            throw IoError(path + ": corrupt node state");
        n.state = static_cast<CellState>(s);
    }
    if (!in)
        throw IoError(path + ": truncated hull data");
    return hull;
}

} // namespace hullstereo
