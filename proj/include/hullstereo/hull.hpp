#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hullstereo/camera.hpp"
#include "hullstereo/image.hpp"
#include "hullstereo/math.hpp"

namespace hullstereo {

// Binary silhouette tied to the camera that captured it.
struct SilhouetteMask {
    ByteImage pixels; // 255 = foreground
    PinholeCamera camera;
};

enum class CellState : uint8_t { Outside = 0, Inside = 1, Branch = 2 };

struct HullNode {
    uint32_t first_child = 0; // index of 8 contiguous children when Branch
    CellState state = CellState::Outside;
};

// Axis-aligned octree over a cube. Leaves are Inside or Outside; membership
// uses half-open [lo, hi) intervals per axis so point location is total.
struct VisualHull {
    Vec3 center{0, 0, 0};
    double half_extent = 0;
    int max_depth = 0;
    std::vector<HullNode> nodes; // nodes[0] is the root

    bool empty() const {
        return nodes.empty() || (nodes.size() == 1 && nodes[0].state == CellState::Outside);
    }
    double finest_leaf_edge() const { return 2.0 * half_extent / double(1u << max_depth); }
};

// Leaf cube found by point location, for ray traversal.
struct HullLeaf {
    CellState state = CellState::Outside;
    Vec3 lo{0, 0, 0};
    Vec3 hi{0, 0, 0};
};

// Carves the octree: a node is dropped when some view sees its whole
// projection as background (or completely off-image); it is kept whole when
// every view that sees it agrees on foreground; anything mixed subdivides
// until max_depth, where the cube-center projection decides.
VisualHull carve_hull(const std::vector<SilhouetteMask>& masks, const Vec3& cube_center,
                      double cube_half_extent, int max_depth);

bool hull_contains(const VisualHull& hull, const Vec3& point);

// Point must lie inside the root cube (half-open test); returns the leaf cube
// containing it. Callers use the extent to skip uniform-state regions.
HullLeaf hull_leaf_at(const VisualHull& hull, const Vec3& point);

// Compact binary snapshot of the octree (magic "VHUL", little-endian).
void hull_save(const std::string& path, const VisualHull& hull);
VisualHull hull_load(const std::string& path);

} // namespace hullstereo
