#include "hullstereo/bounds.hpp"

#include <cmath>
#include <limits>

#include "hullstereo/errors.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/parallel.hpp"

namespace hullstereo {

double disparity_from_depth(double z, const StereoRig& rig) {
    if (!(z > 0))
        throw NumericError("disparity_from_depth: depth must be positive");
    return rig.left.fx * rig.baseline / z;
}

double depth_from_disparity(double d, const StereoRig& rig) {
    if (!(d > 0))
        throw NumericError("depth_from_disparity: disparity must be positive");
    return rig.left.fx * rig.baseline / d;
}

namespace {

struct Slab {
    double enter = 0, exit = -1;
    bool hit = false;
};

Slab intersect_box(const Vec3& origin, const Vec3& dir, const Vec3& lo, const Vec3& hi) {
    double t_enter = -std::numeric_limits<double>::infinity();
    double t_exit = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        double o = origin[a], d = dir[a];
        if (std::abs(d) < 1e-15) {
            if (o < lo[a] || o >= hi[a])
                return {};
            continue;
        }
        double t0 = (lo[a] - o) / d, t1 = (hi[a] - o) / d;
        if (t0 > t1)
            std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    if (t_enter > t_exit)
        return {};
    return {t_enter, t_exit, true};
}

} // namespace

BoundsMap compute_bounds(const VisualHull& hull, const StereoRig& rig, double feature_scale) {
    validate_rig(rig);
    if (!(feature_scale > 0 && feature_scale <= 1))
        throw ConfigError("compute_bounds: feature_scale must be in (0, 1]");

    const int wf = static_cast<int>(std::ceil(rig.left.width * feature_scale - 1e-9));
    const int hf = static_cast<int>(std::ceil(rig.left.height * feature_scale - 1e-9));
    BoundsMap out(wf, hf);
    if (hull.nodes.empty() || hull.empty())
        return out;

    const double step = 0.5 * hull.finest_leaf_edge();
    const Vec3 ext{hull.half_extent, hull.half_extent, hull.half_extent};
    const Vec3 cube_lo = hull.center - ext;
    const Vec3 cube_hi = hull.center + ext;
    const Vec3 origin = rig.left.center();
    const double max_disp = static_cast<double>(wf);

    parallel_for(hf, [&](int y) {
        for (int x = 0; x < wf; ++x) {
            // Full-resolution coordinate of this feature pixel's center.
            double u = (x + 0.5) / feature_scale - 0.5;
            double v = (y + 0.5) / feature_scale - 0.5;
            Vec3 dir_cam{(u - rig.left.cx) / rig.left.fx, (v - rig.left.cy) / rig.left.fy, 1.0};
            double inv_len = 1.0 / norm(dir_cam);
            Vec3 dir = rig.left.rotation.tmul(dir_cam * inv_len);
            // Camera-space depth grows by inv_len per unit of ray parameter.
            Slab slab = intersect_box(origin, dir, cube_lo, cube_hi);
            if (!slab.hit || slab.exit <= 0)
                continue;
            double t_start = std::max(slab.enter, 0.0) + 1e-9;

            double z_near = 0, z_far = 0;
            bool seen = false;
            int64_t k = 0;
            while (true) {
                double t = t_start + static_cast<double>(k) * step;
                if (t > slab.exit)
                    break;
                Vec3 p = origin + t * dir;
                if (p.x < cube_lo.x || p.x >= cube_hi.x || p.y < cube_lo.y ||
                    p.y >= cube_hi.y || p.z < cube_lo.z || p.z >= cube_hi.z) {
                    ++k;
                    continue;
                }
                HullLeaf leaf = hull_leaf_at(hull, p);
                if (leaf.state == CellState::Inside) {
                    double z = t * inv_len;
                    if (!seen)
                        z_near = z;
                    z_far = z;
                    seen = true;
                }
                // The whole grid segment strictly inside this leaf shares its
                // state; land on the last grid point not past the leaf exit.
                Slab leaf_slab = intersect_box(p, dir, leaf.lo, leaf.hi);
                int64_t jump = 1;
                if (leaf_slab.hit && leaf_slab.exit > 0)
                    jump = std::max<int64_t>(1, static_cast<int64_t>(std::floor(leaf_slab.exit / step)));
                k += jump;
            }
            if (!seen)
                continue;
            size_t i = out.index(x, y);
            // Half-pixel dilation: downstream consumers quantize to integer
            // candidates with ceil/floor, and a tight hull would otherwise
            // drop the nearest integer to the true disparity at phases > 0.5.
            double hi = feature_scale * rig.left.fx * rig.baseline / z_near + 0.5;
            double lo = feature_scale * rig.left.fx * rig.baseline / z_far - 0.5;
            out.b_max[i] = static_cast<float>(clamp(hi, 0.0, max_disp));
            out.b_min[i] = static_cast<float>(clamp(lo, 0.0, max_disp));
            out.valid[i] = 1;
        }
    });
    return out;
}

void bounds_save(const std::string& path, const BoundsMap& bounds) {
    PfmImage img;
    img.width = bounds.width;
    img.height = bounds.height;
    img.channels = 3;
    img.data.resize(static_cast<size_t>(bounds.width) * bounds.height * 3);
    for (size_t i = 0; i < bounds.valid.size(); ++i) {
        img.data[i * 3 + 0] = bounds.b_min[i];
        img.data[i * 3 + 1] = bounds.b_max[i];
        img.data[i * 3 + 2] = bounds.valid[i] ? 1.0f : 0.0f;
    }
    pfm_write(path, img);
}

BoundsMap bounds_load(const std::string& path) {
    PfmImage img = pfm_read(path);
    if (img.channels != 3)
        throw IoError(path + ": bounds file must have 3 channels");
    BoundsMap bounds(img.width, img.height);
    for (size_t i = 0; i < bounds.valid.size(); ++i) {
        bounds.b_min[i] = img.data[i * 3 + 0];
        bounds.b_max[i] = img.data[i * 3 + 1];
        bounds.valid[i] = img.data[i * 3 + 2] > 0.5f ? 1 : 0;
        if (!bounds.valid[i] && (bounds.b_min[i] != 0.0f || bounds.b_max[i] != 0.0f))
            throw IoError(path + ": invalid pixels must carry zero bounds");
    }
    return bounds;
}

} // namespace hullstereo
