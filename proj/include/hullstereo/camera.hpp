#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hullstereo/math.hpp"

namespace hullstereo {

// Pinhole camera with world-to-camera extrinsics: x_cam = R * X + t.
// +z looks into the scene; pixel (u,v) = (fx * x/z + cx, fy * y/z + cy).
struct PinholeCamera {
    int width = 0, height = 0;
    double fx = 0, fy = 0, cx = 0, cy = 0;
    Mat3 rotation = Mat3::identity();
    Vec3 translation{0, 0, 0};

    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }

    // z <= 0 means the point projects behind the camera; callers must check.
    Vec3 project(const Vec3& world) const {
        Vec3 c = to_camera(world);
        return {fx * c.x / c.z + cx, fy * c.y / c.z + cy, c.z};
    }

    // Inverse of project for a given camera-space depth z > 0.
    Vec3 backproject(double u, double v, double z) const {
        Vec3 cam{(u - cx) / fx * z, (v - cy) / fy * z, z};
        return rotation.tmul(cam - translation);
    }

    Vec3 center() const { return rotation.tmul(-translation); }

    bool on_image(double u, double v) const {
        return u >= 0 && v >= 0 && u <= width - 1 && v <= height - 1;
    }
};

// Throws ConfigError on non-orthonormal rotation or nonpositive intrinsics.
void validate_camera(const PinholeCamera& cam, const std::string& label);

// Rectified pair: identical intrinsics and rotation, right center offset by
// +baseline along the left camera's x axis. disparity = fx * baseline / depth.
struct StereoRig {
    PinholeCamera left, right;
    double baseline = 0;

    double disparity_from_depth(double z) const { return left.fx * baseline / z; }
    double depth_from_disparity(double d) const { return left.fx * baseline / d; }
};

void validate_rig(const StereoRig& rig);

// One silhouette view of the capture stage.
struct RingView {
    PinholeCamera camera;
    std::string mask_file; // relative to the cameras.json directory
};

struct CameraSet {
    StereoRig rig;
    std::vector<RingView> ring;
};

CameraSet load_cameras(const std::string& json_path);
void save_cameras(const std::string& json_path, const CameraSet& cams);

} // namespace hullstereo
