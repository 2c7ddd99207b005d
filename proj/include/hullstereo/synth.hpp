#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hullstereo/camera.hpp"
#include "hullstereo/image.hpp"
#include "hullstereo/matcher.hpp"
#include "hullstereo/math.hpp"

namespace hullstereo {

enum class ObjectType { Sphere, Box, Mesh };

struct TriMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
};

TriMesh load_obj(const std::string& path);

struct SceneObject {
    ObjectType type = ObjectType::Sphere;
    Vec3 center{0, 0, 0};     // sphere and box
    double radius = 0.1;      // sphere
    Vec3 half_extents{0.1, 0.1, 0.1}; // box
    TriMesh mesh;             // mesh (vertices already in world space)
    std::string mesh_path;    // relative OBJ path for serialization
    uint64_t texture_seed = 0;
    double albedo = 0.7;

    // Conservative bounding sphere, used for raster culling and placement.
    Vec3 bound_center() const;
    double bound_radius() const;
};

struct Scene {
    uint64_t seed = 0;
    Vec3 stage_center{0, 0, 1.7};
    double stage_radius = 0.5;
    std::vector<SceneObject> objects;
};

// Deterministic in seed: 1-10 primitives placed so each bounding sphere stays
// inside the stage sphere.
Scene generate_scene(uint64_t seed);

void scene_save(const std::string& json_path, const Scene& scene);
Scene scene_load(const std::string& json_path);

// Capture rig used by the synthetic stage: 640x480, fx = fy = 420,
// baseline 0.35 m, left camera at the origin looking down +z.
StereoRig synth_default_rig();

// Ring of 12 inward-looking cameras at 2 m radius around the stage center,
// alternating above/below the stage plane.
std::vector<PinholeCamera> synth_ring_cameras(const Vec3& stage_center, int count = 12);

struct RenderOutput {
    GrayImage left, right;
    DisparityMap gt;        // full resolution, left view
    ByteImage occlusion;    // 255 = occluded in the right view
    std::vector<ByteImage> masks;
};

// Depth via analytic intersection (sphere, box) or z-buffer rasterization
// (mesh); shading = Lambertian x projected dot pattern + 0.5% hash noise.
// The pattern projector sits at the left camera, so the texture is
// shadow-free and consistent across the stereo pair.
RenderOutput render(const Scene& scene, const StereoRig& rig,
                    const std::vector<PinholeCamera>& ring, uint64_t pattern_seed);

// Writes left.pgm, right.pgm, gt.pfm, occ.pgm, masks/cam_NN.pgm,
// cameras.json, scene.json under dir (created if missing).
void write_scene_outputs(const std::string& dir, const Scene& scene, const StereoRig& rig,
                         const std::vector<PinholeCamera>& ring, const RenderOutput& out);

} // namespace hullstereo
