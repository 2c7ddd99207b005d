#include "hullstereo/camera.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "hullstereo/errors.hpp"

namespace hullstereo {

using nlohmann::json;

void validate_camera(const PinholeCamera& cam, const std::string& label) {
    if (cam.width <= 0 || cam.height <= 0)
        throw ConfigError(label + ": nonpositive image size");
    if (cam.fx <= 0 || cam.fy <= 0)
        throw ConfigError(label + ": nonpositive focal length");
    double err = orthonormality_error(cam.rotation);
    if (!(err <= 1e-9))
        throw ConfigError(label + ": rotation not orthonormal (max deviation " +
                          std::to_string(err) + ")");
}

void validate_rig(const StereoRig& rig) {
    validate_camera(rig.left, "rig.left");
    validate_camera(rig.right, "rig.right");
    if (!(rig.baseline > 0))
        throw ConfigError("rig: baseline must be positive");
    if (rig.left.width != rig.right.width || rig.left.height != rig.right.height ||
        rig.left.fx != rig.right.fx || rig.left.fy != rig.right.fy ||
        rig.left.cx != rig.right.cx || rig.left.cy != rig.right.cy)
        throw ConfigError("rig: left/right intrinsics differ; pair is not rectified");
    for (int i = 0; i < 9; ++i)
        if (std::abs(rig.left.rotation.m[i] - rig.right.rotation.m[i]) > 1e-12)
            throw ConfigError("rig: left/right rotations differ; pair is not rectified");
    // Right camera sits at left center + baseline * left x axis, which in
    // world-to-camera form means t_R = t_L - (baseline, 0, 0).
    Vec3 expect = rig.left.translation - Vec3{rig.baseline, 0, 0};
    Vec3 diff = rig.right.translation - expect;
    if (norm(diff) > 1e-9)
        throw ConfigError("rig: right camera is not a pure x-baseline offset of the left");
}

namespace {

json camera_to_json(const PinholeCamera& c) {
    json j;
    j["width"] = c.width;
    j["height"] = c.height;
    j["fx"] = c.fx;
    j["fy"] = c.fy;
    j["cx"] = c.cx;
    j["cy"] = c.cy;
    j["rotation"] = c.rotation.m;
    j["translation"] = {c.translation.x, c.translation.y, c.translation.z};
    return j;
}

PinholeCamera camera_from_json(const json& j, const std::string& label) {
    PinholeCamera c;
    try {
        c.width = j.at("width").get<int>();
        c.height = j.at("height").get<int>();
        c.fx = j.at("fx").get<double>();
        c.fy = j.at("fy").get<double>();
        c.cx = j.at("cx").get<double>();
        c.cy = j.at("cy").get<double>();
        auto rot = j.at("rotation");
        if (!rot.is_array() || rot.size() != 9)
            throw ConfigError(label + ": rotation must be 9 row-major values");
        for (int i = 0; i < 9; ++i)
            c.rotation.m[i] = rot[i].get<double>();
        auto tr = j.at("translation");
        if (!tr.is_array() || tr.size() != 3)
            throw ConfigError(label + ": translation must be 3 values");
        c.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
    } catch (const json::exception& e) {
        throw ConfigError(label + ": " + e.what());
    }
    validate_camera(c, label);
    return c;
}

} // namespace

CameraSet load_cameras(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in)
        throw IoError("cannot open " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    CameraSet cams;
    try {
        const json& rig = j.at("rig");
        cams.rig.left = camera_from_json(rig.at("left"), "rig.left");
        cams.rig.right = camera_from_json(rig.at("right"), "rig.right");
        cams.rig.baseline = rig.at("baseline").get<double>();
        for (size_t i = 0; i < j.at("ring").size(); ++i) {
            const json& v = j["ring"][i];
            RingView view;
            view.camera = camera_from_json(v, "ring[" + std::to_string(i) + "]");
            view.mask_file = v.at("mask").get<std::string>();
            cams.ring.push_back(std::move(view));
        }
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    validate_rig(cams.rig);
    return cams;
}

void save_cameras(const std::string& json_path, const CameraSet& cams) {
    json j;
    j["rig"]["left"] = camera_to_json(cams.rig.left);
    j["rig"]["right"] = camera_to_json(cams.rig.right);
    j["rig"]["baseline"] = cams.rig.baseline;
    j["ring"] = json::array();
    for (const RingView& v : cams.ring) {
        json cj = camera_to_json(v.camera);
        cj["mask"] = v.mask_file;
        j["ring"].push_back(cj);
    }
    std::ofstream out(json_path);
    if (!out)
        throw IoError("cannot open " + json_path + " for writing");
    out << j.dump(2) << "\n";
    if (!out)
        throw IoError("short write to " + json_path);
}

} // namespace hullstereo
