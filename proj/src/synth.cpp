#include "hullstereo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hullstereo/errors.hpp"
#include "hullstereo/io.hpp"
#include "hullstereo/parallel.hpp"
#include "hullstereo/rng.hpp"

namespace hullstereo {

using nlohmann::json;

TriMesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    TriMesh mesh;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag))
            continue;
        if (tag == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z))
                throw IoError(path + ": malformed vertex line '" + line + "'");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // "f v", "f v/t", "f v/t/n", "f v//n" all start with the
                // vertex index; negative values count from the end.
                size_t slash = tok.find('/');
                std::string head = slash == std::string::npos ? tok : tok.substr(0, slash);
                int v = 0;
                try {
                    v = std::stoi(head);
                } catch (const std::exception&) {
                    throw IoError(path + ": malformed face token '" + tok + "'");
                }
                if (v < 0)
                    v = static_cast<int>(mesh.vertices.size()) + v;
                else
                    v -= 1;
                if (v < 0 || v >= static_cast<int>(mesh.vertices.size()))
                    throw IoError(path + ": face index out of range");
                idx.push_back(v);
            }
            if (idx.size() < 3)
                throw IoError(path + ": face with fewer than 3 vertices");
            for (size_t i = 1; i + 1 < idx.size(); ++i)
                mesh.faces.push_back({idx[0], idx[i], idx[i + 1]});
        }
    }
    if (mesh.vertices.empty() || mesh.faces.empty())
        throw IoError(path + ": no geometry found");
    return mesh;
}

Vec3 SceneObject::bound_center() const {
    if (type != ObjectType::Mesh)
        return center;
    Vec3 lo{1e30, 1e30, 1e30}, hi{-1e30, -1e30, -1e30};
    for (const Vec3& v : mesh.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return (lo + hi) / 2.0;
}

double SceneObject::bound_radius() const {
    switch (type) {
    case ObjectType::Sphere:
        return radius;
    case ObjectType::Box:
        return norm(half_extents);
    case ObjectType::Mesh: {
        Vec3 c = bound_center();
        double r = 0;
        for (const Vec3& v : mesh.vertices)
            r = std::max(r, norm(v - c));
        return r;
    }
    }
    return 0;
}

Scene generate_scene(uint64_t seed) {
    Scene scene;
    scene.seed = seed;
    Rng rng{seed};
    int count = 1 + static_cast<int>(rng.below(10));
    for (int i = 0; i < count; ++i) {
        SceneObject obj;
        double bound;
        if (rng.uniform() < 0.6) {
            obj.type = ObjectType::Sphere;
            obj.radius = rng.uniform(0.08, 0.20);
            bound = obj.radius;
        } else {
            obj.type = ObjectType::Box;
            obj.half_extents = {rng.uniform(0.06, 0.16), rng.uniform(0.06, 0.16),
                                rng.uniform(0.06, 0.16)};
            bound = norm(obj.half_extents);
        }
        // Uniform direction, cube-root radial law: roughly uniform in the ball
        // of placements that keep the bounding sphere inside the stage.
        double z = rng.uniform(-1.0, 1.0);
        double phi = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        Vec3 dir{s * std::cos(phi), s * std::sin(phi), z};
        double max_off = scene.stage_radius - bound;
        double u = std::cbrt(rng.uniform());
        obj.center = scene.stage_center + dir * (u * max_off);
        obj.texture_seed = rng.next();
        obj.albedo = rng.uniform(0.45, 0.9);
        scene.objects.push_back(std::move(obj));
    }
    return scene;
}

namespace {

json vec_to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError("scene: expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

void scene_save(const std::string& json_path, const Scene& scene) {
    json j;
    j["seed"] = scene.seed;
    j["stage"]["center"] = vec_to_json(scene.stage_center);
    j["stage"]["radius"] = scene.stage_radius;
    j["objects"] = json::array();
    for (const SceneObject& o : scene.objects) {
        json oj;
        oj["texture_seed"] = o.texture_seed;
        oj["albedo"] = o.albedo;
        switch (o.type) {
        case ObjectType::Sphere:
            oj["type"] = "sphere";
            oj["center"] = vec_to_json(o.center);
            oj["radius"] = o.radius;
            break;
        case ObjectType::Box:
            oj["type"] = "box";
            oj["center"] = vec_to_json(o.center);
            oj["half_extents"] = vec_to_json(o.half_extents);
            break;
        case ObjectType::Mesh:
            oj["type"] = "mesh";
            oj["obj"] = o.mesh_path;
            break;
        }
        j["objects"].push_back(std::move(oj));
    }
    std::ofstream out(json_path);
    if (!out)
        throw IoError("cannot open " + json_path + " for writing");
    out << j.dump(2) << "\n";
    if (!out)
        throw IoError("short write to " + json_path);
}

Scene scene_load(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in)
        throw IoError("cannot open " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    Scene scene;
    try {
        scene.seed = j.at("seed").get<uint64_t>();
        scene.stage_center = vec_from_json(j.at("stage").at("center"));
        scene.stage_radius = j.at("stage").at("radius").get<double>();
        for (const json& oj : j.at("objects")) {
            SceneObject o;
            o.texture_seed = oj.at("texture_seed").get<uint64_t>();
            o.albedo = oj.at("albedo").get<double>();
            std::string type = oj.at("type").get<std::string>();
            if (type == "sphere") {
                o.type = ObjectType::Sphere;
                o.center = vec_from_json(oj.at("center"));
                o.radius = oj.at("radius").get<double>();
            } else if (type == "box") {
                o.type = ObjectType::Box;
                o.center = vec_from_json(oj.at("center"));
                o.half_extents = vec_from_json(oj.at("half_extents"));
            } else if (type == "mesh") {
                o.type = ObjectType::Mesh;
                o.mesh_path = oj.at("obj").get<std::string>();
                std::filesystem::path base = std::filesystem::path(json_path).parent_path();
                o.mesh = load_obj((base / o.mesh_path).string());
            } else {
                throw ConfigError(json_path + ": unknown object type '" + type + "'");
            }
            scene.objects.push_back(std::move(o));
        }
    } catch (const json::exception& e) {
        throw ConfigError(json_path + ": " + e.what());
    }
    if (scene.objects.empty() || scene.objects.size() > 10)
        throw ConfigError(json_path + ": scene must hold 1-10 objects");
    return scene;
}

StereoRig synth_default_rig() {
    StereoRig rig;
    rig.baseline = 0.35;
    rig.left.width = 640;
    rig.left.height = 480;
    rig.left.fx = rig.left.fy = 420.0;
    rig.left.cx = 319.5;
    rig.left.cy = 239.5;
    rig.left.rotation = Mat3::identity();
    rig.left.translation = {0, 0, 0};
    rig.right = rig.left;
    rig.right.translation = {-rig.baseline, 0, 0};
    return rig;
}

std::vector<PinholeCamera> synth_ring_cameras(const Vec3& stage_center, int count) {
    std::vector<PinholeCamera> ring;
    const double ring_radius = 2.0;
    for (int i = 0; i < count; ++i) {
        double theta = 2.0 * 3.14159265358979323846 * i / count;
        Vec3 pos = stage_center + Vec3{ring_radius * std::cos(theta),
                                       (i % 2 == 0) ? -0.25 : 0.25,
                                       ring_radius * std::sin(theta)};
        Vec3 ez = normalized(stage_center - pos);
        Vec3 ex = normalized(cross(Vec3{0, 1, 0}, ez));
        Vec3 ey = cross(ez, ex);
        PinholeCamera cam;
        cam.width = 640;
        cam.height = 480;
        cam.fx = cam.fy = 420.0;
        cam.cx = 319.5;
        cam.cy = 239.5;
        cam.rotation = Mat3::from_rows(ex, ey, ez);
        cam.translation = -(cam.rotation * pos);
        ring.push_back(cam);
    }
    return ring;
}

namespace {

constexpr float kNoDepth = std::numeric_limits<float>::infinity();

struct ViewBuffers {
    Image<float> depth;   // camera-space z, +inf where empty
    Image<int16_t> object; // index into scene.objects, -1 where empty
    std::vector<Vec3> normal;

    ViewBuffers(int w, int h)
        : depth(w, h, kNoDepth), object(w, h, -1),
          normal(static_cast<size_t>(w) * h, Vec3{0, 0, 0}) {}
};

// t of the nearest intersection in units of camera-space depth, or +inf.
double ray_sphere(const Vec3& origin, const Vec3& dir, const Vec3& c, double r) {
    Vec3 oc = origin - c;
    double a = dot(dir, dir);
    double b = 2.0 * dot(oc, dir);
    double cc = dot(oc, oc) - r * r;
    double disc = b * b - 4 * a * cc;
    if (disc < 0)
        return kNoDepth;
    double sq = std::sqrt(disc);
    double t = (-b - sq) / (2 * a);
    if (t > 1e-6)
        return t;
    t = (-b + sq) / (2 * a);
    return t > 1e-6 ? t : kNoDepth;
}

double ray_box(const Vec3& origin, const Vec3& dir, const Vec3& c, const Vec3& he) {
    double t_enter = -1e30, t_exit = 1e30;
    for (int a = 0; a < 3; ++a) {
        double o = origin[a] - c[a], d = dir[a];
        if (std::abs(d) < 1e-15) {
            if (o < -he[a] || o > he[a])
                return kNoDepth;
            continue;
        }
        double t0 = (-he[a] - o) / d, t1 = (he[a] - o) / d;
        if (t0 > t1)
            std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    if (t_enter > t_exit || t_exit <= 1e-6)
        return kNoDepth;
    return t_enter > 1e-6 ? t_enter : t_exit;
}

Vec3 box_normal(const Vec3& p, const Vec3& c, const Vec3& he) {
    Vec3 rel = p - c;
    int axis = 0;
    double best = -1;
    for (int a = 0; a < 3; ++a) {
        double v = std::abs(rel[a]) / he[a];
        if (v > best) {
            best = v;
            axis = a;
        }
    }
    Vec3 n{0, 0, 0};
    n[axis] = rel[axis] >= 0 ? 1.0 : -1.0;
    return n;
}

// Conservative pixel rect of a world-space AABB; false means nothing visible,
// full image if any corner sits behind the camera.
bool project_rect(const PinholeCamera& cam, const Vec3& lo, const Vec3& hi, int pad, int& x0,
                  int& y0, int& x1, int& y1) {
    double min_u = 1e30, max_u = -1e30, min_v = 1e30, max_v = -1e30;
    for (int corner = 0; corner < 8; ++corner) {
        Vec3 p{corner & 1 ? hi.x : lo.x, corner & 2 ? hi.y : lo.y, corner & 4 ? hi.z : lo.z};
        Vec3 camp = cam.to_camera(p);
        if (camp.z <= 1e-6) {
            x0 = 0;
            y0 = 0;
            x1 = cam.width - 1;
            y1 = cam.height - 1;
            return true;
        }
        double u = cam.fx * camp.x / camp.z + cam.cx;
        double v = cam.fy * camp.y / camp.z + cam.cy;
        min_u = std::min(min_u, u);
        max_u = std::max(max_u, u);
        min_v = std::min(min_v, v);
        max_v = std::max(max_v, v);
    }
    x0 = std::max(static_cast<int>(std::floor(min_u)) - pad, 0);
    y0 = std::max(static_cast<int>(std::floor(min_v)) - pad, 0);
    x1 = std::min(static_cast<int>(std::ceil(max_u)) + pad, cam.width - 1);
    y1 = std::min(static_cast<int>(std::ceil(max_v)) + pad, cam.height - 1);
    return x0 <= x1 && y0 <= y1;
}

void raster_analytic(const PinholeCamera& cam, const SceneObject& obj, int16_t id,
                     ViewBuffers& buf) {
    Vec3 bc = obj.bound_center();
    double br = obj.bound_radius();
    Vec3 lo = bc - Vec3{br, br, br}, hi = bc + Vec3{br, br, br};
    int x0, y0, x1, y1;
    if (!project_rect(cam, lo, hi, 2, x0, y0, x1, y1))
        return;
    Vec3 origin = cam.center();
    parallel_for(y1 - y0 + 1, [&](int row) {
        int y = y0 + row;
        for (int x = x0; x <= x1; ++x) {
            Vec3 dir_cam{(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
            Vec3 dir = cam.rotation.tmul(dir_cam);
            double t;
            if (obj.type == ObjectType::Sphere)
                t = ray_sphere(origin, dir, obj.center, obj.radius);
            else
                t = ray_box(origin, dir, obj.center, obj.half_extents);
            if (t < buf.depth.at(x, y)) {
                buf.depth.at(x, y) = static_cast<float>(t);
                buf.object.at(x, y) = id;
                Vec3 p = origin + t * dir;
                buf.normal[static_cast<size_t>(y) * buf.depth.width + x] =
                    obj.type == ObjectType::Sphere ? normalized(p - obj.center)
                                                   : box_normal(p, obj.center, obj.half_extents);
            }
        }
    });
}

void raster_mesh(const PinholeCamera& cam, const SceneObject& obj, int16_t id, ViewBuffers& buf) {
    const TriMesh& mesh = obj.mesh;
    std::vector<Vec3> cam_pts(mesh.vertices.size());
    for (size_t i = 0; i < mesh.vertices.size(); ++i)
        cam_pts[i] = cam.to_camera(mesh.vertices[i]);

    for (const auto& face : mesh.faces) {
        const Vec3& a = cam_pts[static_cast<size_t>(face[0])];
        const Vec3& b = cam_pts[static_cast<size_t>(face[1])];
        const Vec3& c = cam_pts[static_cast<size_t>(face[2])];
        if (a.z <= 1e-6 || b.z <= 1e-6 || c.z <= 1e-6)
            continue; // desk-scale scenes keep meshes in front of every camera
        double ua = cam.fx * a.x / a.z + cam.cx, va = cam.fy * a.y / a.z + cam.cy;
        double ub = cam.fx * b.x / b.z + cam.cx, vb = cam.fy * b.y / b.z + cam.cy;
        double uc = cam.fx * c.x / c.z + cam.cx, vc = cam.fy * c.y / c.z + cam.cy;
        int x0 = std::max(static_cast<int>(std::floor(std::min({ua, ub, uc}))), 0);
        int x1 = std::min(static_cast<int>(std::ceil(std::max({ua, ub, uc}))), cam.width - 1);
        int y0 = std::max(static_cast<int>(std::floor(std::min({va, vb, vc}))), 0);
        int y1 = std::min(static_cast<int>(std::ceil(std::max({va, vb, vc}))), cam.height - 1);
        if (x0 > x1 || y0 > y1)
            continue;
        double area = (ub - ua) * (vc - va) - (uc - ua) * (vb - va);
        if (std::abs(area) < 1e-12)
            continue;
        Vec3 wa = mesh.vertices[static_cast<size_t>(face[0])];
        Vec3 wb = mesh.vertices[static_cast<size_t>(face[1])];
        Vec3 wc = mesh.vertices[static_cast<size_t>(face[2])];
        Vec3 n = normalized(cross(wb - wa, wc - wa));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                double w0 = ((ub - ua) * (y - va) - (x - ua) * (vb - va)) / area; // weight of c
                double w1 = ((x - ua) * (vc - va) - (uc - ua) * (y - va)) / area; // weight of b
                double w2 = 1.0 - w0 - w1;                                        // weight of a
                if (w0 < 0 || w1 < 0 || w2 < 0)
                    continue;
                // Screen-linear interpolation of 1/z is perspective correct.
                double inv_z = w2 / a.z + w1 / b.z + w0 / c.z;
                float z = static_cast<float>(1.0 / inv_z);
                if (z < buf.depth.at(x, y)) {
                    buf.depth.at(x, y) = z;
                    buf.object.at(x, y) = id;
                    buf.normal[static_cast<size_t>(y) * buf.depth.width + x] = n;
                }
            }
    }
}

ViewBuffers render_view(const PinholeCamera& cam, const Scene& scene) {
    ViewBuffers buf(cam.width, cam.height);
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        const SceneObject& obj = scene.objects[i];
        if (obj.type == ObjectType::Mesh)
            raster_mesh(cam, obj, static_cast<int16_t>(i), buf);
        else
            raster_analytic(cam, obj, static_cast<int16_t>(i), buf);
    }
    return buf;
}

GrayImage shade_view(const PinholeCamera& cam, const Scene& scene, const ViewBuffers& buf,
                     const PinholeCamera& projector, uint64_t pattern_seed, uint64_t noise_tag) {
    GrayImage img(cam.width, cam.height);
    Vec3 origin = cam.center();
    Vec3 light = projector.center();
    parallel_for(cam.height, [&](int y) {
        for (int x = 0; x < cam.width; ++x) {
            float depth = buf.depth.at(x, y);
            float value;
            if (!std::isfinite(depth)) {
                value = 0.05f;
            } else {
                Vec3 dir_cam{(x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0};
                Vec3 dir = cam.rotation.tmul(dir_cam);
                Vec3 p = origin + static_cast<double>(depth) * dir;
                Vec3 n = buf.normal[static_cast<size_t>(y) * cam.width + x];
                if (dot(n, dir) > 0)
                    n = -n; // face the viewer (mesh faces have no fixed winding)
                double lambert = std::max(0.0, dot(n, normalized(light - p)));
                // Dot pattern lives in projector (left-image) coordinates, so
                // both stereo views sample the same surface texture. The binary
                // threshold is supersampled 3x3 on the local tangent plane:
                // hard dot edges alias under fractional disparity, and the two
                // views must see the same edge profile at sub-pixel offsets.
                double plane_d = dot(p - origin, n);
                double dots = 0;
                for (int sy = -1; sy <= 1; ++sy)
                    for (int sx = -1; sx <= 1; ++sx) {
                        Vec3 sub_cam{(x + sx / 3.0 - cam.cx) / cam.fx,
                                     (y + sy / 3.0 - cam.cy) / cam.fy, 1.0};
                        Vec3 sub = cam.rotation.tmul(sub_cam);
                        double denom = dot(sub, n);
                        Vec3 ps = std::abs(denom) > 1e-9 ? origin + (plane_d / denom) * sub : p;
                        Vec3 proj = projector.project(ps);
                        double cell = value_noise2(pattern_seed, proj.x / 3.5, proj.y / 3.5);
                        dots += cell > 0.5 ? 1.0 : 0.15;
                    }
                dots /= 9.0;
                const SceneObject& obj = scene.objects[static_cast<size_t>(buf.object.at(x, y))];
                value = static_cast<float>(obj.albedo * (0.2 + 0.8 * lambert) * dots);
            }
            uint64_t h = hash_combine(hash_combine(hash_combine(pattern_seed, noise_tag),
                                                   static_cast<uint64_t>(x)),
                                      static_cast<uint64_t>(y));
            value += 0.005f * (2.0f * static_cast<float>(to_unit(h)) - 1.0f);
            img.at(x, y) = clamp(value, 0.0f, 1.0f);
        }
    });
    return img;
}

} // namespace

RenderOutput render(const Scene& scene, const StereoRig& rig,
                    const std::vector<PinholeCamera>& ring, uint64_t pattern_seed) {
    validate_rig(rig);
    RenderOutput out;

    ViewBuffers left_buf = render_view(rig.left, scene);
    ViewBuffers right_buf = render_view(rig.right, scene);
    out.left = shade_view(rig.left, scene, left_buf, rig.left, pattern_seed, 0);
    out.right = shade_view(rig.right, scene, right_buf, rig.left, pattern_seed, 1);

    const int w = rig.left.width, h = rig.left.height;
    out.gt = DisparityMap(w, h, DispUnits::Full);
    out.occlusion = ByteImage(w, h, 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float z = left_buf.depth.at(x, y);
            if (!std::isfinite(z))
                continue;
            size_t i = out.gt.index(x, y);
            float d = static_cast<float>(rig.left.fx * rig.baseline / z);
            out.gt.d[i] = d;
            out.gt.valid[i] = 1;
            // A left pixel is occluded when something nearer claims its
            // landing spot in the right view (or it leaves the frame).
            int xr = round_half_up(static_cast<float>(x) - d);
            if (xr < 0 || xr >= w) {
                out.occlusion.at(x, y) = 255;
                continue;
            }
            float zr = right_buf.depth.at(xr, y);
            if (std::isfinite(zr)) {
                float dr = static_cast<float>(rig.left.fx * rig.baseline / zr);
                if (dr > d + 0.5f)
                    out.occlusion.at(x, y) = 255;
            }
        }

    for (const PinholeCamera& cam : ring) {
        ViewBuffers buf = render_view(cam, scene);
        ByteImage mask(cam.width, cam.height, 0);
        for (size_t i = 0; i < mask.data.size(); ++i)
            mask.data[i] = std::isfinite(buf.depth.data[i]) ? 255 : 0;
        out.masks.push_back(std::move(mask));
    }
    return out;
}

void write_scene_outputs(const std::string& dir, const Scene& scene, const StereoRig& rig,
                         const std::vector<PinholeCamera>& ring, const RenderOutput& out) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(dir) / "masks", ec);
    if (ec)
        throw IoError("cannot create " + dir + ": " + ec.message());

    pgm_write_gray((fs::path(dir) / "left.pgm").string(), out.left);
    pgm_write_gray((fs::path(dir) / "right.pgm").string(), out.right);
    disparity_save((fs::path(dir) / "gt.pfm").string(), out.gt);
    pgm_write((fs::path(dir) / "occ.pgm").string(), out.occlusion);

    CameraSet cams;
    cams.rig = rig;
    for (size_t i = 0; i < ring.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "masks/cam_%02zu.pgm", i);
        pgm_write((fs::path(dir) / name).string(), out.masks[i]);
        cams.ring.push_back({ring[i], name});
    }
    save_cameras((fs::path(dir) / "cameras.json").string(), cams);
    scene_save((fs::path(dir) / "scene.json").string(), scene);
}

} // namespace hullstereo
