#include "scanqa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace scanqa {

SceneExtents compute_extents(const std::vector<Point>& points) {
    if (points.empty()) throw ValidationError("compute_extents: need at least one point");
    double lo[3] = {points[0].x, points[0].y, points[0].z};
    double hi[3] = {points[0].x, points[0].y, points[0].z};
    for (const Point& p : points) {
        const double c[3] = {p.x, p.y, p.z};
        for (int ax = 0; ax < 3; ++ax) {
            lo[ax] = std::min(lo[ax], c[ax]);
            hi[ax] = std::max(hi[ax], c[ax]);
        }
    }
    SceneExtents e;
    e.origin = {lo[0], lo[1], lo[2]};
    double span[3];
    for (int ax = 0; ax < 3; ++ax) {
        span[ax] = hi[ax] - lo[ax];
        if (span[ax] <= 0.0) {
            span[ax] = SceneExtents::kDegenerateSpan;
            e.degenerate[ax] = true;
        }
    }
    e.X = span[0];
    e.Y = span[1];
    e.Z = span[2];
    return e;
}

std::vector<std::array<double, 3>> strip_color(const Scene& scene) {
    std::vector<std::array<double, 3>> out;
    out.reserve(scene.points.size());
    for (const Point& p : scene.points) out.push_back({p.x, p.y, p.z});
    return out;
}

void validate_scene(const Scene& scene) {
    if (scene.points.empty()) throw ValidationError("scene '" + scene.scene_id + "': N >= 1 violated");
    const double color_hi = scene.colors_normalized ? 1.0 : 255.0;
    for (size_t i = 0; i < scene.points.size(); ++i) {
        const Point& p = scene.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw ValidationError("scene '" + scene.scene_id + "': non-finite coordinate at point " +
                                  std::to_string(i));
        for (double c : {p.r, p.g, p.b}) {
            if (!(c >= 0.0 && c <= color_hi))
                throw ValidationError("scene '" + scene.scene_id + "': color channel out of range at point " +
                                      std::to_string(i));
        }
        if (!scene.colors_normalized) {
            for (double c : {p.r, p.g, p.b}) {
                if (c != std::floor(c))
                    throw ValidationError("scene '" + scene.scene_id +
                                          "': non-integer color channel at point " + std::to_string(i));
            }
        }
    }
    const SceneExtents recomputed = compute_extents(scene.points);
    if (!(recomputed == scene.extents))
        throw ValidationError("scene '" + scene.scene_id + "': stored extents disagree with points");
    const int n = static_cast<int>(scene.points.size());
    for (const InstanceAnnotation& inst : scene.instances) {
        if (inst.point_indices.empty())
            throw ValidationError("scene '" + scene.scene_id + "': instance " +
                                  std::to_string(inst.instance_id) + " has no points");
        int prev = -1;
        for (int idx : inst.point_indices) {
            if (idx < 0 || idx >= n)
                throw ValidationError("scene '" + scene.scene_id + "': instance " +
                                      std::to_string(inst.instance_id) + " index out of range");
            if (idx <= prev)
                throw ValidationError("scene '" + scene.scene_id + "': instance " +
                                      std::to_string(inst.instance_id) + " indices not sorted unique");
            prev = idx;
        }
    }
}

Scene make_scene(std::string scene_id, std::vector<Point> points,
                 std::vector<InstanceAnnotation> instances, bool colors_normalized) {
    Scene s;
    s.scene_id = std::move(scene_id);
    s.points = std::move(points);
    s.instances = std::move(instances);
    s.colors_normalized = colors_normalized;
    if (s.points.empty()) throw ValidationError("scene '" + s.scene_id + "': N >= 1 violated");
    s.extents = compute_extents(s.points);
    validate_scene(s);
    return s;
}

std::string instances_sidecar_path(const std::string& ply_path) {
    const size_t dot = ply_path.rfind('.');
    const std::string stem = (dot == std::string::npos) ? ply_path : ply_path.substr(0, dot);
    return stem + ".instances.json";
}

void save_instances(const std::vector<InstanceAnnotation>& instances, const std::string& path) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& inst : instances) {
        nlohmann::ordered_json j;
        j["instance_id"] = inst.instance_id;
        j["class_name"] = inst.class_name;
        j["point_indices"] = inst.point_indices;
        arr.push_back(std::move(j));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << arr.dump(1, '\t') << "\n";
}

std::vector<InstanceAnnotation> load_instances(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!arr.is_array()) throw ParseError(path + ": expected a JSON array");
    std::vector<InstanceAnnotation> out;
    for (const auto& j : arr) {
        InstanceAnnotation inst;
        inst.instance_id = j.at("instance_id").get<int>();
        inst.class_name = j.at("class_name").get<std::string>();
        inst.point_indices = j.at("point_indices").get<std::vector<int>>();
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace scanqa
