#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "scanqa/common.hpp"

namespace scanqa {

struct Point {
    double x = 0.0, y = 0.0, z = 0.0;
    double r = 0.0, g = 0.0, b = 0.0;

    bool operator==(const Point&) const = default;
};

// Per-axis spans of a scan plus its minimum corner. Spans are clamped to
// kDegenerateSpan when all points are coplanar in an axis.
struct SceneExtents {
    static constexpr double kDegenerateSpan = 1e-6;

    double X = 0.0, Y = 0.0, Z = 0.0;
    std::array<double, 3> origin{0.0, 0.0, 0.0};
    std::array<bool, 3> degenerate{false, false, false};

    bool operator==(const SceneExtents&) const = default;
};

struct InstanceAnnotation {
    int instance_id = 0;
    std::string class_name;
    std::vector<int> point_indices;  // sorted, unique, in [0, N)

    bool operator==(const InstanceAnnotation&) const = default;
};

// Immutable after construction. Colors are 0-255 integers unless
// colors_normalized is set, in which case channels live in [0,1].
struct Scene {
    std::string scene_id;
    std::vector<Point> points;
    SceneExtents extents;
    std::vector<InstanceAnnotation> instances;
    bool colors_normalized = false;
    bool missing_colors = false;  // input file carried no color properties

    size_t point_count() const { return points.size(); }
};

SceneExtents compute_extents(const std::vector<Point>& points);

// Coordinate-only projection, order preserving.
std::vector<std::array<double, 3>> strip_color(const Scene& scene);

// Builds a scene, computing extents and checking every invariant
// (N >= 1, finite coordinates, color range, instance index ranges).
Scene make_scene(std::string scene_id, std::vector<Point> points,
                 std::vector<InstanceAnnotation> instances = {},
                 bool colors_normalized = false);

// Re-checks every Scene invariant; throws ValidationError on the first hit.
void validate_scene(const Scene& scene);

// Instance annotations travel in a JSON sidecar next to the PLY file
// (<stem>.instances.json) since PLY carries vertices only.
std::string instances_sidecar_path(const std::string& ply_path);
void save_instances(const std::vector<InstanceAnnotation>& instances, const std::string& path);
std::vector<InstanceAnnotation> load_instances(const std::string& path);

}  // namespace scanqa
