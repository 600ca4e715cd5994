#pragma once

#include <array>
#include <string>
#include <vector>

#include "scanqa/scene.hpp"

namespace scanqa {

struct AABB {
    double x_min = 0.0, x_max = 0.0;
    double y_min = 0.0, y_max = 0.0;
    double z_min = 0.0, z_max = 0.0;

    bool valid() const { return x_min <= x_max && y_min <= y_max && z_min <= z_max; }
    double volume() const { return (x_max - x_min) * (y_max - y_min) * (z_max - z_min); }
    std::array<double, 3> center() const {
        return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0, (z_min + z_max) / 2.0};
    }

    bool operator==(const AABB&) const = default;
};

struct ObjectProposal {
    AABB box;
    std::vector<int> point_indices;  // trace-back into the scene
    double score = 0.0;
    std::vector<double> geometry_feature;
    std::vector<double> spatial_embedding;
};

// Normalized box descriptor, component order:
// (x_c/X, y_c/Y, z_c/Z, dx/X, dy/Y, dz/Z,
//  x_min/X, x_max/X, y_min/Y, y_max/Y, z_min/Z, z_max/Z)
struct SpatialVector {
    std::array<double, 12> v{};
};

struct PECodebook {
    int d_model = 16;  // even
    double base = 1000.0;
};

enum class ProposalMode { ground_truth, heuristic };

struct ProposalConfig {
    ProposalMode mode = ProposalMode::ground_truth;
    int max_k = 32;
    double grouping_radius = 0.3;  // meters
    double iou_threshold = 0.25;
    int seed_count = 64;  // fps seeds for heuristic mode
};

AABB aabb_of_points(const std::vector<Point>& points, const std::vector<int>& indices);

// Intersection volume over union volume; 0 for disjoint boxes and for a
// zero-volume union.
double iou_3d(const AABB& a, const AABB& b);

// Greedy descending-score suppression (IoU strictly above threshold kills).
// Input order must already follow the score/volume/center tie rule.
std::vector<ObjectProposal> nms_3d(std::vector<ObjectProposal> proposals, double iou_threshold);

// Farthest point sampling. seed < 0 starts at the lexicographically
// smallest point; otherwise the start index is drawn from mt19937(seed).
// Each following pick maximizes min-distance to the chosen set, ties by
// lowest index.
std::vector<int> fps(const std::vector<std::array<double, 3>>& points, int m, long seed = -1);

SpatialVector spatial_vector(const AABB& box, const SceneExtents& extents);

// Sinusoidal encoding of all 12 components, flattened component-major:
// out[j*d_model + 2i]   = sin(v_j / base^(2i/d_model))
// out[j*d_model + 2i+1] = cos(v_j / base^(2i/d_model))
std::vector<double> positional_encode(const SpatialVector& v, const PECodebook& codebook);

// K object proposals. ground_truth mode emits one box per instance
// annotation (score 1.0). heuristic mode seeds with fps, region-grows at
// grouping_radius, and prunes with nms_3d. Output sorted by score desc,
// then volume desc, then lexicographic center.
std::vector<ObjectProposal> propose_objects(const Scene& scene, const ProposalConfig& config);

// Line-delimited debug record: scene_id, box 6-tuple, score, index list.
std::string proposal_to_line(const std::string& scene_id, const ObjectProposal& p);

}  // namespace scanqa
