#include "scanqa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <unordered_map>

namespace scanqa {

AABB aabb_of_points(const std::vector<Point>& points, const std::vector<int>& indices) {
    if (indices.empty()) throw ParameterError("aabb_of_points: empty index set");
    AABB box;
    const Point& p0 = points[static_cast<size_t>(indices[0])];
    box.x_min = box.x_max = p0.x;
    box.y_min = box.y_max = p0.y;
    box.z_min = box.z_max = p0.z;
    for (int idx : indices) {
        const Point& p = points[static_cast<size_t>(idx)];
        box.x_min = std::min(box.x_min, p.x);
        box.x_max = std::max(box.x_max, p.x);
        box.y_min = std::min(box.y_min, p.y);
        box.y_max = std::max(box.y_max, p.y);
        box.z_min = std::min(box.z_min, p.z);
        box.z_max = std::max(box.z_max, p.z);
    }
    return box;
}

double iou_3d(const AABB& a, const AABB& b) {
    const double ix = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
    const double iy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
    const double iz = std::min(a.z_max, b.z_max) - std::max(a.z_min, b.z_min);
    if (ix <= 0.0 || iy <= 0.0 || iz <= 0.0) return 0.0;
    const double inter = ix * iy * iz;
    const double uni = a.volume() + b.volume() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

namespace {
void sort_proposals(std::vector<ObjectProposal>& proposals);
}

std::vector<ObjectProposal> nms_3d(std::vector<ObjectProposal> proposals, double iou_threshold) {
    if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
        throw ParameterError("nms_3d: iou_threshold must lie in [0,1]");
    sort_proposals(proposals);
    std::vector<ObjectProposal> kept;
    std::vector<bool> suppressed(proposals.size(), false);
    for (size_t i = 0; i < proposals.size(); ++i) {
        if (suppressed[i]) continue;
        for (size_t j = i + 1; j < proposals.size(); ++j) {
            if (suppressed[j]) continue;
            if (iou_3d(proposals[i].box, proposals[j].box) > iou_threshold) suppressed[j] = true;
        }
        kept.push_back(std::move(proposals[i]));
    }
    return kept;
}

namespace {

double sq_dist(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

bool lex_less(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    if (a[0] != b[0]) return a[0] < b[0];
    if (a[1] != b[1]) return a[1] < b[1];
    return a[2] < b[2];
}

// Uniform grid over cells of side `cell`; buckets point indices for
// radius queries during region growing.
struct PointGrid {
    double cell;
    std::unordered_map<int64_t, std::vector<int>> buckets;
    const std::vector<std::array<double, 3>>& pts;

    PointGrid(const std::vector<std::array<double, 3>>& points, double cell_size)
        : cell(cell_size), pts(points) {
        for (size_t i = 0; i < points.size(); ++i)
            buckets[key_of(points[i])].push_back(static_cast<int>(i));
    }

    int64_t key_of(const std::array<double, 3>& p) const {
        const int64_t cx = static_cast<int64_t>(std::floor(p[0] / cell));
        const int64_t cy = static_cast<int64_t>(std::floor(p[1] / cell));
        const int64_t cz = static_cast<int64_t>(std::floor(p[2] / cell));
        return (cx * 73856093) ^ (cy * 19349663) ^ (cz * 83492791);
    }

    template <typename Fn>
    void for_neighbors(const std::array<double, 3>& p, Fn&& fn) const {
        const int64_t cx = static_cast<int64_t>(std::floor(p[0] / cell));
        const int64_t cy = static_cast<int64_t>(std::floor(p[1] / cell));
        const int64_t cz = static_cast<int64_t>(std::floor(p[2] / cell));
        for (int64_t dx = -1; dx <= 1; ++dx)
            for (int64_t dy = -1; dy <= 1; ++dy)
                for (int64_t dz = -1; dz <= 1; ++dz) {
                    const int64_t key = ((cx + dx) * 73856093) ^ ((cy + dy) * 19349663) ^ ((cz + dz) * 83492791);
                    auto it = buckets.find(key);
                    if (it == buckets.end()) continue;
                    for (int idx : it->second) fn(idx);
                }
    }
};

// Single-linkage component of `seed` at the given radius (BFS).
std::vector<int> region_grow(const std::vector<std::array<double, 3>>& points, const PointGrid& grid,
                             int seed, double radius) {
    const double r2 = radius * radius;
    std::vector<int> group;
    std::vector<bool> visited(points.size(), false);
    std::vector<int> queue{seed};
    visited[static_cast<size_t>(seed)] = true;
    while (!queue.empty()) {
        const int cur = queue.back();
        queue.pop_back();
        group.push_back(cur);
        grid.for_neighbors(points[static_cast<size_t>(cur)], [&](int idx) {
            if (visited[static_cast<size_t>(idx)]) return;
            if (sq_dist(points[static_cast<size_t>(cur)], points[static_cast<size_t>(idx)]) <= r2) {
                visited[static_cast<size_t>(idx)] = true;
                queue.push_back(idx);
            }
        });
    }
    std::sort(group.begin(), group.end());
    return group;
}

void sort_proposals(std::vector<ObjectProposal>& proposals) {
    std::stable_sort(proposals.begin(), proposals.end(), [](const ObjectProposal& a, const ObjectProposal& b) {
        if (a.score != b.score) return a.score > b.score;
        const double va = a.box.volume(), vb = b.box.volume();
        if (va != vb) return va > vb;
        return lex_less(a.box.center(), b.box.center());
    });
}

}  // namespace

std::vector<int> fps(const std::vector<std::array<double, 3>>& points, int m, long seed) {
    const int n = static_cast<int>(points.size());
    if (m > n) throw ParameterError("fps: m exceeds point count");
    if (m <= 0) throw ParameterError("fps: m must be positive");

    int start = 0;
    if (seed < 0) {
        for (int i = 1; i < n; ++i)
            if (lex_less(points[static_cast<size_t>(i)], points[static_cast<size_t>(start)])) start = i;
    } else {
        std::mt19937 rng(static_cast<uint32_t>(seed));
        start = static_cast<int>(rng() % static_cast<uint32_t>(n));
    }

    std::vector<int> chosen{start};
    std::vector<double> min_d2(static_cast<size_t>(n), std::numeric_limits<double>::infinity());
    int last = start;
    while (static_cast<int>(chosen.size()) < m) {
        int best = -1;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            const double d2 = sq_dist(points[static_cast<size_t>(i)], points[static_cast<size_t>(last)]);
            if (d2 < min_d2[static_cast<size_t>(i)]) min_d2[static_cast<size_t>(i)] = d2;
            if (min_d2[static_cast<size_t>(i)] > best_d2) {
                best_d2 = min_d2[static_cast<size_t>(i)];
                best = i;
            }
        }
        chosen.push_back(best);
        last = best;
    }
    return chosen;
}

SpatialVector spatial_vector(const AABB& box, const SceneExtents& extents) {
    if (!(extents.X > 0.0 && extents.Y > 0.0 && extents.Z > 0.0))
        throw ParameterError("spatial_vector: extents must be positive");
    // Coordinates are shifted into scan-local frame before normalization.
    const double x0 = box.x_min - extents.origin[0];
    const double x1 = box.x_max - extents.origin[0];
    const double y0 = box.y_min - extents.origin[1];
    const double y1 = box.y_max - extents.origin[1];
    const double z0 = box.z_min - extents.origin[2];
    const double z1 = box.z_max - extents.origin[2];
    SpatialVector sv;
    sv.v = {
        (x0 + x1) / 2.0 / extents.X, (y0 + y1) / 2.0 / extents.Y, (z0 + z1) / 2.0 / extents.Z,
        (x1 - x0) / extents.X,       (y1 - y0) / extents.Y,       (z1 - z0) / extents.Z,
        x0 / extents.X,              x1 / extents.X,
        y0 / extents.Y,              y1 / extents.Y,
        z0 / extents.Z,              z1 / extents.Z,
    };
    return sv;
}

std::vector<double> positional_encode(const SpatialVector& v, const PECodebook& codebook) {
    if (codebook.d_model <= 0 || codebook.d_model % 2 != 0)
        throw ParameterError("positional_encode: d_model must be even and positive");
    const int d = codebook.d_model;
    std::vector<double> out(static_cast<size_t>(12 * d));
    std::vector<double> inv_freq(static_cast<size_t>(d / 2));
    for (int i = 0; i < d / 2; ++i)
        inv_freq[static_cast<size_t>(i)] = std::pow(codebook.base, -2.0 * i / d);
    for (int j = 0; j < 12; ++j) {
        for (int i = 0; i < d / 2; ++i) {
            const double arg = v.v[static_cast<size_t>(j)] * inv_freq[static_cast<size_t>(i)];
            out[static_cast<size_t>(j * d + 2 * i)] = std::sin(arg);
            out[static_cast<size_t>(j * d + 2 * i + 1)] = std::cos(arg);
        }
    }
    return out;
}

std::vector<ObjectProposal> propose_objects(const Scene& scene, const ProposalConfig& config) {
    if (config.max_k <= 0) throw ParameterError("propose_objects: max_k must be positive");
    std::vector<ObjectProposal> proposals;

    if (config.mode == ProposalMode::ground_truth) {
        if (scene.instances.empty())
            throw ConfigError("propose_objects: ground_truth mode requires instance annotations");
        for (const InstanceAnnotation& inst : scene.instances) {
            ObjectProposal p;
            p.box = aabb_of_points(scene.points, inst.point_indices);
            p.point_indices = inst.point_indices;
            p.score = 1.0;
            proposals.push_back(std::move(p));
        }
        sort_proposals(proposals);
    } else {
        const auto coords = strip_color(scene);
        const int n = static_cast<int>(coords.size());
        const int seeds = std::min(n, std::max(config.seed_count, config.max_k));
        const auto seed_indices = fps(coords, seeds, -1);
        const PointGrid grid(coords, config.grouping_radius);

        for (int seed : seed_indices) {
            ObjectProposal p;
            p.point_indices = region_grow(coords, grid, seed, config.grouping_radius);
            p.box = aabb_of_points(scene.points, p.point_indices);
            p.score = static_cast<double>(p.point_indices.size()) / static_cast<double>(n);
            proposals.push_back(std::move(p));
        }
        proposals = nms_3d(std::move(proposals), config.iou_threshold);
    }

    if (static_cast<int>(proposals.size()) > config.max_k) proposals.resize(static_cast<size_t>(config.max_k));
    return proposals;
}

std::string proposal_to_line(const std::string& scene_id, const ObjectProposal& p) {
    std::ostringstream out;
    out.precision(17);
    out << scene_id << ' ' << p.box.x_min << ' ' << p.box.x_max << ' ' << p.box.y_min << ' ' << p.box.y_max
        << ' ' << p.box.z_min << ' ' << p.box.z_max << ' ' << p.score << ' ';
    for (size_t i = 0; i < p.point_indices.size(); ++i) {
        if (i) out << ',';
        out << p.point_indices[i];
    }
    return out.str();
}

}  // namespace scanqa
