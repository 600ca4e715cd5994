#include "scanqa/appearance.hpp"

#include <algorithm>
#include <map>

namespace scanqa {

const std::array<NamedColor, 17>& named_colors() {
    static const std::array<NamedColor, 17> table = {{
        {"aqua", {0, 255, 255}},
        {"black", {0, 0, 0}},
        {"blue", {0, 0, 255}},
        {"fuchsia", {255, 0, 255}},
        {"gray", {128, 128, 128}},
        {"green", {0, 128, 0}},
        {"lime", {0, 255, 0}},
        {"maroon", {128, 0, 0}},
        {"navy", {0, 0, 128}},
        {"olive", {128, 128, 0}},
        {"orange", {255, 165, 0}},
        {"purple", {128, 0, 128}},
        {"red", {255, 0, 0}},
        {"silver", {192, 192, 192}},
        {"teal", {0, 128, 128}},
        {"white", {255, 255, 255}},
        {"yellow", {255, 255, 0}},
    }};
    return table;
}

const NamedColor& nearest_named_color(const std::array<double, 3>& rgb) {
    const auto& table = named_colors();
    size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < table.size(); ++i) {
        double d2 = 0.0;
        for (int c = 0; c < 3; ++c) {
            const double d = rgb[static_cast<size_t>(c)] - table[i].rgb[static_cast<size_t>(c)];
            d2 += d * d;
        }
        if (d2 < best_d2) {  // table is alphabetical, so '<' breaks ties alphabetically
            best_d2 = d2;
            best = i;
        }
    }
    return table[best];
}

namespace {

// name -> count histogram of nearest colors over a set of points.
std::map<std::string, int> color_histogram(const Scene& scene, const std::vector<int>& indices) {
    const double scale = scene.colors_normalized ? 255.0 : 1.0;
    std::map<std::string, int> hist;
    for (int idx : indices) {
        const Point& p = scene.points[static_cast<size_t>(idx)];
        const auto& c = nearest_named_color({p.r * scale, p.g * scale, p.b * scale});
        ++hist[c.name];
    }
    return hist;
}

std::vector<std::string> top_colors(const std::map<std::string, int>& hist, double runner_up_ratio) {
    // (count desc, name asc); std::map already iterates names ascending.
    std::vector<std::pair<std::string, int>> ranked(hist.begin(), hist.end());
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::vector<std::string> out{ranked[0].first};
    if (ranked.size() > 1 &&
        static_cast<double>(ranked[1].second) >= runner_up_ratio * static_cast<double>(ranked[0].second))
        out.push_back(ranked[1].first);
    return out;
}

bool is_structural_class(const std::string& name) {
    return name == "wall" || name == "floor" || name == "ceiling";
}

}  // namespace

std::vector<std::string> vote_object_colors(const Scene& scene, const InstanceAnnotation& instance,
                                            double runner_up_ratio) {
    if (instance.point_indices.empty())
        throw ParameterError("vote_object_colors: instance has no points");
    return top_colors(color_histogram(scene, instance.point_indices), runner_up_ratio);
}

std::vector<ColorQARecord> generate_color_qa(const Scene& scene, double runner_up_ratio) {
    if (scene.instances.empty()) throw ConfigError("generate_color_qa: scene has no annotations");

    std::map<std::string, std::vector<const InstanceAnnotation*>> by_class;
    for (const InstanceAnnotation& inst : scene.instances) {
        if (is_structural_class(inst.class_name)) continue;
        by_class[inst.class_name].push_back(&inst);
    }

    std::vector<ColorQARecord> out;
    for (const auto& [class_name, instances] : by_class) {
        ColorQARecord rec;
        rec.scene_id = scene.scene_id;
        std::map<std::string, int> hist;
        for (const auto* inst : instances) {
            rec.instance_ids.push_back(inst->instance_id);
            for (const auto& [name, count] : color_histogram(scene, inst->point_indices))
                hist[name] += count;
        }
        const auto names = top_colors(hist, runner_up_ratio);
        std::string answer = names[0];
        for (size_t i = 1; i < names.size(); ++i) answer += " " + names[i];
        rec.answer = std::move(answer);
        rec.question = instances.size() == 1 ? "What color is the " + class_name + "?"
                                             : "What color are the " + class_name + "?";
        out.push_back(std::move(rec));
    }
    return out;
}

AppearanceFeature appearance_features(const Scene& scene,
                                      const std::vector<std::vector<int>>& object_indices,
                                      const PointSetEncoder& encoder) {
    if (encoder.in_dim != 6) throw ShapeError("appearance_features: encoder expects 6-d input");
    const double color_scale = scene.colors_normalized ? 1.0 : 1.0 / 255.0;
    const SceneExtents& e = scene.extents;

    Mat inputs(static_cast<int>(scene.points.size()), 6);
    for (size_t i = 0; i < scene.points.size(); ++i) {
        const Point& p = scene.points[i];
        const int r = static_cast<int>(i);
        inputs(r, 0) = (p.x - e.origin[0]) / e.X;
        inputs(r, 1) = (p.y - e.origin[1]) / e.Y;
        inputs(r, 2) = (p.z - e.origin[2]) / e.Z;
        inputs(r, 3) = p.r * color_scale;
        inputs(r, 4) = p.g * color_scale;
        inputs(r, 5) = p.b * color_scale;
    }
    const Mat features = encoder.encode_pointwise(inputs);

    AppearanceFeature out;
    out.per_object.reserve(object_indices.size());
    for (const auto& indices : object_indices) out.per_object.push_back(max_pool_rows(features, indices));
    out.global_feature = mean_pool_rows(features);
    return out;
}

std::vector<double> global_geometry_feature(const Scene& scene, const PointSetEncoder& encoder) {
    if (encoder.in_dim != 3) throw ShapeError("global_geometry_feature: encoder expects 3-d input");
    double centroid[3] = {0.0, 0.0, 0.0};
    for (const Point& p : scene.points) {
        centroid[0] += p.x;
        centroid[1] += p.y;
        centroid[2] += p.z;
    }
    for (double& c : centroid) c /= static_cast<double>(scene.points.size());

    Mat inputs(static_cast<int>(scene.points.size()), 3);
    for (size_t i = 0; i < scene.points.size(); ++i) {
        const int r = static_cast<int>(i);
        inputs(r, 0) = scene.points[i].x - centroid[0];
        inputs(r, 1) = scene.points[i].y - centroid[1];
        inputs(r, 2) = scene.points[i].z - centroid[2];
    }
    return mean_pool_rows(encoder.encode_pointwise(inputs));
}

}  // namespace scanqa
