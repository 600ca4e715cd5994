#pragma once

#include <array>
#include <string>
#include <vector>

#include "scanqa/point_encoder.hpp"
#include "scanqa/scene.hpp"

namespace scanqa {

struct NamedColor {
    const char* name;
    std::array<int, 3> rgb;
};

// The 17 CSS 2.1 color keywords, alphabetical.
const std::array<NamedColor, 17>& named_colors();

// Argmin Euclidean RGB distance over the 17 references, alphabetical
// tie-break.
const NamedColor& nearest_named_color(const std::array<double, 3>& rgb);

// Per-point color-name histogram over the instance; returns the winner
// plus the runner-up iff its count reaches runner_up_ratio of the
// winner's. Alphabetical tie-breaking throughout.
std::vector<std::string> vote_object_colors(const Scene& scene, const InstanceAnnotation& instance,
                                            double runner_up_ratio = 0.3);

struct ColorQARecord {
    std::string scene_id;
    std::string question;
    std::string answer;  // 1-2 color names, ordered by votes then alphabetically
    std::vector<int> instance_ids;
};

// One question per annotated class, singular or plural by instance count.
// wall/floor/ceiling classes are skipped.
std::vector<ColorQARecord> generate_color_qa(const Scene& scene, double runner_up_ratio = 0.3);

struct AppearanceFeature {
    std::vector<std::vector<double>> per_object;  // K vectors of length F_a
    std::vector<double> global_feature;           // mean over all point features
};

// Encodes every point once over (x,y,z scaled to scene-local unit
// coordinates, r,g,b scaled to [0,1]); per-object features are max pools
// over trace-back indices, the global feature is the mean over all points.
AppearanceFeature appearance_features(const Scene& scene,
                                      const std::vector<std::vector<int>>& object_indices,
                                      const PointSetEncoder& encoder);

// Scene-level geometry summary: mean over per-point encoder features of
// centroid-centered coordinates. Feeds the linguistic/auxiliary embedding.
std::vector<double> global_geometry_feature(const Scene& scene, const PointSetEncoder& encoder);

}  // namespace scanqa
