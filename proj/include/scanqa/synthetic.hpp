#pragma once

#include <array>
#include <string>
#include <vector>

#include "scanqa/qa.hpp"
#include "scanqa/scene.hpp"

namespace scanqa {

struct SyntheticSceneSpec {
    std::array<double, 3> room = {8.0, 8.0, 3.0};  // meters
    int min_objects = 3;
    int max_objects = 4;          // distinct single-instance classes per scene
    int max_countable = 4;        // instances of the countable class
    int points_per_object = 150;
    int floor_points = 300;
    double color_jitter = 8.0;    // per-channel uniform jitter, clamped to [0,255]
    bool annotate_structure = false;  // annotate the floor slab as an instance
    int annotators = 5;
    int color_questions = 3;      // per scene, capped by placed classes
    int taller_questions = 2;
    uint64_t seed = 7;
};

// One placed primitive: an axis-aligned box of surface-sampled points.
struct SyntheticObject {
    int instance_id = 0;
    std::string class_name;
    std::string color_name;  // one of the 17 CSS 2.1 keywords
    std::array<double, 3> center{};
    std::array<double, 3> dims{};
};

struct SyntheticScene {
    Scene scene;
    std::vector<SyntheticObject> objects;
};

struct SyntheticBenchmark {
    std::vector<SyntheticScene> scenes;
    std::vector<QARecord> records;
};

const std::vector<std::string>& synthetic_class_pool();
const std::string& synthetic_countable_class();

// One scene of colored box objects over a floor slab, instance-annotated.
SyntheticScene generate_synthetic_scene(const SyntheticSceneSpec& spec, const std::string& scene_id,
                                        uint64_t scene_seed);

// Scenes plus QA records over color / taller-than / counting / existence
// templates, answers derived from the placed objects, split by scene.
SyntheticBenchmark generate_synthetic_benchmark(const SyntheticSceneSpec& spec, int n_scenes);

// Color questions for one scene via the voting pipeline, wrapped as QA
// records with synthetic annotators at confidence yes.
std::vector<QARecord> make_color_qa_records(const Scene& scene, Split split, int annotators = 5);

// Scenes plus voting-derived color questions, split by scene.
SyntheticBenchmark generate_color_benchmark(const SyntheticSceneSpec& spec, int n_scenes);

Split split_for_scene_index(int index);

}  // namespace scanqa
