#include "scanqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "scanqa/appearance.hpp"

namespace scanqa {

namespace {

struct ClassShape {
    const char* name;
    std::array<double, 3> dims;  // width, depth, height
    int height_group;            // taller-than pairs stay within a group
};

// Base dimensions; realized sizes jitter around these so shape hints at
// class while heights stay uncertain within a group.
const std::vector<ClassShape>& class_shapes() {
    static const std::vector<ClassShape> shapes = {
        {"chair", {0.50, 0.50, 0.90}, 0},
        {"table", {1.50, 0.90, 0.76}, 0},
        {"sofa", {2.00, 0.90, 0.80}, 0},
        {"bed", {2.00, 1.60, 0.55}, 0},
        {"desk", {1.30, 0.70, 0.78}, 0},
        {"cabinet", {0.90, 0.45, 1.90}, 1},
        {"lamp", {0.30, 0.30, 1.50}, 1},
        {"shelf", {1.20, 0.35, 1.80}, 1},
    };
    return shapes;
}

constexpr const char* kCountableClass = "stool";
constexpr std::array<double, 3> kCountableDims = {0.35, 0.35, 0.45};

int jittered_channel(int base, double jitter, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> dist(-static_cast<int>(jitter), static_cast<int>(jitter));
    return std::clamp(base + dist(rng), 0, 255);
}

// Surface-sampled box with its 8 corners pinned so the point AABB equals
// the placed box exactly.
void sample_box_points(std::vector<Point>& points, const std::array<double, 3>& center,
                       const std::array<double, 3>& dims, const std::array<int, 3>& rgb,
                       double jitter, int count, std::mt19937_64& rng) {
    const double x0 = center[0] - dims[0] / 2, x1 = center[0] + dims[0] / 2;
    const double y0 = center[1] - dims[1] / 2, y1 = center[1] + dims[1] / 2;
    const double z0 = center[2] - dims[2] / 2, z1 = center[2] + dims[2] / 2;

    auto push = [&](double x, double y, double z) {
        Point p;
        p.x = x;
        p.y = y;
        p.z = z;
        p.r = jittered_channel(rgb[0], jitter, rng);
        p.g = jittered_channel(rgb[1], jitter, rng);
        p.b = jittered_channel(rgb[2], jitter, rng);
        points.push_back(p);
    };

    for (double x : {x0, x1})
        for (double y : {y0, y1})
            for (double z : {z0, z1}) push(x, y, z);

    const double ax = dims[1] * dims[2], ay = dims[0] * dims[2], az = dims[0] * dims[1];
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::discrete_distribution<int> face({ax, ax, ay, ay, az, az});
    for (int i = 8; i < count; ++i) {
        const int f = face(rng);
        const double a = u01(rng), b = u01(rng);
        switch (f) {
            case 0: push(x0, y0 + a * dims[1], z0 + b * dims[2]); break;
            case 1: push(x1, y0 + a * dims[1], z0 + b * dims[2]); break;
            case 2: push(x0 + a * dims[0], y0, z0 + b * dims[2]); break;
            case 3: push(x0 + a * dims[0], y1, z0 + b * dims[2]); break;
            case 4: push(x0 + a * dims[0], y0 + b * dims[1], z0); break;
            default: push(x0 + a * dims[0], y0 + b * dims[1], z1); break;
        }
    }
}

bool footprints_overlap(const SyntheticObject& a, const std::array<double, 3>& center,
                        const std::array<double, 3>& dims, double gap) {
    const double dx = std::abs(a.center[0] - center[0]);
    const double dy = std::abs(a.center[1] - center[1]);
    return dx < (a.dims[0] + dims[0]) / 2 + gap && dy < (a.dims[1] + dims[1]) / 2 + gap;
}

const NamedColor& color_by_index(int index) { return named_colors()[static_cast<size_t>(index)]; }

}  // namespace

const std::vector<std::string>& synthetic_class_pool() {
    static const std::vector<std::string> pool = [] {
        std::vector<std::string> out;
        for (const ClassShape& s : class_shapes()) out.push_back(s.name);
        return out;
    }();
    return pool;
}

const std::string& synthetic_countable_class() {
    static const std::string name = kCountableClass;
    return name;
}

Split split_for_scene_index(int index) {
    const int slot = index % 10;
    if (slot <= 6) return Split::train;
    if (slot == 7) return Split::val;
    return Split::test;
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneSpec& spec, const std::string& scene_id,
                                        uint64_t scene_seed) {
    std::mt19937_64 rng(scene_seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    SyntheticScene out;
    std::vector<Point> points;
    std::vector<InstanceAnnotation> instances;
    int next_instance = 0;

    auto place_object = [&](const std::string& class_name, const std::array<double, 3>& dims,
                            int color_index) -> bool {
        const double margin = 0.2;
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::array<double, 3> center;
            center[0] = margin + dims[0] / 2 + u01(rng) * (spec.room[0] - dims[0] - 2 * margin);
            center[1] = margin + dims[1] / 2 + u01(rng) * (spec.room[1] - dims[1] - 2 * margin);
            center[2] = 0.05 + dims[2] / 2;
            bool blocked = false;
            for (const SyntheticObject& placed : out.objects)
                if (footprints_overlap(placed, center, dims, 0.15)) {
                    blocked = true;
                    break;
                }
            if (blocked) continue;

            SyntheticObject obj;
            obj.instance_id = next_instance;
            obj.class_name = class_name;
            obj.color_name = color_by_index(color_index).name;
            obj.center = center;
            obj.dims = dims;

            const int first = static_cast<int>(points.size());
            sample_box_points(points, center, dims, color_by_index(color_index).rgb, spec.color_jitter,
                              spec.points_per_object, rng);
            InstanceAnnotation inst;
            inst.instance_id = next_instance;
            inst.class_name = class_name;
            for (int i = first; i < static_cast<int>(points.size()); ++i) inst.point_indices.push_back(i);
            instances.push_back(std::move(inst));
            out.objects.push_back(std::move(obj));
            ++next_instance;
            return true;
        }
        return false;
    };

    // floor slab (gray, thin)
    {
        const int first = static_cast<int>(points.size());
        std::array<double, 3> dims = {spec.room[0], spec.room[1], 0.05};
        std::array<double, 3> center = {spec.room[0] / 2, spec.room[1] / 2, 0.025};
        sample_box_points(points, center, dims, {128, 128, 128}, spec.color_jitter, spec.floor_points,
                          rng);
        if (spec.annotate_structure) {
            InstanceAnnotation inst;
            inst.instance_id = next_instance++;
            inst.class_name = "floor";
            for (int i = first; i < static_cast<int>(points.size()); ++i) inst.point_indices.push_back(i);
            instances.push_back(std::move(inst));
        }
    }

    // single-instance feature classes
    const auto& shapes = class_shapes();
    std::vector<int> class_order(shapes.size());
    for (size_t i = 0; i < class_order.size(); ++i) class_order[i] = static_cast<int>(i);
    std::shuffle(class_order.begin(), class_order.end(), rng);
    std::uniform_int_distribution<int> count_dist(spec.min_objects, spec.max_objects);
    const int n_objects = std::min(count_dist(rng), static_cast<int>(shapes.size()));
    for (int i = 0; i < n_objects; ++i) {
        const ClassShape& shape = shapes[static_cast<size_t>(class_order[static_cast<size_t>(i)])];
        std::array<double, 3> dims;
        dims[0] = shape.dims[0] * (0.8 + 0.4 * u01(rng));
        dims[1] = shape.dims[1] * (0.8 + 0.4 * u01(rng));
        dims[2] = shape.dims[2] * (0.6 + 0.8 * u01(rng));
        const int color_index = static_cast<int>(rng() % named_colors().size());
        if (!place_object(shape.name, dims, color_index))
            throw TrainError("generate_synthetic_scene: could not place '" + std::string(shape.name) +
                             "' without overlap in scene " + scene_id);
    }

    // countable class, 1..max_countable instances
    const int countable = 1 + static_cast<int>(rng() % static_cast<uint64_t>(spec.max_countable));
    for (int i = 0; i < countable; ++i) {
        std::array<double, 3> dims;
        for (int ax = 0; ax < 3; ++ax) dims[static_cast<size_t>(ax)] = kCountableDims[static_cast<size_t>(ax)] * (0.85 + 0.3 * u01(rng));
        const int color_index = static_cast<int>(rng() % named_colors().size());
        if (!place_object(kCountableClass, dims, color_index))
            throw TrainError("generate_synthetic_scene: could not place countable object in scene " +
                             scene_id);
    }

    out.scene = make_scene(scene_id, std::move(points), std::move(instances));
    return out;
}

namespace {

QARecord make_record(const std::string& scene_id, const std::string& question_id,
                     const std::string& question, const std::string& answer, Split split,
                     int annotators) {
    QARecord record;
    record.question_id = question_id;
    record.scene_id = scene_id;
    record.question = question;
    record.split = split;
    for (int a = 0; a < annotators; ++a) {
        AnswerSubmission sub;
        sub.text = canonicalize_answer(answer);
        sub.confidence = Confidence::yes;
        sub.annotator_id = "synth_ann_" + std::to_string(a);
        record.answers.push_back(std::move(sub));
    }
    return record;
}

const SyntheticObject* find_class(const SyntheticScene& s, const std::string& class_name) {
    for (const SyntheticObject& obj : s.objects)
        if (obj.class_name == class_name) return &obj;
    return nullptr;
}

}  // namespace

SyntheticBenchmark generate_synthetic_benchmark(const SyntheticSceneSpec& spec, int n_scenes) {
    if (n_scenes <= 0) throw ParameterError("generate_synthetic_benchmark: n_scenes must be positive");
    SyntheticBenchmark bench;

    for (int s = 0; s < n_scenes; ++s) {
        char scene_id[32];
        std::snprintf(scene_id, sizeof(scene_id), "synth%04d", s);
        SyntheticScene scene = generate_synthetic_scene(spec, scene_id, mix_seed(spec.seed, static_cast<uint64_t>(s)));
        const Split split = split_for_scene_index(s);
        std::mt19937_64 rng(mix_seed(spec.seed, 0x100000u + static_cast<uint64_t>(s)));

        std::vector<const SyntheticObject*> singles;
        int countable = 0;
        for (const SyntheticObject& obj : scene.objects) {
            if (obj.class_name == kCountableClass) ++countable;
            else singles.push_back(&obj);
        }

        int qn = 0;
        auto add = [&](const std::string& question, const std::string& answer) {
            bench.records.push_back(make_record(scene.scene.scene_id,
                                                std::string(scene_id) + "_q" + std::to_string(qn++),
                                                question, answer, split, spec.annotators));
        };

        // color questions on two distinct single-instance classes
        std::vector<const SyntheticObject*> shuffled = singles;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        for (size_t i = 0; i < shuffled.size() && i < 2; ++i)
            add("What color is the " + shuffled[i]->class_name + "?", shuffled[i]->color_name);

        // taller-than comparisons within a height group, unambiguous only
        const auto& shapes = class_shapes();
        auto group_of = [&](const std::string& name) {
            for (const ClassShape& cs : shapes)
                if (name == cs.name) return cs.height_group;
            return -1;
        };
        std::vector<std::pair<const SyntheticObject*, const SyntheticObject*>> pairs;
        for (size_t i = 0; i < singles.size(); ++i)
            for (size_t j = 0; j < singles.size(); ++j) {
                if (i == j) continue;
                if (group_of(singles[i]->class_name) != group_of(singles[j]->class_name)) continue;
                if (std::abs(singles[i]->dims[2] - singles[j]->dims[2]) < 0.05) continue;
                pairs.emplace_back(singles[i], singles[j]);
            }
        std::shuffle(pairs.begin(), pairs.end(), rng);
        for (size_t i = 0; i < pairs.size() && i < 2; ++i) {
            const auto [a, b] = pairs[i];
            add("Is the " + a->class_name + " taller than the " + b->class_name + "?",
                a->dims[2] > b->dims[2] ? "yes" : "no");
        }

        // counting over the countable class
        add("How many " + std::string(kCountableClass) + "s are in the room?",
            std::to_string(countable));

        // existence, balanced between present and absent classes
        std::vector<std::string> present, absent;
        for (const ClassShape& cs : shapes) {
            if (find_class(scene, cs.name)) present.push_back(cs.name);
            else absent.push_back(cs.name);
        }
        const bool ask_present = !absent.empty() ? (rng() % 2 == 0) : true;
        const auto& pool = ask_present ? present : absent;
        const std::string& cls = pool[rng() % pool.size()];
        add("Is there a " + cls + " in the room?", ask_present ? "yes" : "no");

        bench.scenes.push_back(std::move(scene));
    }
    return bench;
}

std::vector<QARecord> make_color_qa_records(const Scene& scene, Split split, int annotators) {
    std::vector<QARecord> out;
    int qn = 0;
    for (const ColorQARecord& cq : generate_color_qa(scene)) {
        out.push_back(make_record(cq.scene_id, cq.scene_id + "_colorq" + std::to_string(qn++),
                                  cq.question, cq.answer, split, annotators));
    }
    return out;
}

SyntheticBenchmark generate_color_benchmark(const SyntheticSceneSpec& spec, int n_scenes) {
    if (n_scenes <= 0) throw ParameterError("generate_color_benchmark: n_scenes must be positive");
    SyntheticSceneSpec local = spec;
    local.annotate_structure = true;
    SyntheticBenchmark bench;
    for (int s = 0; s < n_scenes; ++s) {
        char scene_id[32];
        std::snprintf(scene_id, sizeof(scene_id), "color%04d", s);
        SyntheticScene scene =
            generate_synthetic_scene(local, scene_id, mix_seed(local.seed, 0x200000u + static_cast<uint64_t>(s)));
        const auto records = make_color_qa_records(scene.scene, split_for_scene_index(s), local.annotators);
        bench.records.insert(bench.records.end(), records.begin(), records.end());
        bench.scenes.push_back(std::move(scene));
    }
    return bench;
}

}  // namespace scanqa
