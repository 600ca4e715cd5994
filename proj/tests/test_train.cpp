#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "scanqa/synthetic.hpp"
#include "scanqa/trainer.hpp"

using namespace scanqa;

TEST_CASE("adamw leaves parameters alone under zero gradient and zero decay") {
    Mat value(1, 3);
    value.a = {1.0, -2.0, 0.5};
    std::vector<ParamRef> params = {{"p", &value}};
    Gradients grads;
    grads.init_like(params);
    AdamWState state;
    state.init_like(params);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    const auto before = value.a;
    for (int i = 0; i < 5; ++i) adamw_step(params, grads, state, cfg, 1e-3);
    CHECK(value.a == before);
}

TEST_CASE("adamw converges on a one-parameter quadratic") {
    // loss = (p - 3)^2 / 2, gradient p - 3
    Mat value(1, 1);
    value.a = {0.0};
    std::vector<ParamRef> params = {{"p", &value}};
    Gradients grads;
    grads.init_like(params);
    AdamWState state;
    state.init_like(params);
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    for (int step = 0; step < 500; ++step) {
        grads.g[0].a[0] = value.a[0] - 3.0;
        adamw_step(params, grads, state, cfg, 0.05);
    }
    CHECK(std::abs(value.a[0] - 3.0) < 1e-3);
}

TEST_CASE("pure weight decay multiplies by (1 - lr*lambda) each step") {
    Mat value(1, 1);
    value.a = {2.0};
    std::vector<ParamRef> params = {{"p", &value}};
    Gradients grads;
    grads.init_like(params);
    AdamWState state;
    state.init_like(params);
    AdamWConfig cfg;
    cfg.weight_decay = 0.1;
    const double lr = 0.01;
    double expected = 2.0;
    for (int step = 0; step < 10; ++step) {
        adamw_step(params, grads, state, cfg, lr);
        expected *= 1.0 - lr * cfg.weight_decay;
        CHECK(value.a[0] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("nan gradients abort with the parameter name") {
    Mat value(1, 1);
    std::vector<ParamRef> params = {{"spiky", &value}};
    Gradients grads;
    grads.init_like(params);
    grads.g[0].a[0] = std::nan("");
    AdamWState state;
    state.init_like(params);
    try {
        adamw_step(params, grads, state, AdamWConfig{}, 1e-3);
        FAIL("expected TrainError");
    } catch (const TrainError& e) {
        CHECK(std::string(e.what()).find("spiky") != std::string::npos);
    }
}

TEST_CASE("cyclical lr endpoints and periodicity") {
    CyclicalLrConfig cfg;
    cfg.lr_min = 1e-8;
    cfg.lr_max = 1e-4;
    cfg.period = 2000;
    CHECK(cyclical_lr(0, cfg) == cfg.lr_min);
    CHECK(cyclical_lr(1000, cfg) == cfg.lr_max);
    CHECK(cyclical_lr(2000, cfg) == cfg.lr_min);
    for (long step : {0L, 77L, 500L, 1500L, 1999L}) {
        const double lr = cyclical_lr(step, cfg);
        CHECK(lr >= cfg.lr_min);
        CHECK(lr <= cfg.lr_max);
        CHECK(cyclical_lr(step + 2 * cfg.period, cfg) == lr);
    }
}

namespace {

struct SmallSetup {
    SyntheticBenchmark bench;
    SceneMap scenes;
    Pipeline pipeline;
    TrainConfig config;
};

SmallSetup small_setup(uint64_t seed, Ablation ablation = Ablation::full, int n_scenes = 12) {
    SmallSetup s;
    SyntheticSceneSpec spec;
    spec.seed = seed;
    spec.points_per_object = 60;
    spec.floor_points = 80;
    s.bench = generate_synthetic_benchmark(spec, n_scenes);
    for (const auto& scene : s.bench.scenes) s.scenes.emplace(scene.scene.scene_id, scene.scene);

    std::vector<std::string> questions;
    for (const auto& r : s.bench.records) questions.push_back(r.question);
    auto tokens = build_vocabulary(questions, 512);

    std::vector<QARecord> train_split;
    for (const auto& r : s.bench.records)
        if (r.split == Split::train) train_split.push_back(r);
    auto answers = build_answer_vocabulary(train_split);
    REQUIRE(answers.size() > 0);

    PipelineConfig pc;
    pc.fusion.d_h = 32;
    pc.fusion.layers = 2;
    pc.fusion.heads = 2;
    pc.fusion.d_ff = 64;
    pc.fusion.f_g = 16;
    pc.fusion.f_a = 16;
    pc.fusion.pe_d_model = 8;
    pc.encoder_hidden = 24;
    s.pipeline.ablation = ablation;
    s.pipeline.init(pc, std::move(tokens), std::move(answers), seed);

    s.config.batch_size = 16;
    s.config.epochs = 2;
    s.config.seed = seed;
    s.config.ablation = ablation;
    s.config.threads = 2;
    s.config.lr.lr_max = 3e-3;
    s.config.lr.period = 40;
    return s;
}

}  // namespace

TEST_CASE("two same-seed runs produce bitwise-identical checkpoints") {
    const auto dir = std::filesystem::temp_directory_path() / "scanqa_train";
    std::filesystem::create_directories(dir);

    std::vector<std::string> stems;
    for (int run = 0; run < 2; ++run) {
        SmallSetup s = small_setup(1234);
        train(s.pipeline, s.bench.records, s.scenes, s.config);
        const std::string stem = (dir / ("run" + std::to_string(run))).string();
        s.pipeline.save(stem);
        stems.push_back(stem);
    }
    for (const char* suffix : {".bin", ".manifest"}) {
        std::ifstream a(stems[0] + suffix, std::ios::binary);
        std::ifstream b(stems[1] + suffix, std::ios::binary);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        REQUIRE(!sa.empty());
        CHECK(sa == sb);
    }
}

TEST_CASE("training loss decreases on a small corpus") {
    SmallSetup s = small_setup(555);
    s.config.epochs = 6;
    const TrainResult result = train(s.pipeline, s.bench.records, s.scenes, s.config);
    REQUIRE(result.loss_curve.size() == 6);
    CHECK(result.loss_curve.back() < result.loss_curve.front());
}

TEST_CASE("qonly training ignores scene content entirely") {
    SmallSetup s = small_setup(777, Ablation::qonly);
    train(s.pipeline, s.bench.records, s.scenes, s.config);

    const auto& record = s.bench.records.front();
    const auto elements_a = s.pipeline.scene_elements(s.scenes.at(record.scene_id));
    const auto la = s.pipeline.predict_logits(record.question, elements_a);

    // swap in a completely different scene
    const auto& other = s.bench.scenes.back().scene;
    const auto elements_b = s.pipeline.scene_elements(other);
    const auto lb = s.pipeline.predict_logits(record.question, elements_b);
    for (size_t i = 0; i < la.size(); ++i) CHECK(la[i] == doctest::Approx(lb[i]).epsilon(1e-12));
}

TEST_CASE("checkpoints round-trip through save and load") {
    SmallSetup s = small_setup(888);
    train(s.pipeline, s.bench.records, s.scenes, s.config);
    const auto dir = std::filesystem::temp_directory_path() / "scanqa_train";
    std::filesystem::create_directories(dir);
    const std::string stem = (dir / "roundtrip").string();
    s.pipeline.save(stem);

    SmallSetup fresh = small_setup(888);
    fresh.pipeline.init(fresh.pipeline.config, fresh.pipeline.token_vocab,
                        fresh.pipeline.answer_vocab, 31415);  // clobber the weights
    fresh.pipeline.load(stem);
    const auto& record = s.bench.records.front();
    const auto ea = s.pipeline.scene_elements(s.scenes.at(record.scene_id));
    const auto eb = fresh.pipeline.scene_elements(s.scenes.at(record.scene_id));
    const auto la = s.pipeline.predict_logits(record.question, ea);
    const auto lb = fresh.pipeline.predict_logits(record.question, eb);
    // float32 storage bounds the reload error
    for (size_t i = 0; i < la.size(); ++i) CHECK(la[i] == doctest::Approx(lb[i]).epsilon(1e-4));
}

TEST_CASE("soft targets weight vocabulary answers by agreement") {
    QARecord r;
    r.question_id = "q";
    r.scene_id = "s";
    r.question = "what color is the chair?";
    for (int i = 0; i < 2; ++i) {
        AnswerSubmission sub;
        sub.text = "red";
        sub.confidence = Confidence::yes;
        sub.annotator_id = "a" + std::to_string(i);
        r.answers.push_back(sub);
    }
    AnswerSubmission blue;
    blue.text = "blue";
    blue.confidence = Confidence::yes;
    blue.annotator_id = "a2";
    r.answers.push_back(blue);

    AnswerVocabulary vocab;
    vocab.answers = {"blue", "green", "red"};
    const auto target = soft_target(r, vocab);
    REQUIRE(target.size() == 3);
    // red matches twice (weight 1.0), blue once (0.5), green never
    CHECK(target[0] == doctest::Approx(0.5 / 1.5));
    CHECK(target[1] == 0.0);
    CHECK(target[2] == doctest::Approx(1.0 / 1.5));

    AnswerVocabulary none;
    none.answers = {"seven"};
    CHECK(soft_target(r, none).empty());
}

TEST_CASE("a model that predicts the agreed answer scores 1 on unanimous data") {
    SmallSetup s = small_setup(111, Ablation::full, 10);
    // every record is unanimous with 5 annotators, so predicting any
    // correct answer scores 1; verify via the metric directly
    for (const auto& r : s.bench.records) {
        const auto winners = correct_answers(r);
        for (const auto& w : winners) CHECK(accuracy(w, r) == 1.0);
    }
}

TEST_CASE("a constant predictor scores the answer's dataset-wide mean") {
    SmallSetup s = small_setup(222, Ablation::full, 10);
    std::vector<QARecord> test_records;
    for (const auto& r : s.bench.records)
        if (r.split == Split::test) test_records.push_back(r);
    REQUIRE(!test_records.empty());

    const std::string constant = "yes";
    double expected = 0.0;
    for (const auto& r : test_records) expected += accuracy(constant, r);
    expected /= static_cast<double>(test_records.size());

    // pipeline whose vocabulary has a single answer always predicts it
    AnswerVocabulary vocab;
    vocab.answers = {constant};
    vocab.evidence[constant] = {5, 5.0};
    std::vector<std::string> questions;
    for (const auto& r : s.bench.records) questions.push_back(r.question);
    PipelineConfig pc;
    pc.fusion.d_h = 16;
    pc.fusion.layers = 1;
    pc.fusion.heads = 2;
    pc.fusion.d_ff = 32;
    pc.fusion.f_g = 8;
    pc.fusion.f_a = 8;
    pc.fusion.pe_d_model = 4;
    pc.encoder_hidden = 12;
    Pipeline constant_model;
    constant_model.init(pc, build_vocabulary(questions, 512), vocab, 1);

    const EvalReport report = evaluate(constant_model, s.bench.records, s.scenes);
    CHECK(report.overall.count == static_cast<long>(test_records.size()));
    CHECK(report.overall.mean() == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("an empty test split yields zero counts and undefined cells") {
    SmallSetup s = small_setup(333, Ablation::full, 7);  // 7 scenes: indices 0..6 are all train
    const EvalReport report = evaluate(s.pipeline, s.bench.records, s.scenes);
    CHECK(report.overall.count == 0);
    CHECK_FALSE(report.overall.defined());
    const std::string json = report.to_json();
    CHECK(json.find("null") != std::string::npos);
    CHECK(report.to_table().find("-") != std::string::npos);
}

TEST_CASE("benchmark answers replay from the object specifications") {
    SyntheticSceneSpec spec;
    spec.seed = 4242;
    spec.points_per_object = 60;
    spec.floor_points = 60;
    const auto bench = generate_synthetic_benchmark(spec, 50);

    std::map<std::string, const SyntheticScene*> by_id;
    for (const auto& s : bench.scenes) by_id[s.scene.scene_id] = &s;

    int color_questions = 0, taller_questions = 0, count_questions = 0, existence_questions = 0;
    for (const QARecord& r : bench.records) {
        const SyntheticScene& scene = *by_id.at(r.scene_id);
        const std::string answer = r.answers.front().text;
        for (const auto& sub : r.answers) CHECK(sub.text == answer);

        auto class_between = [&](const std::string& prefix, const std::string& suffix) {
            const size_t start = r.question.find(prefix) + prefix.size();
            const size_t stop = r.question.find(suffix, start);
            return r.question.substr(start, stop - start);
        };

        if (r.question.rfind("What color is the ", 0) == 0) {
            ++color_questions;
            const std::string cls = class_between("What color is the ", "?");
            int hits = 0;
            for (const auto& obj : scene.objects)
                if (obj.class_name == cls) {
                    CHECK(answer == obj.color_name);
                    ++hits;
                }
            CHECK(hits == 1);
        } else if (r.question.rfind("Is the ", 0) == 0) {
            ++taller_questions;
            const std::string a = class_between("Is the ", " taller than the ");
            const std::string b = class_between(" taller than the ", "?");
            const SyntheticObject *oa = nullptr, *ob = nullptr;
            for (const auto& obj : scene.objects) {
                if (obj.class_name == a) oa = &obj;
                if (obj.class_name == b) ob = &obj;
            }
            REQUIRE(oa != nullptr);
            REQUIRE(ob != nullptr);
            CHECK(answer == (oa->dims[2] > ob->dims[2] ? "yes" : "no"));
        } else if (r.question.rfind("How many ", 0) == 0) {
            ++count_questions;
            int stools = 0;
            for (const auto& obj : scene.objects)
                if (obj.class_name == synthetic_countable_class()) ++stools;
            CHECK(answer == std::to_string(stools));
        } else if (r.question.rfind("Is there a ", 0) == 0) {
            ++existence_questions;
            const std::string cls = class_between("Is there a ", " in the room?");
            bool present = false;
            for (const auto& obj : scene.objects)
                if (obj.class_name == cls) present = true;
            CHECK(answer == (present ? "yes" : "no"));
        } else {
            FAIL("unexpected question template: ", r.question);
        }
    }
    CHECK(color_questions > 0);
    CHECK(taller_questions > 0);
    CHECK(count_questions == 50);
    CHECK(existence_questions == 50);
}

TEST_CASE("benchmark scenes carry valid instances and splits are scene-disjoint") {
    SyntheticSceneSpec spec;
    spec.seed = 777;
    spec.points_per_object = 40;
    spec.floor_points = 40;
    const auto bench = generate_synthetic_benchmark(spec, 20);

    std::map<std::string, Split> scene_split;
    for (const QARecord& r : bench.records) {
        auto [it, inserted] = scene_split.emplace(r.scene_id, r.split);
        if (!inserted) CHECK(it->second == r.split);
    }
    for (const auto& s : bench.scenes) {
        validate_scene(s.scene);
        CHECK(!s.scene.instances.empty());
    }
}

TEST_CASE("benchmark generation is deterministic") {
    SyntheticSceneSpec spec;
    spec.seed = 31337;
    spec.points_per_object = 40;
    spec.floor_points = 40;
    const auto a = generate_synthetic_benchmark(spec, 6);
    const auto b = generate_synthetic_benchmark(spec, 6);
    REQUIRE(a.records.size() == b.records.size());
    for (size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i] == b.records[i]);
    for (size_t i = 0; i < a.scenes.size(); ++i) CHECK(a.scenes[i].scene.points == b.scenes[i].scene.points);
}

TEST_CASE("color benchmark questions come from the voting pipeline") {
    SyntheticSceneSpec spec;
    spec.seed = 99;
    spec.points_per_object = 50;
    spec.floor_points = 50;
    const auto bench = generate_color_benchmark(spec, 10);
    CHECK(!bench.records.empty());
    for (const QARecord& r : bench.records) {
        CHECK(r.question.rfind("What color", 0) == 0);
        CHECK(r.question.find("floor") == std::string::npos);
        CHECK(r.question.find("wall") == std::string::npos);
        for (const auto& sub : r.answers) CHECK(sub.confidence == Confidence::yes);
    }
}
