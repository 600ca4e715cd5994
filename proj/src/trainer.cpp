#include "scanqa/trainer.hpp"

#include <algorithm>
#include <random>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace scanqa {

std::vector<double> soft_target(const QARecord& record, const AnswerVocabulary& vocab) {
    std::vector<double> target(static_cast<size_t>(vocab.size()), 0.0);
    double mass = 0.0;
    for (size_t i = 0; i < vocab.answers.size(); ++i) {
        const double score = accuracy(vocab.answers[i], record);
        target[i] = score;
        mass += score;
    }
    if (mass <= 0.0) return {};
    for (auto& v : target) v /= mass;
    return target;
}

SceneElementsCache build_scene_cache(const Pipeline& pipeline, const std::vector<QARecord>& records,
                                     const SceneMap& scenes) {
    SceneElementsCache cache;
    for (const QARecord& record : records) {
        if (cache.count(record.scene_id)) continue;
        auto it = scenes.find(record.scene_id);
        if (it == scenes.end()) throw ConfigError("no scene '" + record.scene_id + "' for question '" +
                                                  record.question_id + "'");
        cache.emplace(record.scene_id, pipeline.scene_elements(it->second));
    }
    return cache;
}

namespace {

struct TrainExample {
    ElementSequence seq;
    std::vector<double> target;
};

// Zero the pcf scale gradients so qonly stays scene-blind.
void mask_pcf_scale_grads(Gradients& grads) {
    constexpr int scales_index = 10;  // fusion param order
    Mat& g = grads.g[scales_index];
    for (int kind = 0; kind < 4; ++kind) g(kind, static_cast<int>(EmbeddingType::pcf)) = 0.0;
}

}  // namespace

TrainResult train(Pipeline& pipeline, const std::vector<QARecord>& records, const SceneMap& scenes,
                  const TrainConfig& config) {
    if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (pipeline.answer_vocab.size() == 0) throw ConfigError("train: empty answer vocabulary");
    pipeline.ablation = config.ablation;
    if (config.ablation == Ablation::qonly) {
        for (int kind = 0; kind < 4; ++kind)
            pipeline.fusion.embed_scales(kind, static_cast<int>(EmbeddingType::pcf)) = 0.0;
    }

    std::vector<const QARecord*> usable;
    for (const QARecord& r : records)
        if (r.split != Split::test) usable.push_back(&r);

    const auto cache = [&] {
        std::vector<QARecord> copy;
        for (const QARecord* r : usable) copy.push_back(*r);
        return build_scene_cache(pipeline, copy, scenes);
    }();

    std::vector<TrainExample> examples;
    for (const QARecord* r : usable) {
        auto target = soft_target(*r, pipeline.answer_vocab);
        if (target.empty()) continue;  // no in-vocabulary answer
        TrainExample ex;
        ex.seq = pipeline.sequence_for(r->question, cache.at(r->scene_id));
        ex.target = std::move(target);
        examples.push_back(std::move(ex));
    }
    if (examples.empty()) throw ConfigError("train: no usable training examples");

    auto params = pipeline.fusion.params();
    AdamWState state;
    state.init_like(params);

    Gradients total;
    total.init_like(params);
    const int threads = std::max(1, config.threads);
    std::vector<Gradients> worker_grads(static_cast<size_t>(threads));
    for (auto& g : worker_grads) g.init_like(params);

    TrainResult result;
    result.examples_used = static_cast<long>(examples.size());
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::mt19937_64 shuffle_rng(mix_seed(config.seed, 0x5u + static_cast<uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), shuffle_rng);

        double epoch_loss = 0.0;
        long epoch_examples = 0;
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            const size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
            const size_t batch = stop - start;

            std::vector<double> losses(batch, 0.0);
            auto run_chunk = [&](int w) {
                Gradients& grads = worker_grads[static_cast<size_t>(w)];
                grads.zero();
                for (size_t i = static_cast<size_t>(w); i < batch; i += static_cast<size_t>(threads)) {
                    const TrainExample& ex = examples[order[start + i]];
                    ForwardCache fwd;
                    const auto logits = forward(ex.seq, pipeline.fusion, &fwd);
                    losses[i] = loss(logits, ex.target);
                    backward(pipeline.fusion, ex.seq, fwd, ex.target, grads);
                }
            };
            if (threads == 1) {
                run_chunk(0);
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < threads; ++w) pool.emplace_back(run_chunk, w);
                for (auto& t : pool) t.join();
            }

            total.zero();
            for (int w = 0; w < threads; ++w) total.add(worker_grads[static_cast<size_t>(w)]);
            total.scale(1.0 / static_cast<double>(batch));
            if (config.ablation == Ablation::qonly) mask_pcf_scale_grads(total);

            const double lr = cyclical_lr(result.steps, config.lr);
            adamw_step(params, total, state, config.adamw, lr);
            result.steps += 1;

            for (double l : losses) epoch_loss += l;
            epoch_examples += static_cast<long>(batch);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(epoch_examples));
    }
    return result;
}

namespace {

const char* answer_type_label(AnswerType t) {
    switch (t) {
        case AnswerType::yes_no: return "Y/N";
        case AnswerType::color: return "Color";
        case AnswerType::number: return "Number";
        case AnswerType::other: return "Other";
    }
    return "?";
}

}  // namespace

EvalReport evaluate_cached(const Pipeline& pipeline, const std::vector<QARecord>& records,
                           const SceneElementsCache& cache) {
    EvalReport report;
    for (const char* label : {"Y/N", "Color", "Number", "Other"}) report.by_answer_type[label];
    for (QuestionType t : {QuestionType::aggregation, QuestionType::compare_avg, QuestionType::placement,
                           QuestionType::spatial, QuestionType::viewpoint})
        report.by_question_type[question_type_name(t)];

    for (const QARecord& record : records) {
        if (record.split != Split::test) continue;
        const std::string predicted = pipeline.predict(record.question, cache.at(record.scene_id));
        const double score = accuracy(predicted, record);
        report.overall.count += 1;
        report.overall.score_sum += score;

        auto& at_cell = report.by_answer_type[answer_type_label(classify_answer_type(record))];
        at_cell.count += 1;
        at_cell.score_sum += score;

        if (const auto qt = classify_question_type(record.question, default_question_type_lexicon())) {
            auto& qt_cell = report.by_question_type[question_type_name(*qt)];
            qt_cell.count += 1;
            qt_cell.score_sum += score;
        }
    }
    return report;
}

EvalReport evaluate(const Pipeline& pipeline, const std::vector<QARecord>& records,
                    const SceneMap& scenes) {
    std::vector<QARecord> test_records;
    for (const QARecord& r : records)
        if (r.split == Split::test) test_records.push_back(r);
    const auto cache = build_scene_cache(pipeline, test_records, scenes);
    return evaluate_cached(pipeline, records, cache);
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    auto cell_json = [](const EvalCell& c) {
        nlohmann::ordered_json out;
        out["count"] = c.count;
        if (c.defined()) out["accuracy"] = c.mean();
        else out["accuracy"] = nullptr;
        return out;
    };
    j["overall"] = cell_json(overall);
    for (const auto& [name, cell] : by_answer_type) j["answer_types"][name] = cell_json(cell);
    for (const auto& [name, cell] : by_question_type) j["question_types"][name] = cell_json(cell);
    return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("eval report: ") + e.what());
    }
    EvalReport report;
    auto cell_from = [](const nlohmann::json& c) {
        EvalCell cell;
        cell.count = c.at("count").get<long>();
        if (!c.at("accuracy").is_null())
            cell.score_sum = c.at("accuracy").get<double>() * static_cast<double>(cell.count);
        return cell;
    };
    report.overall = cell_from(j.at("overall"));
    for (const auto& [name, c] : j.at("answer_types").items()) report.by_answer_type[name] = cell_from(c);
    for (const auto& [name, c] : j.at("question_types").items())
        report.by_question_type[name] = cell_from(c);
    return report;
}

std::string EvalReport::to_table() const {
    const std::vector<std::string> headers = {"All",         "Number",  "Color",   "Y/N",
                                              "Other",       "aggregation", "compare-avg",
                                              "placement",   "spatial", "viewpoint"};
    auto cell_of = [&](const std::string& name) -> const EvalCell& {
        if (name == "All") return overall;
        if (by_answer_type.count(name)) return by_answer_type.at(name);
        return by_question_type.at(name);
    };
    auto cell_text = [](const EvalCell& c) {
        if (!c.defined()) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * c.mean());
        return std::string(buf);
    };

    std::ostringstream out;
    out << std::left << std::setw(10) << "";
    for (const auto& h : headers) out << std::right << std::setw(13) << h;
    out << "\n" << std::left << std::setw(10) << "accuracy";
    for (const auto& h : headers) out << std::right << std::setw(13) << cell_text(cell_of(h));
    out << "\n" << std::left << std::setw(10) << "count";
    for (const auto& h : headers) out << std::right << std::setw(13) << cell_of(h).count;
    out << "\n";
    return out.str();
}

}  // namespace scanqa
