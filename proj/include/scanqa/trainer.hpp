#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scanqa/filters.hpp"
#include "scanqa/optimizer.hpp"
#include "scanqa/pipeline.hpp"

namespace scanqa {

struct TrainConfig {
    int batch_size = 64;
    AdamWConfig adamw;
    CyclicalLrConfig lr;
    int epochs = 10;
    uint64_t seed = 1;
    Ablation ablation = Ablation::full;
    int threads = 4;
};

struct TrainResult {
    std::vector<double> loss_curve;  // mean example loss per epoch
    long steps = 0;
    long examples_used = 0;
};

// Soft supervision: mass proportional to each vocabulary answer's
// agreement score for this record; empty when no vocabulary answer
// matches any annotation.
std::vector<double> soft_target(const QARecord& record, const AnswerVocabulary& vocab);

using SceneMap = std::map<std::string, Scene>;
using SceneElementsCache = std::map<std::string, SceneElements>;

// Computes SceneElements once per referenced scene.
SceneElementsCache build_scene_cache(const Pipeline& pipeline, const std::vector<QARecord>& records,
                                     const SceneMap& scenes);

// Trains the fusion model on train+val records. Deterministic under a
// fixed seed: fixed shuffling and a fixed gradient reduction order, also
// when threads > 1.
TrainResult train(Pipeline& pipeline, const std::vector<QARecord>& records, const SceneMap& scenes,
                  const TrainConfig& config);

struct EvalCell {
    long count = 0;
    double score_sum = 0.0;

    bool defined() const { return count > 0; }
    double mean() const { return defined() ? score_sum / static_cast<double>(count) : 0.0; }
};

struct EvalReport {
    EvalCell overall;
    std::map<std::string, EvalCell> by_answer_type;    // Y/N, Color, Number, Other
    std::map<std::string, EvalCell> by_question_type;  // the five keyword types

    std::string to_json() const;
    static EvalReport from_json(const std::string& text);
    // Aligned text table: All | answer types | question types.
    std::string to_table() const;
};

// Argmax prediction scored with the agreement metric, aggregated per
// answer-type and question-type split. Test-split records only.
EvalReport evaluate(const Pipeline& pipeline, const std::vector<QARecord>& records,
                    const SceneMap& scenes);
EvalReport evaluate_cached(const Pipeline& pipeline, const std::vector<QARecord>& records,
                           const SceneElementsCache& cache);

}  // namespace scanqa
