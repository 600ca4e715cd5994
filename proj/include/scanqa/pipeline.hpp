#pragma once

#include <map>
#include <string>

#include "scanqa/appearance.hpp"
#include "scanqa/fusion.hpp"
#include "scanqa/geometry.hpp"
#include "scanqa/qa.hpp"

namespace scanqa {

struct PipelineConfig {
    FusionConfig fusion;
    ProposalConfig proposals;
    double pe_base = 1000.0;
    int encoder_hidden = 64;
    double encoder_weight_std = 1.2;
};

// The full question-answering stack: two frozen point-set encoders, the
// spatial embedding codebook, and the trainable fusion model.
struct Pipeline {
    PipelineConfig config;
    Ablation ablation = Ablation::full;
    TokenVocabulary token_vocab;
    AnswerVocabulary answer_vocab;
    PointSetEncoder geo_encoder;
    PointSetEncoder app_encoder;
    FusionModel fusion;

    void init(const PipelineConfig& cfg, TokenVocabulary tokens, AnswerVocabulary answers,
              uint64_t seed);

    // Proposals, per-object geometry/appearance features, spatial
    // embeddings, and the two global features for one scene.
    SceneElements scene_elements(const Scene& scene) const;

    ElementSequence sequence_for(const std::string& question, const SceneElements& scene) const;

    // Argmax answer over the vocabulary.
    std::string predict(const std::string& question, const SceneElements& scene) const;
    std::vector<double> predict_logits(const std::string& question, const SceneElements& scene) const;

    // Encoder tensors plus fusion tensors, prefixed, in checkpoint order.
    std::vector<ParamRef> all_params();

    void save(const std::string& stem);
    void load(const std::string& stem);
};

int argmax_index(const std::vector<double>& values);

}  // namespace scanqa
