#include "scanqa/pipeline.hpp"

#include "scanqa/checkpoint.hpp"

namespace scanqa {

int argmax_index(const std::vector<double>& values) {
    int best = 0;
    for (size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[static_cast<size_t>(best)]) best = static_cast<int>(i);
    return best;
}

void Pipeline::init(const PipelineConfig& cfg, TokenVocabulary tokens, AnswerVocabulary answers,
                    uint64_t seed) {
    config = cfg;
    token_vocab = std::move(tokens);
    answer_vocab = std::move(answers);
    if (answer_vocab.size() == 0) throw ConfigError("pipeline: empty answer vocabulary");

    FusionConfig fusion_cfg = cfg.fusion;
    fusion_cfg.token_vocab_size = token_vocab.size();
    fusion_cfg.num_answers = answer_vocab.size();

    geo_encoder = PointSetEncoder(3, cfg.encoder_hidden, fusion_cfg.f_g, mix_seed(seed, 1),
                                  cfg.encoder_weight_std);
    app_encoder = PointSetEncoder(6, cfg.encoder_hidden, fusion_cfg.f_a, mix_seed(seed, 2),
                                  cfg.encoder_weight_std);
    fusion.init(fusion_cfg, mix_seed(seed, 3));

    if (ablation == Ablation::qonly) {
        for (int kind = 0; kind < 4; ++kind)
            fusion.embed_scales(kind, static_cast<int>(EmbeddingType::pcf)) = 0.0;
    }
}

SceneElements Pipeline::scene_elements(const Scene& scene) const {
    SceneElements out;
    if (ablation == Ablation::qonly) return out;

    const auto proposals = propose_objects(scene, config.proposals);
    const PECodebook codebook{config.fusion.pe_d_model, config.pe_base};
    const auto coords = strip_color(scene);

    std::vector<std::vector<int>> index_sets;
    for (const ObjectProposal& p : proposals) {
        std::vector<std::array<double, 3>> object_coords;
        object_coords.reserve(p.point_indices.size());
        for (int idx : p.point_indices) object_coords.push_back(coords[static_cast<size_t>(idx)]);
        out.geometry_features.push_back(geometry_features(object_coords, geo_encoder));
        out.spatial_embeddings.push_back(positional_encode(spatial_vector(p.box, scene.extents), codebook));
        index_sets.push_back(p.point_indices);
    }
    const AppearanceFeature app = appearance_features(scene, index_sets, app_encoder);
    out.appearance_features = app.per_object;
    out.global_appearance = app.global_feature;
    out.global_geometry = global_geometry_feature(scene, geo_encoder);
    return out;
}

ElementSequence Pipeline::sequence_for(const std::string& question, const SceneElements& scene) const {
    const TokenizedQuestion tokens = tokenize(question, token_vocab);
    return assemble_elements(tokens, token_vocab, scene, fusion, ablation);
}

std::vector<double> Pipeline::predict_logits(const std::string& question,
                                             const SceneElements& scene) const {
    return forward(sequence_for(question, scene), fusion);
}

std::string Pipeline::predict(const std::string& question, const SceneElements& scene) const {
    const auto logits = predict_logits(question, scene);
    return answer_vocab.answers[static_cast<size_t>(argmax_index(logits))];
}

std::vector<ParamRef> Pipeline::all_params() {
    std::vector<ParamRef> out;
    for (const ParamRef& p : geo_encoder.params()) out.push_back({"geo_encoder." + p.name, p.value});
    for (const ParamRef& p : app_encoder.params()) out.push_back({"app_encoder." + p.name, p.value});
    for (const ParamRef& p : fusion.params()) out.push_back({"fusion." + p.name, p.value});
    return out;
}

void Pipeline::save(const std::string& stem) { save_checkpoint(all_params(), stem); }

void Pipeline::load(const std::string& stem) { load_checkpoint(all_params(), stem); }

}  // namespace scanqa
