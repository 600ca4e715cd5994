#pragma once

#include <vector>

#include "scanqa/matrix.hpp"
#include "scanqa/tokenizer.hpp"

namespace scanqa {

enum class ElementKind { linguistic = 0, appearance = 1, geometry = 2, auxiliary = 3 };
enum class EmbeddingType { pcf = 0, token = 1, position = 2 };

// Which projection turns the raw feature into the pcf embedding.
enum class PcfRoute { global = 0, appearance = 1, geometry = 2, combined = 3 };

struct Element {
    ElementKind kind = ElementKind::auxiliary;
    PcfRoute route = PcfRoute::global;
    int token_id = 0;
    int position_id = 0;
    std::vector<double> pcf_input;
};

struct ElementSequence {
    std::vector<Element> elements;
    std::vector<double> attention_mask;  // 1.0 = attendable

    int length() const { return static_cast<int>(elements.size()); }
};

enum class Ablation { full, qonly, geo_q, app_q, no_spa_embedding, one_element_for_all };
const char* ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

// Model-independent per-scene features, ready for element assembly.
struct SceneElements {
    std::vector<std::vector<double>> geometry_features;   // K x f_g
    std::vector<std::vector<double>> spatial_embeddings;  // K x 12*pe_d_model
    std::vector<std::vector<double>> appearance_features; // K x f_a
    std::vector<double> global_appearance;                // f_a
    std::vector<double> global_geometry;                  // f_g

    int proposal_count() const { return static_cast<int>(geometry_features.size()); }
};

struct FusionConfig {
    int d_h = 64;
    int layers = 4;
    int heads = 4;
    int d_ff = 128;
    int token_vocab_size = 0;
    int max_positions = 64;
    int f_g = 64;
    int f_a = 64;
    int pe_d_model = 16;
    int num_answers = 0;
    double init_std = 0.02;

    int geo_in() const { return f_g + 12 * pe_d_model; }
    int global_in() const { return f_a + f_g; }
    int combined_in() const { return f_g + 12 * pe_d_model + f_a; }
    void check() const;
};

struct TransformerLayerParams {
    Mat wq, bq, wk, bk, wv, bv, wo, bo;
    Mat ln1_gamma, ln1_beta;
    Mat wf1, bf1, wf2, bf2;
    Mat ln2_gamma, ln2_beta;
};

struct FusionModel {
    FusionConfig config;
    Mat token_table;     // vocab x d_h
    Mat position_table;  // max_positions x d_h
    Mat geo_proj_w, geo_proj_b;
    Mat app_proj_w, app_proj_b;
    Mat global_proj_w, global_proj_b;
    Mat combined_proj_w, combined_proj_b;
    Mat embed_scales;  // 4 kinds x 3 embedding types, initialized to 1
    std::vector<TransformerLayerParams> layers;
    Mat cls_w, cls_b;

    void init(const FusionConfig& cfg, uint64_t seed);
    std::vector<ParamRef> params();  // enumeration order is the checkpoint/optimizer order

    double scale(ElementKind kind, EmbeddingType type) const {
        return embed_scales(static_cast<int>(kind), static_cast<int>(type));
    }
};

struct LayerCache {
    Mat x_in;
    Mat q, k, v;
    std::vector<Mat> attn;  // per-head softmax rows, E x E
    Mat heads_concat;
    Mat attn_out;
    Mat ln1_norm;  // normalized rows, pre gamma/beta
    std::vector<double> ln1_rstd;
    Mat x_mid;
    Mat ff_pre, ff_act, ff_out;
    Mat ln2_norm;
    std::vector<double> ln2_rstd;
};

struct ForwardCache {
    Mat pcf;  // E x d_h projected pcf embeddings
    Mat x0;   // E x d_h scaled embedding sums
    std::vector<LayerCache> layers;
    Mat x_final;
    std::vector<double> logits;
};

// Builds the element sequence for one question over one scene:
// [CLS] q_1..q_T [SEP] <appearance block> [SEP] <geometry block> [SEP].
// Block members share one position id each; ablations empty or rewrite
// the blocks but keep the CLS and the three SEPs.
ElementSequence assemble_elements(const TokenizedQuestion& tokens, const TokenVocabulary& vocab,
                                  const SceneElements& scene, const FusionModel& model,
                                  Ablation ablation);

// Post-LN transformer encoder; classifier reads the [CLS] row.
std::vector<double> forward(const ElementSequence& seq, const FusionModel& model,
                            ForwardCache* cache = nullptr);

// Cross entropy against a nonnegative target distribution summing to 1.
double loss(const std::vector<double>& logits, const std::vector<double>& target);

// Exact reverse-mode gradients for every parameter, accumulated into
// `grads` (aligned with FusionModel::params() order). Requires the cache
// of a forward pass over the same sequence.
void backward(const FusionModel& model, const ElementSequence& seq, const ForwardCache& cache,
              const std::vector<double>& target, Gradients& grads);

std::vector<double> softmax(const std::vector<double>& logits);

}  // namespace scanqa
