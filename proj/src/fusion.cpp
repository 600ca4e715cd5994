#include "scanqa/fusion.hpp"

#include <cmath>
#include <cstring>
#include <limits>

namespace scanqa {

namespace {

constexpr double kLnEps = 1e-12;
constexpr double kMaskBias = -1e9;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

double gelu_grad(double x) {
    return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))) + x * std::exp(-0.5 * x * x) * kInvSqrt2Pi;
}

// y = gamma * (x - mean) * rstd + beta, row-wise over the feature dim.
void layer_norm(const Mat& x, const Mat& gamma, const Mat& beta, Mat& norm,
                std::vector<double>& rstd, Mat& out) {
    const int d = x.cols;
    norm = Mat(x.rows, d);
    out = Mat(x.rows, d);
    rstd.assign(static_cast<size_t>(x.rows), 0.0);
    for (int i = 0; i < x.rows; ++i) {
        const double* xi = x.row(i);
        double mean = 0.0;
        for (int j = 0; j < d; ++j) mean += xi[j];
        mean /= d;
        double var = 0.0;
        for (int j = 0; j < d; ++j) {
            const double c = xi[j] - mean;
            var += c * c;
        }
        var /= d;
        const double r = 1.0 / std::sqrt(var + kLnEps);
        rstd[static_cast<size_t>(i)] = r;
        for (int j = 0; j < d; ++j) {
            norm(i, j) = (xi[j] - mean) * r;
            out(i, j) = gamma(0, j) * norm(i, j) + beta(0, j);
        }
    }
}

// dx, dgamma, dbeta given dy; norm/rstd from the forward pass.
void layer_norm_backward(const Mat& dy, const Mat& norm, const std::vector<double>& rstd,
                         const Mat& gamma, Mat& dx, Mat& dgamma, Mat& dbeta) {
    const int d = dy.cols;
    dx = Mat(dy.rows, d);
    for (int i = 0; i < dy.rows; ++i) {
        double sum_dn = 0.0, sum_dn_norm = 0.0;
        for (int j = 0; j < d; ++j) {
            const double dn = dy(i, j) * gamma(0, j);
            sum_dn += dn;
            sum_dn_norm += dn * norm(i, j);
            dgamma(0, j) += dy(i, j) * norm(i, j);
            dbeta(0, j) += dy(i, j);
        }
        const double mean_dn = sum_dn / d;
        const double mean_dn_norm = sum_dn_norm / d;
        for (int j = 0; j < d; ++j) {
            const double dn = dy(i, j) * gamma(0, j);
            dx(i, j) = rstd[static_cast<size_t>(i)] * (dn - mean_dn - norm(i, j) * mean_dn_norm);
        }
    }
}

void add_bias(Mat& m, const Mat& bias) {
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) m(i, j) += bias(0, j);
}

void accumulate_bias_grad(const Mat& d, Mat& dbias) {
    for (int i = 0; i < d.rows; ++i)
        for (int j = 0; j < d.cols; ++j) dbias(0, j) += d(i, j);
}

const std::vector<double>& projection_input(const Element& e) { return e.pcf_input; }

struct ProjRefs {
    const Mat* w;
    const Mat* b;
};

ProjRefs route_projection(const FusionModel& model, PcfRoute route) {
    switch (route) {
        case PcfRoute::global: return {&model.global_proj_w, &model.global_proj_b};
        case PcfRoute::appearance: return {&model.app_proj_w, &model.app_proj_b};
        case PcfRoute::geometry: return {&model.geo_proj_w, &model.geo_proj_b};
        case PcfRoute::combined: return {&model.combined_proj_w, &model.combined_proj_b};
    }
    throw ParameterError("unknown pcf route");
}

const char* route_name(PcfRoute route) {
    switch (route) {
        case PcfRoute::global: return "global";
        case PcfRoute::appearance: return "appearance";
        case PcfRoute::geometry: return "geometry";
        case PcfRoute::combined: return "combined";
    }
    return "?";
}

// Gradient slot indices following FusionModel::params() order.
struct ParamIndex {
    static constexpr int token_table = 0;
    static constexpr int position_table = 1;
    static constexpr int geo_w = 2, geo_b = 3;
    static constexpr int app_w = 4, app_b = 5;
    static constexpr int global_w = 6, global_b = 7;
    static constexpr int combined_w = 8, combined_b = 9;
    static constexpr int scales = 10;
    static constexpr int per_layer = 16;
    static int layer_base(int l) { return 11 + per_layer * l; }
    static int cls_w(int layers) { return 11 + per_layer * layers; }
    static int cls_b(int layers) { return cls_w(layers) + 1; }
};

int proj_w_index(PcfRoute route) {
    switch (route) {
        case PcfRoute::global: return ParamIndex::global_w;
        case PcfRoute::appearance: return ParamIndex::app_w;
        case PcfRoute::geometry: return ParamIndex::geo_w;
        case PcfRoute::combined: return ParamIndex::combined_w;
    }
    return -1;
}

}  // namespace

const char* ablation_name(Ablation a) {
    switch (a) {
        case Ablation::full: return "full";
        case Ablation::qonly: return "qonly";
        case Ablation::geo_q: return "geo_q";
        case Ablation::app_q: return "app_q";
        case Ablation::no_spa_embedding: return "no_spa";
        case Ablation::one_element_for_all: return "one_element";
    }
    return "?";
}

Ablation ablation_from_name(const std::string& name) {
    if (name == "full") return Ablation::full;
    if (name == "qonly") return Ablation::qonly;
    if (name == "geo_q") return Ablation::geo_q;
    if (name == "app_q") return Ablation::app_q;
    if (name == "no_spa" || name == "no_spa_embedding") return Ablation::no_spa_embedding;
    if (name == "one_element" || name == "one_element_for_all") return Ablation::one_element_for_all;
    throw ParameterError("unknown ablation '" + name + "'");
}

void FusionConfig::check() const {
    if (d_h <= 0 || heads <= 0 || d_h % heads != 0)
        throw ShapeError("fusion config: d_h must be a positive multiple of heads");
    if (layers <= 0 || d_ff <= 0) throw ShapeError("fusion config: layers and d_ff must be positive");
    if (token_vocab_size <= 0) throw ShapeError("fusion config: token_vocab_size unset");
    if (num_answers <= 0) throw ShapeError("fusion config: num_answers unset");
    if (pe_d_model <= 0 || pe_d_model % 2 != 0)
        throw ShapeError("fusion config: pe_d_model must be even and positive");
}

void FusionModel::init(const FusionConfig& cfg, uint64_t seed) {
    cfg.check();
    config = cfg;
    std::mt19937_64 rng(seed);
    auto normal = [&](int r, int c) {
        Mat m(r, c);
        fill_normal(m, cfg.init_std, rng);
        return m;
    };
    token_table = normal(cfg.token_vocab_size, cfg.d_h);
    position_table = normal(cfg.max_positions, cfg.d_h);
    geo_proj_w = normal(cfg.geo_in(), cfg.d_h);
    geo_proj_b = Mat(1, cfg.d_h);
    app_proj_w = normal(cfg.f_a, cfg.d_h);
    app_proj_b = Mat(1, cfg.d_h);
    global_proj_w = normal(cfg.global_in(), cfg.d_h);
    global_proj_b = Mat(1, cfg.d_h);
    combined_proj_w = normal(cfg.combined_in(), cfg.d_h);
    combined_proj_b = Mat(1, cfg.d_h);
    embed_scales = Mat(4, 3);
    for (auto& v : embed_scales.a) v = 1.0;
    layers.clear();
    for (int l = 0; l < cfg.layers; ++l) {
        TransformerLayerParams p;
        p.wq = normal(cfg.d_h, cfg.d_h);
        p.bq = Mat(1, cfg.d_h);
        p.wk = normal(cfg.d_h, cfg.d_h);
        p.bk = Mat(1, cfg.d_h);
        p.wv = normal(cfg.d_h, cfg.d_h);
        p.bv = Mat(1, cfg.d_h);
        p.wo = normal(cfg.d_h, cfg.d_h);
        p.bo = Mat(1, cfg.d_h);
        p.ln1_gamma = Mat(1, cfg.d_h);
        p.ln1_beta = Mat(1, cfg.d_h);
        p.ln2_gamma = Mat(1, cfg.d_h);
        p.ln2_beta = Mat(1, cfg.d_h);
        for (auto& v : p.ln1_gamma.a) v = 1.0;
        for (auto& v : p.ln2_gamma.a) v = 1.0;
        p.wf1 = normal(cfg.d_h, cfg.d_ff);
        p.bf1 = Mat(1, cfg.d_ff);
        p.wf2 = normal(cfg.d_ff, cfg.d_h);
        p.bf2 = Mat(1, cfg.d_h);
        layers.push_back(std::move(p));
    }
    cls_w = normal(cfg.d_h, cfg.num_answers);
    cls_b = Mat(1, cfg.num_answers);
}

std::vector<ParamRef> FusionModel::params() {
    std::vector<ParamRef> out = {
        {"token_table", &token_table},
        {"position_table", &position_table},
        {"geo_proj.w", &geo_proj_w},
        {"geo_proj.b", &geo_proj_b},
        {"app_proj.w", &app_proj_w},
        {"app_proj.b", &app_proj_b},
        {"global_proj.w", &global_proj_w},
        {"global_proj.b", &global_proj_b},
        {"combined_proj.w", &combined_proj_w},
        {"combined_proj.b", &combined_proj_b},
        {"embed_scales", &embed_scales},
    };
    for (size_t l = 0; l < layers.size(); ++l) {
        const std::string prefix = "layer" + std::to_string(l) + ".";
        TransformerLayerParams& p = layers[l];
        out.push_back({prefix + "wq", &p.wq});
        out.push_back({prefix + "bq", &p.bq});
        out.push_back({prefix + "wk", &p.wk});
        out.push_back({prefix + "bk", &p.bk});
        out.push_back({prefix + "wv", &p.wv});
        out.push_back({prefix + "bv", &p.bv});
        out.push_back({prefix + "wo", &p.wo});
        out.push_back({prefix + "bo", &p.bo});
        out.push_back({prefix + "ln1.gamma", &p.ln1_gamma});
        out.push_back({prefix + "ln1.beta", &p.ln1_beta});
        out.push_back({prefix + "wf1", &p.wf1});
        out.push_back({prefix + "bf1", &p.bf1});
        out.push_back({prefix + "wf2", &p.wf2});
        out.push_back({prefix + "bf2", &p.bf2});
        out.push_back({prefix + "ln2.gamma", &p.ln2_gamma});
        out.push_back({prefix + "ln2.beta", &p.ln2_beta});
    }
    out.push_back({"classifier.w", &cls_w});
    out.push_back({"classifier.b", &cls_b});
    return out;
}

ElementSequence assemble_elements(const TokenizedQuestion& tokens, const TokenVocabulary& vocab,
                                  const SceneElements& scene, const FusionModel& model,
                                  Ablation ablation) {
    const FusionConfig& cfg = model.config;
    const int k = scene.proposal_count();
    if (ablation != Ablation::qonly) {
        if (static_cast<int>(scene.spatial_embeddings.size()) != k ||
            static_cast<int>(scene.appearance_features.size()) != k)
            throw ShapeError("assemble_elements: per-proposal feature counts disagree");
    }

    // Token budget: CLS + T + three SEPs + two block position ids.
    const int max_tokens = cfg.max_positions - 6;
    std::vector<int> ids = tokens.token_ids;
    if (static_cast<int>(ids.size()) > max_tokens) {
        log_warn("assemble_elements: question truncated to " + std::to_string(max_tokens) + " tokens");
        ids.resize(static_cast<size_t>(max_tokens));
    }
    const int t = static_cast<int>(ids.size());

    auto check_width = [&](const std::vector<double>& v, int want, const char* proj) {
        if (static_cast<int>(v.size()) != want)
            throw ShapeError(std::string("assemble_elements: feature length ") + std::to_string(v.size()) +
                             " does not match " + proj + " projection input " + std::to_string(want));
    };

    std::vector<double> global_input;
    if (ablation == Ablation::qonly) {
        global_input.assign(static_cast<size_t>(cfg.global_in()), 0.0);
    } else {
        check_width(scene.global_appearance, cfg.f_a, "global");
        check_width(scene.global_geometry, cfg.f_g, "global");
        global_input = scene.global_appearance;
        global_input.insert(global_input.end(), scene.global_geometry.begin(),
                            scene.global_geometry.end());
    }

    ElementSequence seq;
    auto push = [&](ElementKind kind, PcfRoute route, int token_id, int position_id,
                    std::vector<double> pcf_input) {
        seq.elements.push_back(Element{kind, route, token_id, position_id, std::move(pcf_input)});
    };

    push(ElementKind::auxiliary, PcfRoute::global, vocab.cls_id, 0, global_input);
    for (int i = 0; i < t; ++i)
        push(ElementKind::linguistic, PcfRoute::global, ids[static_cast<size_t>(i)], 1 + i, global_input);
    push(ElementKind::auxiliary, PcfRoute::global, vocab.sep_id, t + 1, global_input);

    const int app_pos = t + 2;
    const int geo_pos = t + 4;
    const bool with_app = ablation == Ablation::full || ablation == Ablation::app_q ||
                          ablation == Ablation::no_spa_embedding;
    const bool with_geo = ablation == Ablation::full || ablation == Ablation::geo_q ||
                          ablation == Ablation::no_spa_embedding;

    if (with_app) {
        for (int i = 0; i < k; ++i) {
            check_width(scene.appearance_features[static_cast<size_t>(i)], cfg.f_a, "appearance");
            push(ElementKind::appearance, PcfRoute::appearance, vocab.app_id, app_pos,
                 scene.appearance_features[static_cast<size_t>(i)]);
        }
    }
    push(ElementKind::auxiliary, PcfRoute::global, vocab.sep_id, t + 3, global_input);

    if (with_geo) {
        for (int i = 0; i < k; ++i) {
            check_width(scene.geometry_features[static_cast<size_t>(i)], cfg.f_g, "geometry");
            std::vector<double> input = scene.geometry_features[static_cast<size_t>(i)];
            if (ablation == Ablation::no_spa_embedding) {
                input.resize(static_cast<size_t>(cfg.geo_in()), 0.0);
            } else {
                check_width(scene.spatial_embeddings[static_cast<size_t>(i)], 12 * cfg.pe_d_model,
                            "geometry");
                input.insert(input.end(), scene.spatial_embeddings[static_cast<size_t>(i)].begin(),
                             scene.spatial_embeddings[static_cast<size_t>(i)].end());
            }
            push(ElementKind::geometry, PcfRoute::geometry, vocab.geo_id, geo_pos,
                 std::move(input));
        }
    } else if (ablation == Ablation::one_element_for_all) {
        for (int i = 0; i < k; ++i) {
            std::vector<double> input = scene.geometry_features[static_cast<size_t>(i)];
            input.insert(input.end(), scene.spatial_embeddings[static_cast<size_t>(i)].begin(),
                         scene.spatial_embeddings[static_cast<size_t>(i)].end());
            input.insert(input.end(), scene.appearance_features[static_cast<size_t>(i)].begin(),
                         scene.appearance_features[static_cast<size_t>(i)].end());
            check_width(input, cfg.combined_in(), "combined");
            push(ElementKind::geometry, PcfRoute::combined, vocab.geo_id, geo_pos,
                 std::move(input));
        }
    }
    push(ElementKind::auxiliary, PcfRoute::global, vocab.sep_id, t + 5, global_input);

    seq.attention_mask.assign(seq.elements.size(), 1.0);
    return seq;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    double hi = logits[0];
    for (double v : logits) hi = std::max(hi, v);
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - hi);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

std::vector<double> forward(const ElementSequence& seq, const FusionModel& model, ForwardCache* cache) {
    const FusionConfig& cfg = model.config;
    const int e_count = seq.length();
    if (e_count == 0) throw ShapeError("forward: empty element sequence");
    const int d = cfg.d_h;
    const int heads = cfg.heads;
    const int dk = d / heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));

    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.layers.assign(static_cast<size_t>(cfg.layers), LayerCache{});

    // embeddings
    c.pcf = Mat(e_count, d);
    c.x0 = Mat(e_count, d);
    for (int e = 0; e < e_count; ++e) {
        const Element& el = seq.elements[static_cast<size_t>(e)];
        const auto proj = route_projection(model, el.route);
        const auto& input = projection_input(el);
        if (static_cast<int>(input.size()) != proj.w->rows)
            throw ShapeError(std::string("forward: feature length does not match ") +
                             route_name(el.route) + " projection");
        for (int j = 0; j < d; ++j) {
            double s = (*proj.b)(0, j);
            for (size_t i = 0; i < input.size(); ++i)
                s += input[i] * (*proj.w)(static_cast<int>(i), j);
            c.pcf(e, j) = s;
        }
        if (el.token_id < 0 || el.token_id >= cfg.token_vocab_size)
            throw ShapeError("forward: token id out of range");
        if (el.position_id < 0 || el.position_id >= cfg.max_positions)
            throw ShapeError("forward: position id out of range");
        const double s_pcf = model.scale(el.kind, EmbeddingType::pcf);
        const double s_tok = model.scale(el.kind, EmbeddingType::token);
        const double s_pos = model.scale(el.kind, EmbeddingType::position);
        for (int j = 0; j < d; ++j) {
            c.x0(e, j) = s_pcf * c.pcf(e, j) + s_tok * model.token_table(el.token_id, j) +
                         s_pos * model.position_table(el.position_id, j);
        }
    }

    Mat x = c.x0;
    for (int l = 0; l < cfg.layers; ++l) {
        const TransformerLayerParams& p = model.layers[static_cast<size_t>(l)];
        LayerCache& lc = c.layers[static_cast<size_t>(l)];
        lc.x_in = x;

        matmul(x, p.wq, lc.q);
        add_bias(lc.q, p.bq);
        matmul(x, p.wk, lc.k);
        add_bias(lc.k, p.bk);
        matmul(x, p.wv, lc.v);
        add_bias(lc.v, p.bv);

        lc.attn.assign(static_cast<size_t>(heads), Mat(e_count, e_count));
        lc.heads_concat = Mat(e_count, d);
        for (int h = 0; h < heads; ++h) {
            Mat& a = lc.attn[static_cast<size_t>(h)];
            const int off = h * dk;
            for (int i = 0; i < e_count; ++i) {
                double hi = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < e_count; ++j) {
                    double s = 0.0;
                    for (int m = 0; m < dk; ++m) s += lc.q(i, off + m) * lc.k(j, off + m);
                    s *= inv_sqrt_dk;
                    if (seq.attention_mask[static_cast<size_t>(j)] == 0.0) s += kMaskBias;
                    a(i, j) = s;
                    hi = std::max(hi, s);
                }
                double sum = 0.0;
                for (int j = 0; j < e_count; ++j) {
                    a(i, j) = std::exp(a(i, j) - hi);
                    sum += a(i, j);
                }
                for (int j = 0; j < e_count; ++j) a(i, j) /= sum;
                for (int m = 0; m < dk; ++m) {
                    double s = 0.0;
                    for (int j = 0; j < e_count; ++j) s += a(i, j) * lc.v(j, off + m);
                    lc.heads_concat(i, off + m) = s;
                }
            }
        }
        matmul(lc.heads_concat, p.wo, lc.attn_out);
        add_bias(lc.attn_out, p.bo);

        Mat res1(e_count, d);
        for (size_t i = 0; i < res1.a.size(); ++i) res1.a[i] = x.a[i] + lc.attn_out.a[i];
        layer_norm(res1, p.ln1_gamma, p.ln1_beta, lc.ln1_norm, lc.ln1_rstd, lc.x_mid);

        matmul(lc.x_mid, p.wf1, lc.ff_pre);
        add_bias(lc.ff_pre, p.bf1);
        lc.ff_act = Mat(e_count, cfg.d_ff);
        for (size_t i = 0; i < lc.ff_pre.a.size(); ++i) lc.ff_act.a[i] = gelu(lc.ff_pre.a[i]);
        matmul(lc.ff_act, p.wf2, lc.ff_out);
        add_bias(lc.ff_out, p.bf2);

        Mat res2(e_count, d);
        for (size_t i = 0; i < res2.a.size(); ++i) res2.a[i] = lc.x_mid.a[i] + lc.ff_out.a[i];
        layer_norm(res2, p.ln2_gamma, p.ln2_beta, lc.ln2_norm, lc.ln2_rstd, x);
    }
    c.x_final = x;

    std::vector<double> logits(static_cast<size_t>(cfg.num_answers));
    for (int j = 0; j < cfg.num_answers; ++j) {
        double s = model.cls_b(0, j);
        for (int i = 0; i < d; ++i) s += x(0, i) * model.cls_w(i, j);
        logits[static_cast<size_t>(j)] = s;
    }
    c.logits = logits;
    return logits;
}

double loss(const std::vector<double>& logits, const std::vector<double>& target) {
    if (logits.size() != target.size()) throw ShapeError("loss: logits/target size mismatch");
    double sum = 0.0;
    for (double t : target) {
        if (t < 0.0) throw ValidationError("loss: target has negative mass");
        sum += t;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ValidationError("loss: target does not sum to 1");

    double hi = logits[0];
    for (double v : logits) hi = std::max(hi, v);
    double lse = 0.0;
    for (double v : logits) lse += std::exp(v - hi);
    lse = hi + std::log(lse);
    double out = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) out -= target[i] * (logits[i] - lse);
    return out;
}

void backward(const FusionModel& model, const ElementSequence& seq, const ForwardCache& cache,
              const std::vector<double>& target, Gradients& grads) {
    const FusionConfig& cfg = model.config;
    const int e_count = seq.length();
    const int d = cfg.d_h;
    const int heads = cfg.heads;
    const int dk = d / heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
    const int n_layers = cfg.layers;

    // d logits = softmax - target
    const auto probs = softmax(cache.logits);
    std::vector<double> dlogits(probs.size());
    for (size_t i = 0; i < probs.size(); ++i) dlogits[i] = probs[i] - target[i];

    Mat& d_cls_w = grads.g[static_cast<size_t>(ParamIndex::cls_w(n_layers))];
    Mat& d_cls_b = grads.g[static_cast<size_t>(ParamIndex::cls_b(n_layers))];
    Mat dx(e_count, d);
    for (int j = 0; j < cfg.num_answers; ++j) {
        d_cls_b(0, j) += dlogits[static_cast<size_t>(j)];
        for (int i = 0; i < d; ++i) {
            d_cls_w(i, j) += cache.x_final(0, i) * dlogits[static_cast<size_t>(j)];
            dx(0, i) += model.cls_w(i, j) * dlogits[static_cast<size_t>(j)];
        }
    }

    for (int l = n_layers - 1; l >= 0; --l) {
        const TransformerLayerParams& p = model.layers[static_cast<size_t>(l)];
        const LayerCache& lc = cache.layers[static_cast<size_t>(l)];
        const int base = ParamIndex::layer_base(l);
        Mat& d_wq = grads.g[static_cast<size_t>(base + 0)];
        Mat& d_bq = grads.g[static_cast<size_t>(base + 1)];
        Mat& d_wk = grads.g[static_cast<size_t>(base + 2)];
        Mat& d_bk = grads.g[static_cast<size_t>(base + 3)];
        Mat& d_wv = grads.g[static_cast<size_t>(base + 4)];
        Mat& d_bv = grads.g[static_cast<size_t>(base + 5)];
        Mat& d_wo = grads.g[static_cast<size_t>(base + 6)];
        Mat& d_bo = grads.g[static_cast<size_t>(base + 7)];
        Mat& d_ln1_gamma = grads.g[static_cast<size_t>(base + 8)];
        Mat& d_ln1_beta = grads.g[static_cast<size_t>(base + 9)];
        Mat& d_wf1 = grads.g[static_cast<size_t>(base + 10)];
        Mat& d_bf1 = grads.g[static_cast<size_t>(base + 11)];
        Mat& d_wf2 = grads.g[static_cast<size_t>(base + 12)];
        Mat& d_bf2 = grads.g[static_cast<size_t>(base + 13)];
        Mat& d_ln2_gamma = grads.g[static_cast<size_t>(base + 14)];
        Mat& d_ln2_beta = grads.g[static_cast<size_t>(base + 15)];

        // LN2 <- dx
        Mat d_res2;
        layer_norm_backward(dx, lc.ln2_norm, lc.ln2_rstd, p.ln2_gamma, d_res2, d_ln2_gamma, d_ln2_beta);

        // res2 = x_mid + ff_out
        Mat d_x_mid = d_res2;
        const Mat& d_ff_out = d_res2;

        // ff_out = gelu(x_mid wf1 + bf1) wf2 + bf2
        Mat d_ff_act;
        matmul_nt(d_ff_out, p.wf2, d_ff_act);
        matmul_tn(lc.ff_act, d_ff_out, d_wf2, true);
        accumulate_bias_grad(d_ff_out, d_bf2);
        Mat d_ff_pre(e_count, cfg.d_ff);
        for (size_t i = 0; i < d_ff_pre.a.size(); ++i)
            d_ff_pre.a[i] = d_ff_act.a[i] * gelu_grad(lc.ff_pre.a[i]);
        Mat d_from_ff;
        matmul_nt(d_ff_pre, p.wf1, d_from_ff);
        matmul_tn(lc.x_mid, d_ff_pre, d_wf1, true);
        accumulate_bias_grad(d_ff_pre, d_bf1);
        for (size_t i = 0; i < d_x_mid.a.size(); ++i) d_x_mid.a[i] += d_from_ff.a[i];

        // LN1 <- d_x_mid
        Mat d_res1;
        layer_norm_backward(d_x_mid, lc.ln1_norm, lc.ln1_rstd, p.ln1_gamma, d_res1, d_ln1_gamma,
                            d_ln1_beta);

        // res1 = x_in + attn_out
        Mat d_x_in = d_res1;
        const Mat& d_attn_out = d_res1;

        // attn_out = heads_concat wo + bo
        Mat d_heads;
        matmul_nt(d_attn_out, p.wo, d_heads);
        matmul_tn(lc.heads_concat, d_attn_out, d_wo, true);
        accumulate_bias_grad(d_attn_out, d_bo);

        Mat d_q(e_count, d), d_k(e_count, d), d_v(e_count, d);
        for (int h = 0; h < heads; ++h) {
            const Mat& a = lc.attn[static_cast<size_t>(h)];
            const int off = h * dk;
            // d_v_h = a^T d_ctx ; d_a = d_ctx v_h^T
            Mat d_a(e_count, e_count);
            for (int i = 0; i < e_count; ++i) {
                for (int j = 0; j < e_count; ++j) {
                    double s = 0.0;
                    for (int m = 0; m < dk; ++m) s += d_heads(i, off + m) * lc.v(j, off + m);
                    d_a(i, j) = s;
                }
                for (int m = 0; m < dk; ++m) {
                    double s = 0.0;
                    for (int j = 0; j < e_count; ++j) s += a(j, i) * d_heads(j, off + m);
                    d_v(i, off + m) = s;
                }
            }
            // softmax backward rows: dS = a o (d_a - rowsum(d_a o a))
            for (int i = 0; i < e_count; ++i) {
                double dot = 0.0;
                for (int j = 0; j < e_count; ++j) dot += d_a(i, j) * a(i, j);
                for (int j = 0; j < e_count; ++j) d_a(i, j) = a(i, j) * (d_a(i, j) - dot);
            }
            // dq_h = dS k_h / sqrt(dk); dk_h = dS^T q_h / sqrt(dk)
            for (int i = 0; i < e_count; ++i) {
                for (int m = 0; m < dk; ++m) {
                    double sq = 0.0, sk = 0.0;
                    for (int j = 0; j < e_count; ++j) {
                        sq += d_a(i, j) * lc.k(j, off + m);
                        sk += d_a(j, i) * lc.q(j, off + m);
                    }
                    d_q(i, off + m) = sq * inv_sqrt_dk;
                    d_k(i, off + m) = sk * inv_sqrt_dk;
                }
            }
        }

        matmul_tn(lc.x_in, d_q, d_wq, true);
        accumulate_bias_grad(d_q, d_bq);
        matmul_tn(lc.x_in, d_k, d_wk, true);
        accumulate_bias_grad(d_k, d_bk);
        matmul_tn(lc.x_in, d_v, d_wv, true);
        accumulate_bias_grad(d_v, d_bv);

        Mat d_from_qkv;
        matmul_nt(d_q, p.wq, d_from_qkv);
        matmul_nt(d_k, p.wk, d_from_qkv, true);
        matmul_nt(d_v, p.wv, d_from_qkv, true);
        for (size_t i = 0; i < d_x_in.a.size(); ++i) d_x_in.a[i] += d_from_qkv.a[i];

        dx = std::move(d_x_in);
    }

    // embeddings
    Mat& d_token = grads.g[ParamIndex::token_table];
    Mat& d_pos = grads.g[ParamIndex::position_table];
    Mat& d_scales = grads.g[ParamIndex::scales];
    for (int e = 0; e < e_count; ++e) {
        const Element& el = seq.elements[static_cast<size_t>(e)];
        const int kind = static_cast<int>(el.kind);
        const double s_pcf = model.scale(el.kind, EmbeddingType::pcf);
        const double s_tok = model.scale(el.kind, EmbeddingType::token);
        const double s_pos = model.scale(el.kind, EmbeddingType::position);

        double dot_pcf = 0.0, dot_tok = 0.0, dot_pos = 0.0;
        for (int j = 0; j < d; ++j) {
            const double g = dx(e, j);
            dot_pcf += g * cache.pcf(e, j);
            dot_tok += g * model.token_table(el.token_id, j);
            dot_pos += g * model.position_table(el.position_id, j);
            d_token(el.token_id, j) += s_tok * g;
            d_pos(el.position_id, j) += s_pos * g;
        }
        d_scales(kind, 0) += dot_pcf;
        d_scales(kind, 1) += dot_tok;
        d_scales(kind, 2) += dot_pos;

        // pcf = input W_route + b_route
        const int wi = proj_w_index(el.route);
        Mat& d_proj_w = grads.g[static_cast<size_t>(wi)];
        Mat& d_proj_b = grads.g[static_cast<size_t>(wi + 1)];
        const auto& input = projection_input(el);
        for (int j = 0; j < d; ++j) {
            const double g = s_pcf * dx(e, j);
            d_proj_b(0, j) += g;
            for (size_t i = 0; i < input.size(); ++i) d_proj_w(static_cast<int>(i), j) += input[i] * g;
        }
    }
}

}  // namespace scanqa
