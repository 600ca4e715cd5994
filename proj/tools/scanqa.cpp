#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "scanqa/config.hpp"
#include "scanqa/filters.hpp"
#include "scanqa/ply_io.hpp"
#include "scanqa/synthetic.hpp"
#include "scanqa/trainer.hpp"

namespace fs = std::filesystem;
using namespace scanqa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

Scene load_scene_with_sidecar(const std::string& ply_path) {
    Scene scene = load_ply(ply_path);
    const std::string sidecar = instances_sidecar_path(ply_path);
    if (fs::exists(sidecar)) {
        scene.instances = load_instances(sidecar);
        validate_scene(scene);
    }
    return scene;
}

SceneMap load_scene_dir(const std::string& dir, const std::vector<QARecord>& records) {
    SceneMap scenes;
    for (const QARecord& r : records) {
        if (scenes.count(r.scene_id)) continue;
        const std::string path = (fs::path(dir) / (r.scene_id + ".ply")).string();
        scenes.emplace(r.scene_id, load_scene_with_sidecar(path));
    }
    return scenes;
}

std::vector<std::string> lexicon_or_default(const std::string& path,
                                            const std::vector<std::string>& fallback) {
    return path.empty() ? fallback : load_lexicon(path);
}

struct ModelOptions {
    std::string config_path;
    long d_h = 64, layers = 4, heads = 4, d_ff = 128;
    long f_g = 64, f_a = 64, pe_d_model = 16;
    double pe_base = 1000.0;
    long encoder_hidden = 64;
    double encoder_weight_std = 1.2;
    long max_k = 32;
    std::string proposal_mode = "gt";
    double radius = 0.3, iou = 0.25;
    long max_positions = 64;
    long token_vocab_max = 4096;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "key = value config file (flags override)");
        cmd->add_option("--d-h", d_h, "hidden width");
        cmd->add_option("--layers", layers, "encoder layers");
        cmd->add_option("--heads", heads, "attention heads");
        cmd->add_option("--d-ff", d_ff, "feed-forward width");
        cmd->add_option("--f-g", f_g, "geometry feature width");
        cmd->add_option("--f-a", f_a, "appearance feature width");
        cmd->add_option("--pe-d-model", pe_d_model, "spatial encoding dimension per component");
        cmd->add_option("--pe-base", pe_base, "spatial encoding base");
        cmd->add_option("--max-k", max_k, "max proposals per scene");
        cmd->add_option("--proposal-mode", proposal_mode, "gt or heur");
        cmd->add_option("--radius", radius, "heuristic grouping radius (m)");
        cmd->add_option("--iou", iou, "proposal nms threshold");
        cmd->add_option("--token-vocab-max", token_vocab_max, "token vocabulary cap");
    }

    // config file fills anything the flags did not set
    void merge_config(const CLI::App* cmd) {
        if (config_path.empty()) return;
        const KvConfig kv = KvConfig::parse_file(config_path);
        auto take_long = [&](const char* flag, const char* key, long& slot) {
            if (cmd->count(flag) == 0) slot = kv.get_long(key, slot);
        };
        auto take_double = [&](const char* flag, const char* key, double& slot) {
            if (cmd->count(flag) == 0) slot = kv.get_double(key, slot);
        };
        take_long("--d-h", "d_h", d_h);
        take_long("--layers", "layers", layers);
        take_long("--heads", "heads", heads);
        take_long("--d-ff", "d_ff", d_ff);
        take_long("--f-g", "f_g", f_g);
        take_long("--f-a", "f_a", f_a);
        take_long("--pe-d-model", "pe_d_model", pe_d_model);
        take_double("--pe-base", "pe_base", pe_base);
        take_long("--max-k", "max_k", max_k);
        take_double("--radius", "radius", radius);
        take_double("--iou", "iou", iou);
        take_long("--token-vocab-max", "token_vocab_max", token_vocab_max);
        if (cmd->count("--proposal-mode") == 0) proposal_mode = kv.get("proposal_mode", proposal_mode);
        encoder_hidden = kv.get_long("encoder_hidden", encoder_hidden);
        encoder_weight_std = kv.get_double("encoder_weight_std", encoder_weight_std);
        max_positions = kv.get_long("max_positions", max_positions);
    }

    PipelineConfig pipeline_config() const {
        PipelineConfig pc;
        pc.fusion.d_h = static_cast<int>(d_h);
        pc.fusion.layers = static_cast<int>(layers);
        pc.fusion.heads = static_cast<int>(heads);
        pc.fusion.d_ff = static_cast<int>(d_ff);
        pc.fusion.f_g = static_cast<int>(f_g);
        pc.fusion.f_a = static_cast<int>(f_a);
        pc.fusion.pe_d_model = static_cast<int>(pe_d_model);
        pc.fusion.max_positions = static_cast<int>(max_positions);
        pc.pe_base = pe_base;
        pc.encoder_hidden = static_cast<int>(encoder_hidden);
        pc.encoder_weight_std = encoder_weight_std;
        pc.proposals.max_k = static_cast<int>(max_k);
        pc.proposals.mode = proposal_mode == "heur" ? ProposalMode::heuristic : ProposalMode::ground_truth;
        pc.proposals.grouping_radius = radius;
        pc.proposals.iou_threshold = iou;
        return pc;
    }

    void save_model_config(const std::string& path, Ablation ablation) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path);
        out << "d_h = " << d_h << "\nlayers = " << layers << "\nheads = " << heads
            << "\nd_ff = " << d_ff << "\nf_g = " << f_g << "\nf_a = " << f_a
            << "\npe_d_model = " << pe_d_model << "\npe_base = " << pe_base
            << "\nencoder_hidden = " << encoder_hidden
            << "\nencoder_weight_std = " << encoder_weight_std << "\nmax_positions = " << max_positions
            << "\nmax_k = " << max_k << "\nproposal_mode = " << proposal_mode
            << "\nradius = " << radius << "\niou = " << iou
            << "\nablation = " << ablation_name(ablation) << "\n";
    }

    static ModelOptions load_model_config(const std::string& path, Ablation& ablation) {
        const KvConfig kv = KvConfig::parse_file(path);
        ModelOptions opts;
        opts.d_h = kv.get_long("d_h", opts.d_h);
        opts.layers = kv.get_long("layers", opts.layers);
        opts.heads = kv.get_long("heads", opts.heads);
        opts.d_ff = kv.get_long("d_ff", opts.d_ff);
        opts.f_g = kv.get_long("f_g", opts.f_g);
        opts.f_a = kv.get_long("f_a", opts.f_a);
        opts.pe_d_model = kv.get_long("pe_d_model", opts.pe_d_model);
        opts.pe_base = kv.get_double("pe_base", opts.pe_base);
        opts.encoder_hidden = kv.get_long("encoder_hidden", opts.encoder_hidden);
        opts.encoder_weight_std = kv.get_double("encoder_weight_std", opts.encoder_weight_std);
        opts.max_positions = kv.get_long("max_positions", opts.max_positions);
        opts.max_k = kv.get_long("max_k", opts.max_k);
        opts.proposal_mode = kv.get("proposal_mode", opts.proposal_mode);
        opts.radius = kv.get_double("radius", opts.radius);
        opts.iou = kv.get_double("iou", opts.iou);
        ablation = ablation_from_name(kv.get("ablation", "full"));
        return opts;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

QARecord load_single_record(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path);
    std::string first_line;
    std::getline(in, first_line);
    if (first_line.empty()) throw ParseError(path + ": empty record file");
    // a single-object JSON file may span lines; fall back to whole-file parse
    try {
        return qa_record_from_json_text(first_line);
    } catch (const ParseError&) {
        std::ostringstream rest;
        rest << first_line << "\n" << in.rdbuf();
        return qa_record_from_json_text(rest.str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D question answering over colored point clouds"};
    app.require_subcommand(1);
    bool json_output = false;
    app.add_flag("--json", json_output, "machine-readable JSON to stdout");

    auto* ingest = app.add_subcommand("ingest", "load and validate a scene file");
    std::string ingest_path;
    bool ingest_validate = false;
    ingest->add_option("ply", ingest_path, "input PLY")->required();
    ingest->add_flag("--validate", ingest_validate, "re-check every scene invariant");

    auto* propose = app.add_subcommand("propose", "emit object proposals for a scene");
    std::string propose_path, propose_mode = "gt";
    long propose_max_k = 32;
    double propose_radius = 0.3, propose_iou = 0.25;
    propose->add_option("ply", propose_path, "input PLY")->required();
    propose->add_option("--mode", propose_mode, "gt or heur");
    propose->add_option("--max-k", propose_max_k, "max proposals");
    propose->add_option("--radius", propose_radius, "grouping radius (m)");
    propose->add_option("--iou", propose_iou, "nms threshold");

    auto* gen_color = app.add_subcommand("gen-color-qa", "color questions for an annotated scene");
    std::string gen_color_path, gen_color_out, gen_color_split = "train";
    gen_color->add_option("ply", gen_color_path, "input PLY (instances sidecar required)")->required();
    gen_color->add_option("--out", gen_color_out, "output JSONL")->required();
    gen_color->add_option("--split", gen_color_split, "split tag for the records");

    auto* gen_bench = app.add_subcommand("gen-bench", "generate a synthetic benchmark");
    long bench_scenes = 200;
    uint64_t bench_seed = 7;
    std::string bench_out = "bench";
    bool bench_color = false;
    gen_bench->add_option("--scenes", bench_scenes, "number of scenes");
    gen_bench->add_option("--seed", bench_seed, "generator seed");
    gen_bench->add_option("--out", bench_out, "output directory");
    gen_bench->add_flag("--color-qa", bench_color, "emit the color-question corpus instead");

    auto* build_tokens = app.add_subcommand("build-token-vocab", "subword vocabulary from questions");
    std::string bt_dataset, bt_out = "tokens.txt";
    long bt_max = 4096;
    build_tokens->add_option("dataset", bt_dataset, "QA JSONL")->required();
    build_tokens->add_option("--max-size", bt_max, "vocabulary cap");
    build_tokens->add_option("--out", bt_out, "output file");

    auto* build_answers = app.add_subcommand("build-vocab", "candidate answers from the train split");
    std::string ba_dataset, ba_out = "answers.txt";
    build_answers->add_option("dataset", ba_dataset, "QA JSONL")->required();
    build_answers->add_option("--out", ba_out, "output file");

    auto* check = app.add_subcommand("check-question", "run the easy-question checker");
    std::string check_q, check_objects_path, check_scenes_path;
    check->add_option("question", check_q, "question text")->required();
    check->add_option("--objects", check_objects_path, "known object classes, one per line");
    check->add_option("--scenes", check_scenes_path, "known scene classes, one per line");

    auto* classify = app.add_subcommand("classify", "question-type and answer-type classification");
    std::string classify_q, classify_record, classify_dataset;
    classify->add_option("--question", classify_q, "classify one question");
    classify->add_option("--record", classify_record, "JSON record for answer-type classification");
    classify->add_option("--dataset", classify_dataset, "JSONL to tabulate");

    auto* metric = app.add_subcommand("metric", "agreement score of an answer against a record");
    std::string metric_answer, metric_record;
    metric->add_option("--answer", metric_answer, "candidate answer")->required();
    metric->add_option("--record", metric_record, "JSON record file")->required();

    auto* train_cmd = app.add_subcommand("train", "train the fusion model");
    std::string train_dataset, train_scene_dir, train_out = "model";
    std::string train_ablation = "full";
    long train_epochs = 10, train_batch = 64, train_threads = 4, lr_period = 2000;
    uint64_t train_seed = 1;
    double lr_min = 1.0e-8, lr_max = 1.0e-4, weight_decay = 0.01;
    ModelOptions train_model;
    train_cmd->add_option("--dataset", train_dataset, "QA JSONL")->required();
    train_cmd->add_option("--scene-dir", train_scene_dir, "directory of <scene_id>.ply")->required();
    train_cmd->add_option("--out", train_out, "output directory");
    train_cmd->add_option("--ablation", train_ablation, "full|qonly|geo_q|app_q|no_spa|one_element");
    train_cmd->add_option("--epochs", train_epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_batch, "batch size");
    train_cmd->add_option("--threads", train_threads, "batch-parallel workers");
    train_cmd->add_option("--seed", train_seed, "run seed");
    train_cmd->add_option("--lr-min", lr_min, "cyclical lr floor");
    train_cmd->add_option("--lr-max", lr_max, "cyclical lr ceiling");
    train_cmd->add_option("--lr-period", lr_period, "cyclical lr period (steps)");
    train_cmd->add_option("--weight-decay", weight_decay, "decoupled weight decay");
    train_model.add_flags(train_cmd);

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    std::string eval_dataset, eval_scene_dir, eval_model_dir, eval_out;
    eval_cmd->add_option("--dataset", eval_dataset, "QA JSONL")->required();
    eval_cmd->add_option("--scene-dir", eval_scene_dir, "directory of <scene_id>.ply")->required();
    eval_cmd->add_option("--model", eval_model_dir, "train output directory")->required();
    eval_cmd->add_option("--out", eval_out, "write the report JSON here");

    auto* report_cmd = app.add_subcommand("report", "render a saved evaluation report");
    std::string report_path;
    report_cmd->add_option("eval", report_path, "eval JSON file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) {
            const Scene scene = load_scene_with_sidecar(ingest_path);
            if (ingest_validate) validate_scene(scene);
            if (json_output) {
                nlohmann::ordered_json j;
                j["scene_id"] = scene.scene_id;
                j["points"] = scene.point_count();
                j["extents"] = {scene.extents.X, scene.extents.Y, scene.extents.Z};
                j["origin"] = scene.extents.origin;
                j["instances"] = scene.instances.size();
                j["missing_colors"] = scene.missing_colors;
                std::cout << j.dump() << "\n";
            } else {
                std::cout << "scene " << scene.scene_id << ": " << scene.point_count()
                          << " points, extents " << scene.extents.X << " x " << scene.extents.Y << " x "
                          << scene.extents.Z << ", " << scene.instances.size() << " instances"
                          << (scene.missing_colors ? ", colors missing" : "") << "\n";
            }
        } else if (*propose) {
            const Scene scene = load_scene_with_sidecar(propose_path);
            ProposalConfig config;
            config.mode = propose_mode == "heur" ? ProposalMode::heuristic : ProposalMode::ground_truth;
            config.max_k = static_cast<int>(propose_max_k);
            config.grouping_radius = propose_radius;
            config.iou_threshold = propose_iou;
            for (const ObjectProposal& p : propose_objects(scene, config))
                std::cout << proposal_to_line(scene.scene_id, p) << "\n";
        } else if (*gen_color) {
            const Scene scene = load_scene_with_sidecar(gen_color_path);
            const auto records = make_color_qa_records(scene, split_from_name(gen_color_split));
            save_qa_jsonl(records, gen_color_out);
            std::cout << records.size() << " records -> " << gen_color_out << "\n";
        } else if (*gen_bench) {
            SyntheticSceneSpec spec;
            spec.seed = bench_seed;
            const SyntheticBenchmark bench =
                bench_color ? generate_color_benchmark(spec, static_cast<int>(bench_scenes))
                            : generate_synthetic_benchmark(spec, static_cast<int>(bench_scenes));
            const fs::path out_dir(bench_out);
            fs::create_directories(out_dir / "scenes");
            for (const SyntheticScene& s : bench.scenes) {
                const std::string ply = (out_dir / "scenes" / (s.scene.scene_id + ".ply")).string();
                export_ply(s.scene, ply);
                save_instances(s.scene.instances, instances_sidecar_path(ply));
            }
            save_qa_jsonl(bench.records, (out_dir / "qa.jsonl").string());
            std::cout << bench.scenes.size() << " scenes, " << bench.records.size() << " questions -> "
                      << bench_out << "\n";
        } else if (*build_tokens) {
            const auto records = load_qa_jsonl(bt_dataset);
            std::vector<std::string> corpus;
            for (const QARecord& r : records) corpus.push_back(r.question);
            const auto vocab = build_vocabulary(corpus, static_cast<int>(bt_max));
            save_vocabulary(vocab, bt_out);
            std::cout << vocab.size() << " tokens -> " << bt_out << "\n";
        } else if (*build_answers) {
            const auto records = load_qa_jsonl(ba_dataset);
            const auto vocab = build_answer_vocabulary(records);
            save_answer_vocabulary(vocab, ba_out);
            std::cout << vocab.size() << " answers -> " << ba_out << "\n";
        } else if (*check) {
            const auto objects = lexicon_or_default(check_objects_path, default_known_objects());
            const auto scenes = lexicon_or_default(check_scenes_path, default_known_scenes());
            const auto rejection = reject_easy_question(check_q, objects, scenes);
            if (json_output) {
                nlohmann::ordered_json j;
                j["question"] = check_q;
                j["rejected"] = rejection.has_value();
                j["pattern"] = rejection ? nlohmann::json(rejection_name(*rejection)) : nlohmann::json();
                std::cout << j.dump() << "\n";
            } else {
                std::cout << (rejection ? std::string("rejected: ") + rejection_name(*rejection)
                                        : std::string("accepted"))
                          << "\n";
            }
        } else if (*classify) {
            nlohmann::ordered_json j;
            if (!classify_q.empty()) {
                const auto qt = classify_question_type(classify_q, default_question_type_lexicon());
                j["question_type"] = qt ? nlohmann::json(question_type_name(*qt)) : nlohmann::json();
                if (!json_output)
                    std::cout << "question type: " << (qt ? question_type_name(*qt) : "none") << "\n";
            }
            if (!classify_record.empty()) {
                const QARecord r = load_single_record(classify_record);
                j["answer_type"] = answer_type_name(classify_answer_type(r));
                if (!json_output)
                    std::cout << "answer type: " << answer_type_name(classify_answer_type(r)) << "\n";
            }
            if (!classify_dataset.empty()) {
                std::map<std::string, long> question_counts, answer_counts;
                for (const QARecord& r : load_qa_jsonl(classify_dataset)) {
                    const auto qt = classify_question_type(r.question, default_question_type_lexicon());
                    ++question_counts[qt ? question_type_name(*qt) : "none"];
                    ++answer_counts[answer_type_name(classify_answer_type(r))];
                }
                j["question_type_counts"] = question_counts;
                j["answer_type_counts"] = answer_counts;
                if (!json_output) {
                    for (const auto& [name, count] : question_counts)
                        std::cout << "question " << name << ": " << count << "\n";
                    for (const auto& [name, count] : answer_counts)
                        std::cout << "answer " << name << ": " << count << "\n";
                }
            }
            if (json_output) std::cout << j.dump() << "\n";
        } else if (*metric) {
            const QARecord r = load_single_record(metric_record);
            const double score = accuracy(metric_answer, r);
            if (json_output) {
                nlohmann::ordered_json j;
                j["answer"] = metric_answer;
                j["accuracy"] = score;
                std::cout << j.dump() << "\n";
            } else {
                std::cout << score << "\n";
            }
        } else if (*train_cmd) {
            train_model.merge_config(train_cmd);
            const auto records = load_qa_jsonl(train_dataset);
            const SceneMap scenes = load_scene_dir(train_scene_dir, records);

            std::vector<std::string> corpus;
            for (const QARecord& r : records)
                if (r.split != Split::test) corpus.push_back(r.question);
            auto tokens = build_vocabulary(corpus, static_cast<int>(train_model.token_vocab_max));
            auto answers = build_answer_vocabulary(records);
            if (answers.size() == 0) throw ConfigError("train: empty answer vocabulary");

            Pipeline pipeline;
            pipeline.ablation = ablation_from_name(train_ablation);
            pipeline.init(train_model.pipeline_config(), std::move(tokens), std::move(answers),
                          train_seed);

            TrainConfig config;
            config.batch_size = static_cast<int>(train_batch);
            config.epochs = static_cast<int>(train_epochs);
            config.seed = train_seed;
            config.ablation = pipeline.ablation;
            config.threads = static_cast<int>(train_threads);
            config.lr.lr_min = lr_min;
            config.lr.lr_max = lr_max;
            config.lr.period = lr_period;
            config.adamw.weight_decay = weight_decay;

            const TrainResult result = train(pipeline, records, scenes, config);

            fs::create_directories(train_out);
            const fs::path out_dir(train_out);
            pipeline.save((out_dir / "checkpoint").string());
            save_vocabulary(pipeline.token_vocab, (out_dir / "tokens.txt").string());
            save_answer_vocabulary(pipeline.answer_vocab, (out_dir / "answers.txt").string());
            train_model.save_model_config((out_dir / "model.config").string(), pipeline.ablation);

            nlohmann::ordered_json j;
            j["loss_curve"] = result.loss_curve;
            j["steps"] = result.steps;
            j["examples"] = result.examples_used;
            write_text((out_dir / "loss.json").string(), j.dump(2) + "\n");
            if (json_output)
                std::cout << j.dump() << "\n";
            else
                std::cout << "trained " << result.steps << " steps over " << result.examples_used
                          << " examples; final loss " << result.loss_curve.back() << " -> " << train_out
                          << "\n";
        } else if (*eval_cmd) {
            const fs::path model_dir(eval_model_dir);
            Ablation ablation = Ablation::full;
            const ModelOptions opts =
                ModelOptions::load_model_config((model_dir / "model.config").string(), ablation);
            Pipeline pipeline;
            pipeline.ablation = ablation;
            pipeline.init(opts.pipeline_config(), load_vocabulary((model_dir / "tokens.txt").string()),
                          load_answer_vocabulary((model_dir / "answers.txt").string()), 1);
            pipeline.load((model_dir / "checkpoint").string());

            const auto records = load_qa_jsonl(eval_dataset);
            const SceneMap scenes = load_scene_dir(eval_scene_dir, records);
            const EvalReport report = evaluate(pipeline, records, scenes);
            if (!eval_out.empty()) write_text(eval_out, report.to_json() + "\n");
            std::cout << (json_output ? report.to_json() + "\n" : report.to_table());
        } else if (*report_cmd) {
            std::ifstream in(report_path, std::ios::binary);
            if (!in) throw IoError("cannot read " + report_path);
            std::ostringstream buf;
            buf << in.rdbuf();
            const EvalReport report = EvalReport::from_json(buf.str());
            std::cout << (json_output ? report.to_json() + "\n" : report.to_table());
        }
    } catch (const IoError& e) {
        std::cerr << "scanqa: " << e.what() << "\n";
        return kExitIo;
    } catch (const Error& e) {
        std::cerr << "scanqa: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitOk;
}
