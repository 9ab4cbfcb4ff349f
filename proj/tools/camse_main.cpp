// Command-line front end: corpus indexing, synthetic data generation,
// training, evaluation, single-question answering, and attention/score
// dumps for inspection.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "camse/checkpoint.hpp"
#include "camse/errors.hpp"
#include "camse/qa.hpp"
#include "camse/retrieval.hpp"
#include "camse/runconfig.hpp"
#include "camse/synth.hpp"

namespace {

using camse::QaInstance;
using camse::QaModel;
using camse::RunConfig;
using nlohmann::json;

struct GlobalFlags {
    std::string config_path;
    long long seed = -1;  // -1: keep the config's seed
    int threads = 1;
    bool f64 = false;
};

std::vector<camse::TokenSequence> read_corpus_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw camse::IoError("cannot open corpus file: " + path);
    std::vector<camse::TokenSequence> docs;
    camse::Vocabulary dummy;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::vector<std::string> toks = camse::split_tokens(line);
        if (toks.empty()) {
            throw camse::ParseError(path + ":" + std::to_string(line_no) + ": empty document");
        }
        camse::TokenSequence seq;
        seq.raw = std::move(toks);
        seq.ids.assign(seq.raw.size(), camse::kOovId);
        docs.push_back(std::move(seq));
    }
    return docs;
}

int cmd_index(const std::string& corpus_path, const std::string& out_path) {
    camse::InvertedIndex index = camse::InvertedIndex::build(read_corpus_lines(corpus_path));
    index.save(out_path);
    std::cout << "indexed " << index.doc_count() << " documents (avg length "
              << index.avg_doc_len() << ") -> " << out_path << "\n";
    return 0;
}

int cmd_synth(const std::string& kind, const camse::SynthConfig& cfg, const std::string& out_dir) {
    camse::SynthCorpus corpus;
    if (kind == "entity") {
        corpus = camse::gen_entity_corpus(cfg);
    } else if (kind == "association") {
        corpus = camse::gen_association_corpus(cfg);
    } else {
        throw camse::ConfigError("synth kind must be 'entity' or 'association', got '" + kind + "'");
    }
    camse::write_corpus(corpus, cfg, kind, out_dir);
    std::cout << "wrote " << corpus.train.size() << " train / " << corpus.test.size()
              << " test instances to " << out_dir << "\n";
    return 0;
}

// Loads embeddings from the config path, or random-initializes a table over
// the training vocabulary and persists it next to the checkpoint so later
// commands can rebuild the identical model.
camse::LoadedEmbeddings prepare_embeddings(RunConfig& cfg) {
    if (!cfg.paths.embeddings.empty()) {
        camse::LoadedEmbeddings emb = camse::load_embeddings(cfg.paths.embeddings);
        if (emb.table.dim() != cfg.model.camse.embed_dim) {
            throw camse::ConfigError("embedding file width " + std::to_string(emb.table.dim()) +
                                     " does not match model embedding_dim " +
                                     std::to_string(cfg.model.camse.embed_dim));
        }
        return emb;
    }
    // Vocabulary from the training corpus, sorted for determinism.
    std::ifstream in(cfg.paths.train_data);
    if (!in) throw camse::IoError("cannot open dataset file: " + cfg.paths.train_data);
    std::vector<std::string> tokens;
    {
        std::string line;
        camse::Vocabulary probe;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json rec = json::parse(line, nullptr, false);
            if (rec.is_discarded()) continue;  // load_dataset reports malformed lines later
            auto collect = [&tokens](const std::string& text) {
                for (std::string& t : camse::split_tokens(text)) tokens.push_back(std::move(t));
            };
            if (rec.contains("question")) collect(rec["question"].get<std::string>());
            if (rec.contains("choices")) {
                for (const auto& c : rec["choices"]) collect(c.get<std::string>());
            }
            if (rec.contains("evidence")) {
                for (const auto& docs : rec["evidence"]) {
                    for (const auto& d : docs) collect(d.get<std::string>());
                }
            }
        }
    }
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    camse::LoadedEmbeddings emb;
    emb.vocab = camse::Vocabulary::from_tokens(tokens);
    emb.table = camse::random_embeddings(emb.vocab, cfg.model.camse.embed_dim, cfg.train.seed);
    const std::string path = cfg.paths.checkpoint + ".embeddings.txt";
    camse::save_embeddings(path, emb.vocab, emb.table);
    cfg.paths.embeddings = path;
    std::cout << "random-initialized " << emb.vocab.size() - 1 << " embeddings -> " << path << "\n";
    return emb;
}

int cmd_train(const GlobalFlags& flags) {
    if (flags.config_path.empty()) {
        throw camse::ConfigError("train requires --config with paths.train_data set");
    }
    RunConfig cfg = RunConfig::load(flags.config_path);
    if (flags.seed >= 0) cfg.train.seed = static_cast<std::uint64_t>(flags.seed);
    if (flags.f64) cfg.checkpoint_dtype = camse::CheckpointDtype::f64;
    if (cfg.paths.train_data.empty()) throw camse::ConfigError("config: paths.train_data is empty");

    camse::LoadedEmbeddings emb = prepare_embeddings(cfg);
    std::vector<QaInstance> train_set = camse::load_dataset(cfg.paths.train_data, emb.vocab);
    std::vector<QaInstance> test_set;
    if (!cfg.paths.test_data.empty()) {
        test_set = camse::load_dataset(cfg.paths.test_data, emb.vocab);
        // Drop training questions that nearly duplicate test questions.
        std::vector<std::string> train_q, test_q;
        for (const QaInstance& i : train_set) train_q.push_back(i.question.joined());
        for (const QaInstance& i : test_set) test_q.push_back(i.question.joined());
        const std::vector<bool> keep = camse::dedup_keep_mask(train_q, test_q, 0.8);
        std::vector<QaInstance> filtered;
        for (std::size_t i = 0; i < train_set.size(); ++i) {
            if (keep[i]) filtered.push_back(std::move(train_set[i]));
        }
        const std::size_t dropped = train_set.size() - filtered.size();
        train_set = std::move(filtered);
        if (dropped > 0) {
            std::cout << "dedup dropped " << dropped << " training instances\n";
        }
    }

    std::vector<QaInstance> dev_set;
    if (!cfg.paths.dev_data.empty()) {
        dev_set = camse::load_dataset(cfg.paths.dev_data, emb.vocab);
    } else if (cfg.dev_fraction > 0.0) {
        camse::Rng rng(camse::Rng::derive(cfg.train.seed, "dev-split"));
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        rng.shuffle(order);
        const std::size_t n_dev = std::max<std::size_t>(
            1, static_cast<std::size_t>(cfg.dev_fraction * static_cast<double>(train_set.size())));
        std::vector<QaInstance> rest;
        for (std::size_t i = 0; i < order.size(); ++i) {
            if (i < n_dev) {
                dev_set.push_back(std::move(train_set[order[i]]));
            } else {
                rest.push_back(std::move(train_set[order[i]]));
            }
        }
        train_set = std::move(rest);
    }

    QaModel model = QaModel::create(cfg.model, emb.vocab, emb.table, cfg.train.seed);
    std::cout << "training on " << train_set.size() << " instances (" << dev_set.size()
              << " dev), " << model.params.total_values() << " weights\n";

    std::ofstream metrics(cfg.paths.metrics_log);
    if (!metrics) throw camse::IoError("cannot write metrics log: " + cfg.paths.metrics_log);
    camse::TrainResult result =
        camse::train(train_set, dev_set, cfg.train, model, [&](const camse::EpochMetrics& m) {
            json rec;
            rec["epoch"] = m.epoch;
            rec["train_loss"] = m.train_loss;
            rec["dev_accuracy"] = m.dev_accuracy;
            rec["lr"] = m.lr;
            metrics << rec.dump() << '\n';
            std::cout << "epoch " << m.epoch << ": loss " << m.train_loss << ", dev acc "
                      << m.dev_accuracy << ", lr " << m.lr << "\n";
        });
    metrics.close();

    camse::save_checkpoint(cfg.paths.checkpoint, cfg.to_json().dump(), model.params,
                           cfg.checkpoint_dtype);
    std::cout << "best epoch " << result.best_epoch << " (dev acc " << result.best_dev_accuracy
              << ") -> " << cfg.paths.checkpoint << "\n";
    if (!test_set.empty()) {
        std::cout << "test accuracy " << camse::evaluate(test_set, model, cfg.train.limits)
                  << "\n";
    }
    return 0;
}

struct LoadedModel {
    RunConfig cfg;
    QaModel model;
    camse::EmbeddingTable table;  // kept for the word-level baseline
};

LoadedModel load_model(const std::string& ckpt_path, const std::string& embeddings_override) {
    camse::Checkpoint ckpt = camse::load_checkpoint(ckpt_path);
    json snapshot;
    try {
        snapshot = json::parse(ckpt.config_json);
    } catch (const json::exception& e) {
        throw camse::ParseError(ckpt_path + ": embedded config is invalid: " + std::string(e.what()));
    }
    LoadedModel lm{RunConfig::from_json(snapshot), QaModel(), {}};
    const std::string emb_path =
        embeddings_override.empty() ? lm.cfg.paths.embeddings : embeddings_override;
    if (emb_path.empty()) {
        throw camse::ConfigError(ckpt_path + ": checkpoint config names no embedding file; pass --embeddings");
    }
    camse::LoadedEmbeddings emb = camse::load_embeddings(emb_path);
    lm.table = emb.table;
    lm.model = QaModel::create(lm.cfg.model, std::move(emb.vocab), std::move(emb.table),
                               lm.cfg.train.seed);
    camse::apply_checkpoint(ckpt, lm.model.params);
    return lm;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             const std::string& report_path, const std::string& embeddings_override, int threads) {
    LoadedModel lm = load_model(ckpt_path, embeddings_override);
    std::vector<QaInstance> data = camse::load_dataset(data_path, lm.model.vocab);
    if (data.empty()) throw camse::ParseError(data_path + ": dataset is empty");
    json instances = json::array();
    std::size_t correct = 0;
    for (const QaInstance& inst : data) {
        if (!inst.has_answer()) {
            throw camse::ParseError(data_path + ": instance " + inst.id + " has no gold answer");
        }
    }
    std::vector<int> preds(data.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < data.size(); ++i) {
            preds[i] = camse::predict(data[i], lm.model, lm.cfg.train.limits);
        }
    } else {
        // evaluate() below recomputes the accuracy; here we need per-instance
        // predictions, collected in instance order.
        std::vector<std::thread> pool;
        const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(threads), data.size());
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < data.size(); i += n_threads) {
                    preds[i] = camse::predict(data[i], lm.model, lm.cfg.train.limits);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (preds[i] == data[i].answer) ++correct;
        json rec;
        rec["id"] = data[i].id;
        rec["predicted"] = preds[i];
        rec["gold"] = data[i].answer;
        instances.push_back(std::move(rec));
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    json report;
    report["accuracy"] = accuracy;
    report["instances"] = std::move(instances);
    std::ofstream out(report_path);
    if (!out) throw camse::IoError("cannot write report: " + report_path);
    out << report.dump(2) << '\n';
    std::cout << "accuracy " << accuracy << "\n";
    return 0;
}

int cmd_answer(const std::string& ckpt_path, const std::string& instance_path,
               const std::string& embeddings_override) {
    LoadedModel lm = load_model(ckpt_path, embeddings_override);
    std::vector<QaInstance> data = camse::load_dataset(instance_path, lm.model.vocab);
    if (data.empty()) throw camse::ParseError(instance_path + ": no instance record found");
    json out = json::array();
    for (const QaInstance& inst : data) {
        camse::Exec ex;
        std::vector<camse::Var> score_vars =
            camse::candidate_scores(ex, inst, lm.model, lm.cfg.train.limits);
        std::vector<double> scores;
        for (const camse::Var& v : score_vars) scores.push_back(v.value().item());
        int best = 0;
        for (std::size_t i = 1; i < scores.size(); ++i) {
            if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
        }
        json rec;
        rec["id"] = inst.id;
        rec["predicted"] = best;
        rec["choice"] = inst.choices[static_cast<std::size_t>(best)].joined();
        rec["scores"] = scores;
        out.push_back(std::move(rec));
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

void write_heatmap(const std::string& prefix, std::size_t scale_no,
                   const std::vector<std::string>& tokens, const camse::Tensor& attention) {
    const std::size_t n = attention.rows(), r = attention.cols();
    const std::string base = prefix + "_scale" + std::to_string(scale_no);
    {
        std::ofstream csv(base + ".csv");
        if (!csv) throw camse::IoError("cannot write " + base + ".csv");
        csv << "token";
        for (std::size_t j = 0; j < r; ++j) csv << ",s" << (j + 1);
        csv << '\n';
        csv.precision(17);
        for (std::size_t i = 0; i < n; ++i) {
            csv << tokens[i];
            for (std::size_t j = 0; j < r; ++j) csv << ',' << attention.at(i, j);
            csv << '\n';
        }
    }
    // White-to-red cells, brightest at the column's peak weight.
    std::vector<double> col_max(r, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < r; ++j) col_max[j] = std::max(col_max[j], attention.at(i, j));
    }
    const int cell = 16;
    std::ofstream ppm(base + ".ppm");
    if (!ppm) throw camse::IoError("cannot write " + base + ".ppm");
    ppm << "P3\n" << r * cell << ' ' << n * cell << "\n255\n";
    for (std::size_t i = 0; i < n; ++i) {
        for (int py = 0; py < cell; ++py) {
            for (std::size_t j = 0; j < r; ++j) {
                const double v = col_max[j] > 0.0 ? attention.at(i, j) / col_max[j] : 0.0;
                const int fade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
                for (int px = 0; px < cell; ++px) ppm << "255 " << fade << ' ' << fade << ' ';
            }
            ppm << '\n';
        }
    }
}

int cmd_dump_attention(const std::string& ckpt_path, const std::string& text,
                       const std::string& out_path, const std::string& heatmap_prefix,
                       const std::string& embeddings_override) {
    LoadedModel lm = load_model(ckpt_path, embeddings_override);
    camse::TokenSequence seq = camse::tokenize(text, lm.model.vocab);
    seq = camse::truncate(seq, lm.cfg.train.limits.max_statement_tokens, lm.cfg.model.camse.scales);
    camse::Exec ex;
    camse::EmbeddingTensor enc =
        camse::encode(ex, seq, lm.model.embedding, lm.model.encoder, lm.cfg.model.camse);
    json dump;
    dump["tokens"] = seq.raw;
    json scales = json::array();
    for (std::size_t i = 0; i < enc.attention.size(); ++i) {
        const camse::Tensor& a = enc.attention[i].value();
        json rec;
        rec["scale"] = i + 1;
        std::vector<std::string> window_tokens;
        for (std::size_t t = 0; t + i < seq.raw.size(); ++t) {
            std::string w = seq.raw[t];
            for (std::size_t k = 1; k <= i; ++k) w += "_" + seq.raw[t + k];
            window_tokens.push_back(std::move(w));
        }
        rec["tokens"] = window_tokens;
        json weights = json::array();
        for (std::size_t t = 0; t < a.rows(); ++t) {
            json row = json::array();
            for (std::size_t j = 0; j < a.cols(); ++j) row.push_back(a.at(t, j));
            weights.push_back(std::move(row));
        }
        rec["weights"] = std::move(weights);
        scales.push_back(std::move(rec));
        if (!heatmap_prefix.empty()) write_heatmap(heatmap_prefix, i + 1, window_tokens, a);
    }
    dump["scales"] = std::move(scales);
    const std::string text_out = dump.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text_out;
    } else {
        std::ofstream out(out_path);
        if (!out) throw camse::IoError("cannot write " + out_path);
        out << text_out;
        std::cout << "wrote attention dump -> " << out_path << "\n";
    }
    return 0;
}

int cmd_dump_scores(const std::string& ckpt_path, const std::string& statement,
                    const std::string& document, const std::string& out_path,
                    const std::string& embeddings_override) {
    LoadedModel lm = load_model(ckpt_path, embeddings_override);
    const camse::ScoreLimits& limits = lm.cfg.train.limits;
    camse::TokenSequence stmt = camse::truncate(camse::tokenize(statement, lm.model.vocab),
                                                limits.max_statement_tokens,
                                                lm.cfg.model.camse.scales);
    camse::TokenSequence doc = camse::truncate(camse::tokenize(document, lm.model.vocab),
                                               limits.max_document_tokens,
                                               lm.cfg.model.camse.scales);
    camse::Exec ex;
    camse::EmbeddingTensor t1 =
        camse::encode(ex, stmt, lm.model.embedding, lm.model.encoder, lm.cfg.model.camse);
    camse::EmbeddingTensor t2 =
        camse::encode(ex, doc, lm.model.embedding, lm.model.encoder, lm.cfg.model.camse);
    camse::ScorePack pack;
    camse::score_pair(nullptr, t1, t2, lm.model.scoring, lm.cfg.model.scoring(), &pack);

    json dump;
    dump["score"] = pack.score;
    dump["zero_norm_pairs"] = pack.zero_norm_pairs;
    json scales = json::array();
    for (std::size_t i = 0; i < pack.scales.size(); ++i) {
        const camse::ScorePack::Scale& ps = pack.scales[i];
        const std::size_t r = ps.gate.rows();
        json rec;
        rec["scale"] = i + 1;
        rec["o_sms"] = ps.o_sms;
        rec["o_sas"] = ps.o_sas;
        // SMS on the diagonal, SAS off it.
        json combined = json::array();
        for (std::size_t u = 0; u < r; ++u) {
            json row = json::array();
            for (std::size_t v = 0; v < r; ++v) {
                row.push_back(u == v ? ps.sms_diag[u] : ps.sas.at(u, v));
            }
            combined.push_back(std::move(row));
        }
        rec["combined"] = std::move(combined);
        json gate_rows = json::array();
        for (std::size_t u = 0; u < r; ++u) {
            json row = json::array();
            for (std::size_t v = 0; v < r; ++v) row.push_back(ps.gate.at(u, v));
            gate_rows.push_back(std::move(row));
        }
        rec["gate"] = std::move(gate_rows);
        scales.push_back(std::move(rec));
    }
    dump["scales"] = std::move(scales);
    const std::string text_out = dump.dump(2) + "\n";
    if (out_path.empty()) {
        std::cout << text_out;
    } else {
        std::ofstream out(out_path);
        if (!out) throw camse::IoError("cannot write " + out_path);
        out << text_out;
        std::cout << "wrote score dump -> " << out_path << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAMSE sentence-embedding question answering engine"};
    app.require_subcommand(1);
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "run configuration file (JSON)");
    app.add_option("--seed", flags.seed, "override the configured RNG seed");
    app.add_option("--threads", flags.threads, "worker threads for evaluation");
    app.add_flag("--f64", flags.f64, "store checkpoints in full f64 precision");

    auto* index_cmd = app.add_subcommand("index", "build a BM25 inverted index");
    std::string corpus_path, out_path;
    index_cmd->add_option("--corpus", corpus_path, "one pre-tokenized document per line")
        ->required();
    index_cmd->add_option("--out", out_path, "index output file")->required();

    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
    std::string synth_kind = "entity", synth_out;
    camse::SynthConfig synth_cfg;
    synth_cmd->add_option("--kind", synth_kind, "entity or association");
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--vocab", synth_cfg.vocab_size, "token budget");
    synth_cmd->add_option("--diseases", synth_cfg.diseases, "number of diseases");
    synth_cmd->add_option("--entity-len", synth_cfg.entity_len, "tokens per entity");
    synth_cmd->add_option("--question-len", synth_cfg.question_len, "question length");
    synth_cmd->add_option("--doc-len", synth_cfg.doc_len, "evidence document length");
    synth_cmd->add_option("--docs-per-choice", synth_cfg.docs_per_choice, "evidence per choice");
    synth_cmd->add_option("--choices", synth_cfg.n_choices, "candidate choices per question");
    synth_cmd->add_option("--train-size", synth_cfg.train_size, "training instances");
    synth_cmd->add_option("--test-size", synth_cfg.test_size, "test instances");
    synth_cmd->add_option("--embed-dim", synth_cfg.embed_dim, "embedding width");
    synth_cmd->add_option("--noise-tokens", synth_cfg.noise_tokens_per_side,
                          "noise tokens per side (0 = full remaining budget)");

    auto* train_cmd = app.add_subcommand("train", "train a model from --config");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string ckpt_path, data_path, report_path = "eval-report.json", embeddings_override;
    eval_cmd->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    eval_cmd->add_option("--data", data_path, "dataset file")->required();
    eval_cmd->add_option("--report", report_path, "structured report output");
    eval_cmd->add_option("--embeddings", embeddings_override, "override embedding file path");

    auto* answer_cmd = app.add_subcommand("answer", "answer instances from a file");
    std::string answer_ckpt, answer_instance, answer_embeddings;
    answer_cmd->add_option("--checkpoint", answer_ckpt, "checkpoint file")->required();
    answer_cmd->add_option("--instance", answer_instance, "dataset file with the instances")
        ->required();
    answer_cmd->add_option("--embeddings", answer_embeddings, "override embedding file path");

    auto* attn_cmd = app.add_subcommand("dump-attention", "per-scale attention weights for a text");
    std::string attn_ckpt, attn_text, attn_out, attn_heatmap, attn_embeddings;
    attn_cmd->add_option("--checkpoint", attn_ckpt, "checkpoint file")->required();
    attn_cmd->add_option("--text", attn_text, "pre-tokenized input text")->required();
    attn_cmd->add_option("--out", attn_out, "JSON output file (stdout when omitted)");
    attn_cmd->add_option("--heatmap", attn_heatmap, "prefix for per-scale CSV/PPM heatmaps");
    attn_cmd->add_option("--embeddings", attn_embeddings, "override embedding file path");

    auto* scores_cmd = app.add_subcommand("dump-scores", "SMS/SAS matrix for a sentence pair");
    std::string sc_ckpt, sc_statement, sc_document, sc_out, sc_embeddings;
    scores_cmd->add_option("--checkpoint", sc_ckpt, "checkpoint file")->required();
    scores_cmd->add_option("--statement", sc_statement, "statement text")->required();
    scores_cmd->add_option("--document", sc_document, "document text")->required();
    scores_cmd->add_option("--out", sc_out, "JSON output file (stdout when omitted)");
    scores_cmd->add_option("--embeddings", sc_embeddings, "override embedding file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (index_cmd->parsed()) return cmd_index(corpus_path, out_path);
        if (synth_cmd->parsed()) {
            if (flags.seed >= 0) synth_cfg.seed = static_cast<std::uint64_t>(flags.seed);
            return cmd_synth(synth_kind, synth_cfg, synth_out);
        }
        if (train_cmd->parsed()) return cmd_train(flags);
        if (eval_cmd->parsed()) {
            return cmd_eval(ckpt_path, data_path, report_path, embeddings_override, flags.threads);
        }
        if (answer_cmd->parsed()) return cmd_answer(answer_ckpt, answer_instance, answer_embeddings);
        if (attn_cmd->parsed()) {
            return cmd_dump_attention(attn_ckpt, attn_text, attn_out, attn_heatmap, attn_embeddings);
        }
        if (scores_cmd->parsed()) {
            return cmd_dump_scores(sc_ckpt, sc_statement, sc_document, sc_out, sc_embeddings);
        }
    } catch (const camse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const camse::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const camse::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
