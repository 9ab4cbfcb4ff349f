#include "camse/qa.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "camse/errors.hpp"

namespace camse {

using nlohmann::json;

std::vector<QaInstance> load_dataset(const std::string& path, const Vocabulary& vocab) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);
    std::vector<QaInstance> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = path + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": invalid record: " + e.what());
        }
        if (!rec.is_object()) throw ParseError(where + ": record is not an object");
        for (const auto& [key, _] : rec.items()) {
            if (key != "id" && key != "question" && key != "choices" && key != "evidence" &&
                key != "answer") {
                throw ParseError(where + ": unknown field '" + key + "'");
            }
        }
        QaInstance inst;
        try {
            inst.id = rec.at("id").get<std::string>();
            inst.question = tokenize(rec.at("question").get<std::string>(), vocab);
            for (const auto& c : rec.at("choices")) {
                inst.choices.push_back(tokenize(c.get<std::string>(), vocab));
            }
            for (const auto& docs : rec.at("evidence")) {
                std::vector<TokenSequence> list;
                for (const auto& d : docs) list.push_back(tokenize(d.get<std::string>(), vocab));
                inst.evidence.push_back(std::move(list));
            }
            if (rec.contains("answer")) inst.answer = rec.at("answer").get<int>();
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (inst.choices.size() < 2) {
            throw ParseError(where + ": need at least 2 choices, got " +
                             std::to_string(inst.choices.size()));
        }
        if (inst.evidence.size() != inst.choices.size()) {
            throw ParseError(where + ": evidence lists (" + std::to_string(inst.evidence.size()) +
                             ") do not match choices (" + std::to_string(inst.choices.size()) + ")");
        }
        if (inst.answer >= static_cast<int>(inst.choices.size())) {
            throw ParseError(where + ": answer index " + std::to_string(inst.answer) +
                             " out of range");
        }
        out.push_back(std::move(inst));
    }
    return out;
}

void save_dataset(const std::string& path, const std::vector<QaInstance>& instances) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    for (const QaInstance& inst : instances) {
        json rec;
        rec["id"] = inst.id;
        rec["question"] = inst.question.joined();
        json choices = json::array();
        for (const TokenSequence& c : inst.choices) choices.push_back(c.joined());
        rec["choices"] = std::move(choices);
        json evidence = json::array();
        for (const auto& docs : inst.evidence) {
            json list = json::array();
            for (const TokenSequence& d : docs) list.push_back(d.joined());
            evidence.push_back(std::move(list));
        }
        rec["evidence"] = std::move(evidence);
        if (inst.has_answer()) rec["answer"] = inst.answer;
        out << rec.dump() << '\n';
    }
    if (!out) throw IoError("failed writing dataset file: " + path);
}

ScoringConfig ModelConfig::scoring() const {
    ScoringConfig sc;
    sc.scales = camse.scales;
    sc.subspaces = camse.subspaces;
    sc.context_units = camse.context_units;
    sc.gate_hidden = gate_hidden;
    sc.sas_bias = sas_bias;
    sc.mode = score_mode;
    return sc;
}

QaModel QaModel::create(ModelConfig cfg, Vocabulary vocab, EmbeddingTable table,
                        std::uint64_t seed) {
    cfg.camse.validate();
    if (table.dim() != cfg.camse.embed_dim) {
        throw ConfigError("embedding table width " + std::to_string(table.dim()) +
                          " does not match configured embedding_dim " +
                          std::to_string(cfg.camse.embed_dim));
    }
    if (table.vocab_size() != vocab.size()) {
        throw ConfigError("embedding table rows " + std::to_string(table.vocab_size()) +
                          " do not match vocabulary size " + std::to_string(vocab.size()));
    }
    QaModel model;
    model.cfg = cfg;
    model.vocab = std::move(vocab);
    Rng rng(Rng::derive(seed, "model-init"));
    model.encoder = init_camse(model.params, cfg.camse, rng);
    model.scoring = init_scoring(model.params, cfg.scoring(), rng);
    if (cfg.fine_tune_embeddings) {
        model.embedding = model.params.add("embedding.table", std::move(table.vectors));
    } else {
        model.embedding = Var::constant(std::move(table.vectors));
    }
    return model;
}

TokenSequence make_statement(const QaInstance& inst, std::size_t choice, const ModelConfig& cfg,
                             const ScoreLimits& limits) {
    if (choice >= inst.choices.size()) {
        throw DimensionError("make_statement: choice " + std::to_string(choice) + " of " +
                             std::to_string(inst.choices.size()));
    }
    TokenSequence stmt = inst.question;
    if (cfg.statement_separator) {
        stmt.ids.push_back(kOovId);
        stmt.raw.push_back("<sep>");
    }
    const TokenSequence& c = inst.choices[choice];
    stmt.ids.insert(stmt.ids.end(), c.ids.begin(), c.ids.end());
    stmt.raw.insert(stmt.raw.end(), c.raw.begin(), c.raw.end());
    return truncate(stmt, limits.max_statement_tokens, cfg.camse.scales);
}

Var candidate_score(const Exec& ex, const TokenSequence& statement,
                    const std::vector<TokenSequence>& evidence, const QaModel& model,
                    const ScoreLimits& limits, QaDiagnostics* diag) {
    if (evidence.empty()) {
        if (diag) ++diag->empty_evidence_lists;
        return Var::constant(Tensor::scalar(0.0));
    }
    const ScoringConfig sc = model.cfg.scoring();
    EmbeddingTensor stmt = encode(ex, statement, model.embedding, model.encoder, model.cfg.camse);
    Var total;
    const std::size_t n_docs = std::min(evidence.size(), limits.evidence_cap);
    for (std::size_t e = 0; e < n_docs; ++e) {
        TokenSequence doc =
            truncate(evidence[e], limits.max_document_tokens, model.cfg.camse.scales);
        EmbeddingTensor doc_t = encode(ex, doc, model.embedding, model.encoder, model.cfg.camse);
        ScorePack pack;
        Var s = score_pair(ex.tape, stmt, doc_t, model.scoring, sc, diag ? &pack : nullptr);
        if (diag) diag->zero_norm_pairs += pack.zero_norm_pairs;
        total = total.defined() ? ops::add(ex.tape, total, s) : s;
    }
    return total;
}

std::vector<Var> candidate_scores(const Exec& ex, const QaInstance& inst, const QaModel& model,
                                  const ScoreLimits& limits, QaDiagnostics* diag) {
    std::vector<Var> scores;
    scores.reserve(inst.choices.size());
    for (std::size_t i = 0; i < inst.choices.size(); ++i) {
        TokenSequence stmt = make_statement(inst, i, model.cfg, limits);
        scores.push_back(candidate_score(ex, stmt, inst.evidence[i], model, limits, diag));
    }
    return scores;
}

namespace {

int argmax_lowest(const std::vector<double>& scores) {
    int best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

}  // namespace

int predict(const QaInstance& inst, const QaModel& model, const ScoreLimits& limits) {
    Exec ex;  // eval mode, no tape
    std::vector<Var> vars = candidate_scores(ex, inst, model, limits);
    std::vector<double> scores;
    scores.reserve(vars.size());
    for (const Var& v : vars) scores.push_back(v.value().item());
    return argmax_lowest(scores);
}

Var loss(const Exec& ex, const QaInstance& inst, const QaModel& model, const ScoreLimits& limits,
         QaDiagnostics* diag) {
    if (!inst.has_answer()) {
        throw StateError("loss: instance " + inst.id + " has no gold answer");
    }
    std::vector<Var> scores = candidate_scores(ex, inst, model, limits, diag);
    Var logits = ops::concat_list(ex.tape, scores);
    Var log_probs = ops::log_softmax_vec(ex.tape, logits);
    Var gold = ops::pick(ex.tape, log_probs, static_cast<std::size_t>(inst.answer));
    return ops::scale(ex.tape, gold, -1.0);
}

double evaluate(const std::vector<QaInstance>& instances, const QaModel& model,
                const ScoreLimits& limits, int threads) {
    if (instances.empty()) throw ConfigError("evaluate: empty test set");
    for (const QaInstance& inst : instances) {
        if (!inst.has_answer()) {
            throw StateError("evaluate: instance " + inst.id + " has no gold answer");
        }
    }
    std::vector<int> predictions(instances.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < instances.size(); ++i) {
            predictions[i] = predict(instances[i], model, limits);
        }
    } else {
        // Frozen parameters make forward passes safe to run concurrently;
        // results are collected by instance index.
        std::vector<std::thread> pool;
        const std::size_t n = instances.size();
        const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t]() {
                for (std::size_t i = t; i < n; i += n_threads) {
                    predictions[i] = predict(instances[i], model, limits);
                }
            });
        }
        for (std::thread& th : pool) th.join();
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (predictions[i] == instances[i].answer) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(instances.size());
}

namespace {

// Mean-pooled embedding of a sequence; OOV rows contribute zero vectors.
Tensor mean_embedding(const TokenSequence& seq, const EmbeddingTable& table) {
    Tensor sum({table.dim()});
    for (int id : seq.ids) {
        const double* row = table.vectors.row(static_cast<std::size_t>(id));
        for (std::size_t j = 0; j < table.dim(); ++j) sum[j] += row[j];
    }
    const double inv = 1.0 / static_cast<double>(seq.length());
    for (std::size_t j = 0; j < table.dim(); ++j) sum[j] *= inv;
    return sum;
}

double plain_cosine(const Tensor& a, const Tensor& b) {
    double dab = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dab += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    return denom < 1e-12 ? 0.0 : dab / denom;
}

}  // namespace

int baseline_mean_cosine(const QaInstance& inst, const EmbeddingTable& table,
                         const ScoreLimits& limits) {
    std::vector<double> scores;
    scores.reserve(inst.choices.size());
    for (std::size_t i = 0; i < inst.choices.size(); ++i) {
        TokenSequence stmt = inst.question;
        const TokenSequence& c = inst.choices[i];
        stmt.ids.insert(stmt.ids.end(), c.ids.begin(), c.ids.end());
        stmt.raw.insert(stmt.raw.end(), c.raw.begin(), c.raw.end());
        stmt = truncate(stmt, limits.max_statement_tokens);
        const Tensor stmt_mean = mean_embedding(stmt, table);
        double s = 0.0;
        const std::size_t n_docs = std::min(inst.evidence[i].size(), limits.evidence_cap);
        for (std::size_t e = 0; e < n_docs; ++e) {
            TokenSequence doc = truncate(inst.evidence[i][e], limits.max_document_tokens);
            s += plain_cosine(stmt_mean, mean_embedding(doc, table));
        }
        scores.push_back(s);
    }
    return argmax_lowest(scores);
}

void TrainConfig::validate() const {
    if (batch_size < 1 || epochs < 1) throw ConfigError("train config: batch_size/epochs must be >= 1");
    if (learning_rate <= 0.0 || lr_decay <= 0.0) {
        throw ConfigError("train config: learning_rate and lr_decay must be positive");
    }
    if (limits.evidence_cap < 1) throw ConfigError("train config: evidence_cap must be >= 1");
}

TrainResult train(const std::vector<QaInstance>& train_set, const std::vector<QaInstance>& dev_set,
                  const TrainConfig& cfg, QaModel& model,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
    cfg.validate();
    if (train_set.empty()) throw ConfigError("train: empty training set");
    for (const QaInstance& inst : train_set) {
        if (!inst.has_answer()) throw StateError("train: instance " + inst.id + " has no gold answer");
    }

    AdamConfig adam_cfg;
    adam_cfg.lr = cfg.learning_rate;
    adam_cfg.beta1 = cfg.adam_beta1;
    adam_cfg.beta2 = cfg.adam_beta2;
    adam_cfg.eps = cfg.adam_epsilon;
    adam_cfg.decay = cfg.lr_decay;
    Adam adam(adam_cfg);

    Rng shuffle_rng(Rng::derive(cfg.seed, "shuffle"));
    Rng dropout_rng(Rng::derive(cfg.seed, "dropout"));

    TrainResult result;
    std::vector<Tensor> best_params;
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        adam.set_epoch(epoch - 1);
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        std::size_t pos = 0;
        int batch_no = 0;
        while (pos < order.size()) {
            ++batch_no;
            const std::size_t batch_end =
                std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
            const std::size_t batch_n = batch_end - pos;
            model.params.zero_grads();
            for (std::size_t b = pos; b < batch_end; ++b) {
                Tape tape;
                Exec ex{&tape, true, model.cfg.camse.dropout, &dropout_rng};
                Var l = loss(ex, train_set[order[b]], model, cfg.limits);
                const double lv = l.value().item();
                if (!std::isfinite(lv)) {
                    throw DivergenceError("training diverged: non-finite loss at epoch " +
                                              std::to_string(epoch) + " batch " +
                                              std::to_string(batch_no),
                                          epoch, batch_no);
                }
                loss_sum += lv;
                tape.backward(l);
            }
            // Mean over the batch, applied to the accumulated grads.
            const double inv = 1.0 / static_cast<double>(batch_n);
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                Tensor& g = model.params.at(p).grad();
                for (std::size_t j = 0; j < g.size(); ++j) g[j] *= inv;
            }
            adam.step(model.params);
            if (model.cfg.fine_tune_embeddings) {
                // OOV row stays pinned at zero.
                double* row0 = model.params.find("embedding.table")->value_mut().row(0);
                for (std::size_t j = 0; j < model.cfg.camse.embed_dim; ++j) row0[j] = 0.0;
            }
            pos = batch_end;
        }

        EpochMetrics m;
        m.epoch = epoch;
        m.train_loss = loss_sum / static_cast<double>(train_set.size());
        m.dev_accuracy = dev_set.empty() ? 0.0 : evaluate(dev_set, model, cfg.limits);
        m.lr = adam.effective_lr();
        result.history.push_back(m);
        if (on_epoch) on_epoch(m);

        // With no dev set the latest parameters are kept; otherwise best dev
        // accuracy wins, ties going to the earlier epoch.
        if (dev_set.empty() || result.history.size() == 1 ||
            m.dev_accuracy > result.best_dev_accuracy) {
            result.best_epoch = epoch;
            result.best_dev_accuracy = m.dev_accuracy;
            best_params.clear();
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                best_params.push_back(model.params.at(p).value());
            }
        }
        if (!dev_set.empty() && m.dev_accuracy >= cfg.early_stop_dev_accuracy) break;
    }

    for (std::size_t p = 0; p < model.params.size(); ++p) {
        model.params.at(p).value_mut() = best_params[p];
    }
    return result;
}

}  // namespace camse
