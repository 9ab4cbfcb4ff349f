#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "camse/encoder.hpp"
#include "camse/optim.hpp"
#include "camse/scoring.hpp"
#include "camse/text.hpp"

namespace camse {

struct QaInstance {
    std::string id;
    TokenSequence question;
    std::vector<TokenSequence> choices;
    std::vector<std::vector<TokenSequence>> evidence;  // one list per choice, may be ragged
    int answer = -1;                                   // -1 when absent (inference)
    bool has_answer() const { return answer >= 0; }
};

// One JSON record per line: {id, question, choices[], evidence[][], answer};
// all text pre-tokenized and whitespace-separated.
std::vector<QaInstance> load_dataset(const std::string& path, const Vocabulary& vocab);
void save_dataset(const std::string& path, const std::vector<QaInstance>& instances);

struct ModelConfig {
    CamseConfig camse;
    std::size_t gate_hidden = 128;
    bool sas_bias = true;
    ScoreMode score_mode = ScoreMode::sms_sas;
    bool statement_separator = false;
    bool fine_tune_embeddings = false;
    ScoringConfig scoring() const;
};

// Siamese setup: one CamseParams set encodes both statements and documents.
struct QaModel {
    ModelConfig cfg;
    Vocabulary vocab;
    ParamStore params;
    CamseParams encoder;
    ScoringParams scoring;
    Var embedding;  // constant when embeddings are frozen, a parameter otherwise

    QaModel() = default;
    QaModel(const QaModel&) = delete;
    QaModel& operator=(const QaModel&) = delete;
    QaModel(QaModel&&) = default;
    QaModel& operator=(QaModel&&) = default;

    static QaModel create(ModelConfig cfg, Vocabulary vocab, EmbeddingTable table,
                          std::uint64_t seed);
};

struct ScoreLimits {
    std::size_t max_statement_tokens = 100;
    std::size_t max_document_tokens = 100;
    std::size_t evidence_cap = 10;
};

struct QaDiagnostics {
    int empty_evidence_lists = 0;
    int zero_norm_pairs = 0;
};

// Question followed by the choice tokens (an OOV separator in between when
// configured), truncated to the statement limit.
TokenSequence make_statement(const QaInstance& inst, std::size_t choice, const ModelConfig& cfg,
                             const ScoreLimits& limits);

// Reliability of one candidate: pair scores of its evidence documents
// summed in ascending document order, at most evidence_cap documents. The
// statement is encoded once and reused across the documents.
Var candidate_score(const Exec& ex, const TokenSequence& statement,
                    const std::vector<TokenSequence>& evidence, const QaModel& model,
                    const ScoreLimits& limits, QaDiagnostics* diag = nullptr);

std::vector<Var> candidate_scores(const Exec& ex, const QaInstance& inst, const QaModel& model,
                                  const ScoreLimits& limits, QaDiagnostics* diag = nullptr);

// argmax of the reliabilities; ties break to the lowest index.
int predict(const QaInstance& inst, const QaModel& model, const ScoreLimits& limits);

// -log softmax(S_1..S_nc)[gold]
Var loss(const Exec& ex, const QaInstance& inst, const QaModel& model, const ScoreLimits& limits,
         QaDiagnostics* diag = nullptr);

double evaluate(const std::vector<QaInstance>& instances, const QaModel& model,
                const ScoreLimits& limits, int threads = 1);

// Word-level control: candidates scored by summed cosine between
// mean-pooled statement and document embeddings.
int baseline_mean_cosine(const QaInstance& inst, const EmbeddingTable& table,
                         const ScoreLimits& limits);

struct TrainConfig {
    int batch_size = 10;
    int epochs = 30;
    double learning_rate = 1e-3;
    double lr_decay = 0.95;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 42;
    ScoreLimits limits;
    double early_stop_dev_accuracy = 1.0;
    void validate() const;
};

struct EpochMetrics {
    int epoch;
    double train_loss;
    double dev_accuracy;
    double lr;
};

struct TrainResult {
    std::vector<EpochMetrics> history;
    int best_epoch = 0;
    double best_dev_accuracy = 0.0;
};

// Minibatch Adam with per-epoch lr decay and dropout; mean loss per batch.
// The best-dev parameters (ties to the earlier epoch) are restored into the
// model before returning. Deterministic given the seed.
TrainResult train(const std::vector<QaInstance>& train_set, const std::vector<QaInstance>& dev_set,
                  const TrainConfig& cfg, QaModel& model,
                  const std::function<void(const EpochMetrics&)>& on_epoch = nullptr);

}  // namespace camse
