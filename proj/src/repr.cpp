#include "camse/repr.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "camse/autodiff.hpp"
#include "camse/errors.hpp"
#include "camse/optim.hpp"

namespace camse {

namespace {

Var forward_hidden(Tape* tape, const TokenSequence& seq, const EmbeddingTable& table,
                   const nn::BiLstmParams& lstm, const Var& w1, const Var& b1) {
    Var e = Var::constant(lookup(seq, table));
    Var final_states = nn::bilstm_final(tape, e, lstm);
    return ops::tanh(tape, ops::add(tape, ops::matvec(tape, w1, final_states), b1));
}

}  // namespace

ReprClassifier ReprClassifier::train(const std::vector<TokenSequence>& seqs,
                                     const std::vector<int>& labels, int n_classes,
                                     const EmbeddingTable& table, const ReprConfig& cfg) {
    if (seqs.empty() || seqs.size() != labels.size()) {
        throw ConfigError("repr classifier: need matching non-empty sequences and labels");
    }
    if (n_classes < 2) {
        throw ConfigError("repr classifier: need at least 2 classes, got " +
                          std::to_string(n_classes));
    }
    for (int l : labels) {
        if (l < 0 || l >= n_classes) throw ConfigError("repr classifier: label out of range");
    }

    ReprClassifier cls;
    cls.cfg_ = cfg;
    cls.n_classes_ = n_classes;
    Rng init_rng(Rng::derive(cfg.seed, "repr-init"));
    cls.lstm_ = nn::init_bilstm(cls.params_, "repr.lstm", table.dim(), cfg.lstm_units, init_rng);
    cls.w1_ = cls.params_.add("repr.mlp.w1", nn::glorot(cfg.hidden, 2 * cfg.lstm_units, init_rng));
    cls.b1_ = cls.params_.add("repr.mlp.b1", Tensor({cfg.hidden}));
    cls.w2_ = cls.params_.add("repr.mlp.w2",
                              nn::glorot(static_cast<std::size_t>(n_classes), cfg.hidden, init_rng));
    cls.b2_ = cls.params_.add("repr.mlp.b2", Tensor({static_cast<std::size_t>(n_classes)}));

    Adam adam(AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8, 1.0});
    Rng shuffle_rng(Rng::derive(cfg.seed, "repr-shuffle"));
    std::vector<std::size_t> order(seqs.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        std::size_t pos = 0;
        while (pos < order.size()) {
            const std::size_t end =
                std::min(order.size(), pos + static_cast<std::size_t>(cfg.batch_size));
            cls.params_.zero_grads();
            for (std::size_t b = pos; b < end; ++b) {
                Tape tape;
                const std::size_t i = order[b];
                Var hidden = forward_hidden(&tape, seqs[i], table, cls.lstm_, cls.w1_, cls.b1_);
                Var logits = ops::add(&tape, ops::matvec(&tape, cls.w2_, hidden), cls.b2_);
                Var log_probs = ops::log_softmax_vec(&tape, logits);
                Var l = ops::scale(&tape, ops::pick(&tape, log_probs,
                                                    static_cast<std::size_t>(labels[i])), -1.0);
                tape.backward(l);
            }
            const double inv = 1.0 / static_cast<double>(end - pos);
            for (std::size_t p = 0; p < cls.params_.size(); ++p) {
                Tensor& g = cls.params_.at(p).grad();
                for (std::size_t j = 0; j < g.size(); ++j) g[j] *= inv;
            }
            adam.step(cls.params_);
            pos = end;
        }
    }
    return cls;
}

Tensor ReprClassifier::represent(const TokenSequence& seq, const EmbeddingTable& table) const {
    return forward_hidden(nullptr, seq, table, lstm_, w1_, b1_).value();
}

int ReprClassifier::classify(const TokenSequence& seq, const EmbeddingTable& table) const {
    Var hidden = forward_hidden(nullptr, seq, table, lstm_, w1_, b1_);
    Var logits = ops::add(nullptr, ops::matvec(nullptr, w2_, hidden), b2_);
    const Tensor& v = logits.value();
    int best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

double cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.size() != b.size()) {
        throw DimensionError("cosine_similarity: sizes " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    }
    double dab = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dab += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double denom = std::sqrt(na) * std::sqrt(nb);
    return denom < 1e-12 ? 0.0 : dab / denom;
}

std::vector<std::vector<TokenSequence>> neighbor_evidence(const Tensor& query_repr,
                                                          const std::vector<int>& choice_classes,
                                                          const std::vector<BankEntry>& bank,
                                                          std::size_t per_class_k) {
    std::vector<std::vector<TokenSequence>> out(choice_classes.size());
    for (std::size_t c = 0; c < choice_classes.size(); ++c) {
        const int cls = choice_classes[c];
        std::vector<std::pair<double, std::size_t>> scored;  // (-cos handled by comparator)
        for (std::size_t i = 0; i < bank.size(); ++i) {
            if (bank[i].class_id != cls) continue;
            scored.emplace_back(cosine_similarity(query_repr, bank[i].repr), i);
        }
        if (scored.empty()) {
            std::cerr << "neighbor_evidence: no bank entries for class " << cls << "\n";
            continue;
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        const std::size_t take = std::min(per_class_k, scored.size());
        for (std::size_t i = 0; i < take; ++i) out[c].push_back(bank[scored[i].second].text);
    }
    return out;
}

}  // namespace camse
