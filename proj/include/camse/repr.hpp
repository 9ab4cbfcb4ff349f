#pragma once

#include <cstdint>
#include <vector>

#include "camse/nn.hpp"
#include "camse/text.hpp"

namespace camse {

struct ReprConfig {
    std::size_t lstm_units = 32;
    std::size_t hidden = 64;  // representation dimensionality
    int epochs = 20;
    int batch_size = 10;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;
};

// Bi-LSTM (final states concatenated) + one hidden layer MLP trained with
// cross-entropy over class labels. The hidden activation is the
// representation used for nearest-neighbor evidence selection.
class ReprClassifier {
  public:
    static ReprClassifier train(const std::vector<TokenSequence>& seqs,
                                const std::vector<int>& labels, int n_classes,
                                const EmbeddingTable& table, const ReprConfig& cfg);

    Tensor represent(const TokenSequence& seq, const EmbeddingTable& table) const;
    int classify(const TokenSequence& seq, const EmbeddingTable& table) const;
    std::size_t repr_dim() const { return cfg_.hidden; }

  private:
    ReprConfig cfg_;
    int n_classes_ = 0;
    ParamStore params_;
    nn::BiLstmParams lstm_;
    Var w1_, b1_;  // hidden x 2u, hidden
    Var w2_, b2_;  // n_classes x hidden, n_classes
};

struct BankEntry {
    TokenSequence text;
    Tensor repr;
    int class_id;
};

double cosine_similarity(const Tensor& a, const Tensor& b);

// For each candidate class, the per_class_k bank questions of that class
// closest to the query representation by cosine (ties to the lower bank
// index). A class absent from the bank yields an empty list and a note on
// stderr.
std::vector<std::vector<TokenSequence>> neighbor_evidence(const Tensor& query_repr,
                                                          const std::vector<int>& choice_classes,
                                                          const std::vector<BankEntry>& bank,
                                                          std::size_t per_class_k = 10);

}  // namespace camse
