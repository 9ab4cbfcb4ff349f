#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "camse/tensor.hpp"

namespace camse {

constexpr int kOovId = 0;

struct TokenSequence {
    std::vector<int> ids;
    std::vector<std::string> raw;
    std::size_t length() const { return ids.size(); }
    std::string joined() const;
};

// Token ids are dense; id 0 is reserved for out-of-vocabulary tokens and
// never collides with a real token.
class Vocabulary {
  public:
    Vocabulary();
    int add(const std::string& token);           // returns existing id if present
    int id_of(const std::string& token) const;   // kOovId when unknown
    const std::string& token_of(int id) const;
    std::size_t size() const { return id_to_token_.size(); }  // includes OOV slot

    static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  private:
    std::unordered_map<std::string, int> token_to_id_;
    std::vector<std::string> id_to_token_;
};

// |V| x d word vectors; row 0 (OOV) is all zeros.
struct EmbeddingTable {
    Tensor vectors;
    std::size_t dim() const { return vectors.cols(); }
    std::size_t vocab_size() const { return vectors.rows(); }
};

std::vector<std::string> split_tokens(const std::string& text);
TokenSequence tokenize(const std::string& text, const Vocabulary& vocab);
TokenSequence truncate(const TokenSequence& seq, std::size_t max_len, std::size_t min_window = 1);
Tensor lookup(const TokenSequence& seq, const EmbeddingTable& table);

std::size_t levenshtein_distance(const std::string& a, const std::string& b);
// 1 - dist / max(|a|, |b|); ratio of two empty strings is 1.
double levenshtein_ratio(const std::string& a, const std::string& b);

// Keep mask over train entries: false where some test entry is similar at
// or above the threshold.
std::vector<bool> dedup_keep_mask(const std::vector<std::string>& train,
                                  const std::vector<std::string>& test, double threshold = 0.8);
std::vector<std::string> dedup_train(const std::vector<std::string>& train,
                                     const std::vector<std::string>& test, double threshold = 0.8);

// word2vec-style text file: "<vocab_size> <dim>" header then one token and
// dim floats per line. Row 0 of the resulting table is the OOV zero vector,
// on top of whatever the file lists.
struct LoadedEmbeddings {
    Vocabulary vocab;
    EmbeddingTable table;
};
LoadedEmbeddings load_embeddings(const std::string& path);
EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);
void save_embeddings(const std::string& path, const Vocabulary& vocab, const EmbeddingTable& table);

}  // namespace camse
