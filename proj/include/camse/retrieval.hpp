#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "camse/text.hpp"

namespace camse {

struct ScoredDoc {
    std::size_t doc_id = 0;
    double score = 0.0;
    std::size_t rank = 0;
};

struct Posting {
    std::uint64_t doc_id;
    std::uint64_t tf;
};

// In-memory inverted index over raw token strings. Terms are kept sorted so
// rebuilds and round trips are byte-identical.
class InvertedIndex {
  public:
    static InvertedIndex build(const std::vector<TokenSequence>& corpus);

    std::size_t doc_count() const { return doc_lens_.size(); }
    double avg_doc_len() const { return avg_len_; }
    std::uint64_t doc_len(std::size_t id) const { return doc_lens_[id]; }
    const std::vector<Posting>* postings(const std::string& term) const;
    std::uint64_t doc_freq(const std::string& term) const;

    std::vector<std::uint8_t> serialize() const;
    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    std::map<std::string, std::vector<Posting>> postings_;
    std::vector<std::uint64_t> doc_lens_;
    double avg_len_ = 0.0;
};

// Okapi BM25 with the Lucene-style non-negative idf:
// idf(t) = ln((N - df + 0.5) / (df + 0.5) + 1). Documents that match no
// query term are omitted; ties break by ascending doc id.
std::vector<ScoredDoc> bm25(const TokenSequence& query, const InvertedIndex& index, double k1 = 1.2,
                            double b = 0.75);

std::vector<ScoredDoc> top_k_evidence(const TokenSequence& statement, const InvertedIndex& index,
                                      std::size_t k = 10, double k1 = 1.2, double b = 0.75);

}  // namespace camse
