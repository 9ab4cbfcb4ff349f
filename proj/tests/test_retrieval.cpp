#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <map>

#include "camse/errors.hpp"
#include "camse/retrieval.hpp"
#include "camse/rng.hpp"

using namespace camse;

namespace {

TokenSequence seq(const std::string& text) {
    TokenSequence s;
    s.raw = split_tokens(text);
    s.ids.assign(s.raw.size(), kOovId);
    return s;
}

// Per-document evaluation of the BM25 formula, summed in query-token order.
std::vector<ScoredDoc> bm25_oracle(const TokenSequence& query,
                                   const std::vector<TokenSequence>& corpus, double k1 = 1.2,
                                   double b = 0.75) {
    const double n_docs = static_cast<double>(corpus.size());
    double avg_len = 0.0;
    for (const TokenSequence& d : corpus) avg_len += static_cast<double>(d.raw.size());
    avg_len /= n_docs;
    std::vector<ScoredDoc> out;
    for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
        double score = 0.0;
        for (const std::string& term : query.raw) {
            std::size_t tf = 0;
            for (const std::string& t : corpus[doc].raw) tf += t == term ? 1 : 0;
            if (tf == 0) continue;
            std::size_t df = 0;
            for (const TokenSequence& d : corpus) {
                for (const std::string& t : d.raw) {
                    if (t == term) {
                        ++df;
                        break;
                    }
                }
            }
            const double idf =
                std::log((n_docs - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5) +
                         1.0);
            const double len_norm =
                1.0 - b + b * static_cast<double>(corpus[doc].raw.size()) / avg_len;
            score += idf * static_cast<double>(tf) * (k1 + 1.0) /
                     (static_cast<double>(tf) + k1 * len_norm);
        }
        if (score != 0.0) out.push_back({doc, score, 0});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b2) {
        if (a.score != b2.score) return a.score > b2.score;
        return a.doc_id < b2.doc_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i;
    return out;
}

std::vector<TokenSequence> random_corpus(std::size_t docs, Rng& rng) {
    const std::vector<std::string> words = {"aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh"};
    std::vector<TokenSequence> corpus;
    for (std::size_t d = 0; d < docs; ++d) {
        std::string text;
        const std::size_t len = 1 + rng.uniform_index(12);
        for (std::size_t i = 0; i < len; ++i) text += words[rng.uniform_index(words.size())] + " ";
        corpus.push_back(seq(text));
    }
    return corpus;
}

}  // namespace

TEST_CASE("index construction counts terms") {
    std::vector<TokenSequence> corpus = {seq("a a b")};
    InvertedIndex index = InvertedIndex::build(corpus);
    CHECK(index.doc_count() == 1);
    CHECK(index.avg_doc_len() == doctest::Approx(3.0));
    REQUIRE(index.postings("a") != nullptr);
    CHECK(index.postings("a")->at(0).tf == 2);
    CHECK(index.postings("b")->at(0).tf == 1);
    CHECK(index.postings("zz") == nullptr);

    CHECK_THROWS_AS(InvertedIndex::build({}), ConfigError);
    std::vector<TokenSequence> with_empty = {seq("a"), TokenSequence{}};
    try {
        InvertedIndex::build(with_empty);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("1") != std::string::npos);  // doc id in message
    }
}

TEST_CASE("rebuilding an index yields identical bytes") {
    Rng rng(51);
    std::vector<TokenSequence> corpus = random_corpus(20, rng);
    InvertedIndex a = InvertedIndex::build(corpus);
    InvertedIndex b = InvertedIndex::build(corpus);
    CHECK(a.serialize() == b.serialize());
}

TEST_CASE("index save/load round trip") {
    Rng rng(52);
    std::vector<TokenSequence> corpus = random_corpus(15, rng);
    InvertedIndex index = InvertedIndex::build(corpus);
    const std::string path = "/tmp/camse_test_index.bin";
    index.save(path);
    InvertedIndex loaded = InvertedIndex::load(path);
    CHECK(loaded.serialize() == index.serialize());
    std::remove(path.c_str());
    CHECK_THROWS_AS(InvertedIndex::load("/nonexistent/index.bin"), IoError);
}

TEST_CASE("bm25 basics") {
    std::vector<TokenSequence> corpus = {seq("cough fever"), seq("fever rash rash"),
                                         seq("headache")};
    InvertedIndex index = InvertedIndex::build(corpus);

    CHECK(bm25(seq("absentterm"), index).empty());

    std::vector<TokenSequence> single = {seq("only doc here")};
    InvertedIndex single_index = InvertedIndex::build(single);
    std::vector<ScoredDoc> hits = bm25(seq("only doc here"), single_index);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == 0);

    // 3-doc toy corpus matches the brute-force formula evaluation
    std::vector<ScoredDoc> engine = bm25(seq("fever rash"), index);
    std::vector<ScoredDoc> oracle = bm25_oracle(seq("fever rash"), corpus);
    REQUIRE(engine.size() == oracle.size());
    for (std::size_t i = 0; i < engine.size(); ++i) {
        CHECK(engine[i].doc_id == oracle[i].doc_id);
        CHECK(engine[i].score == oracle[i].score);  // bitwise: same summation order
    }
}

TEST_CASE("bm25 matches the oracle on random corpora up to 100 docs") {
    Rng rng(53);
    for (int rep = 0; rep < 8; ++rep) {
        const std::size_t n_docs = 2 + rng.uniform_index(99);
        std::vector<TokenSequence> corpus = random_corpus(n_docs, rng);
        InvertedIndex index = InvertedIndex::build(corpus);
        const TokenSequence query = seq("aa bb cc aa");
        std::vector<ScoredDoc> engine = bm25(query, index);
        std::vector<ScoredDoc> oracle = bm25_oracle(query, corpus);
        REQUIRE(engine.size() == oracle.size());
        for (std::size_t i = 0; i < engine.size(); ++i) {
            CHECK(engine[i].doc_id == oracle[i].doc_id);
            CHECK(engine[i].score == oracle[i].score);
        }
    }
}

TEST_CASE("scoring is pure given a frozen index") {
    Rng rng(54);
    std::vector<TokenSequence> corpus = random_corpus(30, rng);
    InvertedIndex index = InvertedIndex::build(corpus);
    const TokenSequence query = seq("aa dd");
    std::vector<ScoredDoc> first = bm25(query, index);
    bm25(seq("ee ff gg"), index);  // unrelated traffic
    std::vector<ScoredDoc> second = bm25(query, index);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].doc_id == second[i].doc_id);
        CHECK(first[i].score == second[i].score);
    }
}

TEST_CASE("top_k_evidence honors k, exhaustion, and the prefix property") {
    Rng rng(55);
    std::vector<TokenSequence> corpus = random_corpus(40, rng);
    InvertedIndex index = InvertedIndex::build(corpus);
    const TokenSequence query = seq("aa bb");

    std::vector<ScoredDoc> top_default = top_k_evidence(query, index);
    CHECK(top_default.size() <= 10);  // k = 10 default

    std::vector<ScoredDoc> all = top_k_evidence(query, index, 10000);
    CHECK(all.size() == bm25(query, index).size());

    for (std::size_t k = 1; k + 1 <= all.size(); ++k) {
        std::vector<ScoredDoc> a = top_k_evidence(query, index, k);
        std::vector<ScoredDoc> b = top_k_evidence(query, index, k + 1);
        REQUIRE(a.size() == std::min(k, all.size()));
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].doc_id == b[i].doc_id);
    }
    CHECK_THROWS_AS(top_k_evidence(query, index, 0), ConfigError);

    // total deterministic order: scores non-increasing, ties by doc id
    for (std::size_t i = 1; i < all.size(); ++i) {
        CHECK(all[i - 1].score >= all[i].score);
        if (all[i - 1].score == all[i].score) CHECK(all[i - 1].doc_id < all[i].doc_id);
    }
}
