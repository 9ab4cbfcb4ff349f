#include "camse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "camse/errors.hpp"

namespace camse {

namespace {

constexpr char kIndexMagic[8] = {'C', 'A', 'M', 'S', 'E', 'I', 'D', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

void put_bytes(std::vector<std::uint8_t>& out, const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
}

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    std::uint8_t buf[sizeof(T)];
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf[i] = static_cast<std::uint8_t>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff);
    }
    put_bytes(out, buf, sizeof(T));
}

struct Reader {
    const std::uint8_t* p;
    const std::uint8_t* end;
    std::string where;

    void need(std::size_t n) const {
        if (static_cast<std::size_t>(end - p) < n) {
            throw ParseError(where + ": truncated index file");
        }
    }
    template <typename T>
    T get_le() {
        need(sizeof(T));
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        }
        p += sizeof(T);
        return static_cast<T>(v);
    }
    std::string get_string(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }
};

}  // namespace

InvertedIndex InvertedIndex::build(const std::vector<TokenSequence>& corpus) {
    if (corpus.empty()) throw ConfigError("build_index: empty corpus");
    InvertedIndex index;
    index.doc_lens_.reserve(corpus.size());
    std::uint64_t total_len = 0;
    for (std::size_t doc = 0; doc < corpus.size(); ++doc) {
        const TokenSequence& seq = corpus[doc];
        if (seq.raw.empty()) {
            throw ParseError("build_index: document " + std::to_string(doc) + " has no tokens");
        }
        std::unordered_map<std::string, std::uint64_t> tf;
        for (const std::string& tok : seq.raw) ++tf[tok];
        for (const auto& [tok, count] : tf) {
            index.postings_[tok].push_back({static_cast<std::uint64_t>(doc), count});
        }
        index.doc_lens_.push_back(static_cast<std::uint64_t>(seq.raw.size()));
        total_len += seq.raw.size();
    }
    for (auto& [tok, list] : index.postings_) {
        std::sort(list.begin(), list.end(),
                  [](const Posting& a, const Posting& b) { return a.doc_id < b.doc_id; });
    }
    index.avg_len_ = static_cast<double>(total_len) / static_cast<double>(corpus.size());
    return index;
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

std::uint64_t InvertedIndex::doc_freq(const std::string& term) const {
    const auto* list = postings(term);
    return list ? list->size() : 0;
}

std::vector<std::uint8_t> InvertedIndex::serialize() const {
    std::vector<std::uint8_t> out;
    put_bytes(out, kIndexMagic, sizeof(kIndexMagic));
    put_le<std::uint32_t>(out, kIndexVersion);
    put_le<std::uint64_t>(out, doc_lens_.size());
    for (std::uint64_t len : doc_lens_) put_le<std::uint64_t>(out, len);
    put_le<std::uint64_t>(out, postings_.size());
    for (const auto& [tok, list] : postings_) {  // std::map: sorted term order
        put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tok.size()));
        put_bytes(out, tok.data(), tok.size());
        put_le<std::uint64_t>(out, list.size());
        for (const Posting& p : list) {
            put_le<std::uint64_t>(out, p.doc_id);
            put_le<std::uint64_t>(out, p.tf);
        }
    }
    return out;
}

void InvertedIndex::save(const std::string& path) const {
    std::vector<std::uint8_t> bytes = serialize();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write index file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing index file: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open index file: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    Reader r{bytes.data(), bytes.data() + bytes.size(), path};
    r.need(sizeof(kIndexMagic));
    if (std::memcmp(r.p, kIndexMagic, sizeof(kIndexMagic)) != 0) {
        throw ParseError(path + ": not an index file (bad magic)");
    }
    r.p += sizeof(kIndexMagic);
    const auto version = r.get_le<std::uint32_t>();
    if (version != kIndexVersion) {
        throw ParseError(path + ": unsupported index version " + std::to_string(version));
    }
    InvertedIndex index;
    const auto n_docs = r.get_le<std::uint64_t>();
    if (n_docs == 0) throw ParseError(path + ": index holds no documents");
    index.doc_lens_.reserve(n_docs);
    std::uint64_t total = 0;
    for (std::uint64_t i = 0; i < n_docs; ++i) {
        index.doc_lens_.push_back(r.get_le<std::uint64_t>());
        total += index.doc_lens_.back();
    }
    index.avg_len_ = static_cast<double>(total) / static_cast<double>(n_docs);
    const auto n_terms = r.get_le<std::uint64_t>();
    for (std::uint64_t t = 0; t < n_terms; ++t) {
        const auto tok_len = r.get_le<std::uint32_t>();
        std::string tok = r.get_string(tok_len);
        const auto n_postings = r.get_le<std::uint64_t>();
        std::vector<Posting>& list = index.postings_[tok];
        list.reserve(n_postings);
        for (std::uint64_t i = 0; i < n_postings; ++i) {
            Posting p;
            p.doc_id = r.get_le<std::uint64_t>();
            p.tf = r.get_le<std::uint64_t>();
            if (p.doc_id >= n_docs) {
                throw ParseError(path + ": posting for '" + tok + "' references doc " +
                                 std::to_string(p.doc_id) + " of " + std::to_string(n_docs));
            }
            list.push_back(p);
        }
    }
    if (r.p != r.end) throw ParseError(path + ": trailing bytes after postings");
    return index;
}

std::vector<ScoredDoc> bm25(const TokenSequence& query, const InvertedIndex& index, double k1,
                            double b) {
    const double n_docs = static_cast<double>(index.doc_count());
    const double avg_len = index.avg_doc_len();
    // Term-at-a-time in query order, so each document's contributions sum in
    // the same order a per-document evaluation of the formula would use.
    std::unordered_map<std::uint64_t, double> acc;
    for (const std::string& term : query.raw) {
        const auto* list = index.postings(term);
        if (!list) continue;
        const double df = static_cast<double>(list->size());
        const double idf = std::log((n_docs - df + 0.5) / (df + 0.5) + 1.0);
        for (const Posting& p : *list) {
            const double tf = static_cast<double>(p.tf);
            const double len_norm =
                1.0 - b + b * static_cast<double>(index.doc_len(p.doc_id)) / avg_len;
            acc[p.doc_id] += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
        }
    }
    std::vector<ScoredDoc> out;
    out.reserve(acc.size());
    for (const auto& [doc, score] : acc) {
        if (score != 0.0) out.push_back({static_cast<std::size_t>(doc), score, 0});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& a, const ScoredDoc& b2) {
        if (a.score != b2.score) return a.score > b2.score;
        return a.doc_id < b2.doc_id;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i;
    return out;
}

std::vector<ScoredDoc> top_k_evidence(const TokenSequence& statement, const InvertedIndex& index,
                                      std::size_t k, double k1, double b) {
    if (k < 1) throw ConfigError("top_k_evidence: k must be >= 1");
    std::vector<ScoredDoc> all = bm25(statement, index, k1, b);
    if (all.size() > k) all.resize(k);
    return all;
}

}  // namespace camse
