#include "camse/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "camse/errors.hpp"
#include "camse/rng.hpp"

namespace camse {

std::string TokenSequence::joined() const {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (i) out += ' ';
        out += raw[i];
    }
    return out;
}

Vocabulary::Vocabulary() { id_to_token_.push_back("<oov>"); }

int Vocabulary::add(const std::string& token) {
    auto it = token_to_id_.find(token);
    if (it != token_to_id_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    token_to_id_.emplace(token, id);
    id_to_token_.push_back(token);
    return id;
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kOovId : it->second;
}

const std::string& Vocabulary::token_of(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
        throw DimensionError("token id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[static_cast<std::size_t>(id)];
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
    Vocabulary v;
    for (const std::string& t : tokens) v.add(t);
    return v;
}

std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

TokenSequence tokenize(const std::string& text, const Vocabulary& vocab) {
    TokenSequence seq;
    seq.raw = split_tokens(text);
    if (seq.raw.empty()) {
        throw ParseError("tokenize: empty or whitespace-only input");
    }
    seq.ids.reserve(seq.raw.size());
    for (const std::string& t : seq.raw) seq.ids.push_back(vocab.id_of(t));
    return seq;
}

TokenSequence truncate(const TokenSequence& seq, std::size_t max_len, std::size_t min_window) {
    if (max_len < min_window) {
        throw ConfigError("truncation limit " + std::to_string(max_len) +
                          " below largest convolution window " + std::to_string(min_window));
    }
    if (seq.length() <= max_len) return seq;
    TokenSequence out;
    out.ids.assign(seq.ids.begin(), seq.ids.begin() + static_cast<std::ptrdiff_t>(max_len));
    out.raw.assign(seq.raw.begin(), seq.raw.begin() + static_cast<std::ptrdiff_t>(max_len));
    return out;
}

Tensor lookup(const TokenSequence& seq, const EmbeddingTable& table) {
    const std::size_t d = table.dim();
    Tensor out({seq.length(), d});
    for (std::size_t t = 0; t < seq.length(); ++t) {
        const int id = seq.ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= table.vocab_size()) {
            throw DimensionError("lookup: token id " + std::to_string(id) +
                                 " out of range for table with " +
                                 std::to_string(table.vocab_size()) + " rows");
        }
        const double* src = table.vectors.row(static_cast<std::size_t>(id));
        std::copy(src, src + d, out.row(t));
    }
    return out;
}

std::size_t levenshtein_distance(const std::string& a, const std::string& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0) return m;
    if (m == 0) return n;
    std::vector<std::size_t> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= m; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

double levenshtein_ratio(const std::string& a, const std::string& b) {
    const std::size_t max_len = std::max(a.size(), b.size());
    if (max_len == 0) return 1.0;
    return 1.0 - static_cast<double>(levenshtein_distance(a, b)) / static_cast<double>(max_len);
}

std::vector<bool> dedup_keep_mask(const std::vector<std::string>& train,
                                  const std::vector<std::string>& test, double threshold) {
    if (threshold <= 0.0 || threshold > 1.0) {
        throw ConfigError("dedup threshold must be in (0, 1], got " + std::to_string(threshold));
    }
    std::vector<bool> keep(train.size(), true);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const std::string& q = train[i];
        for (const std::string& t : test) {
            // Length difference alone can cap the ratio below threshold.
            const std::size_t max_len = std::max(q.size(), t.size());
            if (max_len > 0) {
                const std::size_t diff =
                    q.size() > t.size() ? q.size() - t.size() : t.size() - q.size();
                const double best = 1.0 - static_cast<double>(diff) / static_cast<double>(max_len);
                if (best < threshold) continue;
            }
            if (levenshtein_ratio(q, t) >= threshold) {
                keep[i] = false;
                break;
            }
        }
    }
    return keep;
}

std::vector<std::string> dedup_train(const std::vector<std::string>& train,
                                     const std::vector<std::string>& test, double threshold) {
    std::vector<bool> keep = dedup_keep_mask(train, test, threshold);
    std::vector<std::string> out;
    out.reserve(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (keep[i]) out.push_back(train[i]);
    }
    return out;
}

LoadedEmbeddings load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open embedding file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ":1: missing header");
    std::istringstream header(line);
    long long vocab_count = -1, dim = -1;
    if (!(header >> vocab_count >> dim) || vocab_count < 0 || dim <= 0) {
        throw ParseError(path + ":1: malformed header, expected '<vocab_size> <dim>'");
    }
    std::string trailing;
    if (header >> trailing) throw ParseError(path + ":1: trailing content in header");

    LoadedEmbeddings out;
    Tensor vectors({static_cast<std::size_t>(vocab_count) + 1, static_cast<std::size_t>(dim)});
    for (long long r = 0; r < vocab_count; ++r) {
        const std::size_t line_no = static_cast<std::size_t>(r) + 2;
        if (!std::getline(in, line)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": unexpected end of file, " +
                             "expected " + std::to_string(vocab_count) + " rows");
        }
        std::istringstream row(line);
        std::string token;
        if (!(row >> token)) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": empty row");
        }
        if (out.vocab.id_of(token) != kOovId) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": duplicate token '" + token + "'");
        }
        const int id = out.vocab.add(token);
        double* dst = vectors.row(static_cast<std::size_t>(id));
        for (long long j = 0; j < dim; ++j) {
            if (!(row >> dst[j]) || !std::isfinite(dst[j])) {
                throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(dim) + " finite values for token '" + token + "'");
            }
        }
        double extra;
        if (row >> extra) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": row for token '" + token +
                             "' has more than " + std::to_string(dim) + " values");
        }
    }
    out.table.vectors = std::move(vectors);
    return out;
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
    Rng rng(Rng::derive(seed, "embeddings"));
    EmbeddingTable table;
    table.vectors = Tensor({vocab.size(), dim});
    for (std::size_t r = 1; r < vocab.size(); ++r) {  // row 0 stays zero for OOV
        double* dst = table.vectors.row(r);
        for (std::size_t j = 0; j < dim; ++j) dst[j] = rng.uniform(-0.1, 0.1);
    }
    return table;
}

void save_embeddings(const std::string& path, const Vocabulary& vocab, const EmbeddingTable& table) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write embedding file: " + path);
    out << (vocab.size() - 1) << ' ' << table.dim() << '\n';
    out.precision(17);
    for (std::size_t id = 1; id < vocab.size(); ++id) {
        out << vocab.token_of(static_cast<int>(id));
        const double* row = table.vectors.row(id);
        for (std::size_t j = 0; j < table.dim(); ++j) out << ' ' << row[j];
        out << '\n';
    }
    if (!out) throw IoError("failed writing embedding file: " + path);
}

}  // namespace camse
