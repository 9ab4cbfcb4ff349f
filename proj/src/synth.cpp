#include "camse/synth.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "camse/errors.hpp"
#include "camse/rng.hpp"

namespace camse {

namespace {

TokenSequence make_seq(std::vector<std::string> raw, const Vocabulary& vocab) {
    TokenSequence seq;
    seq.ids.reserve(raw.size());
    for (const std::string& t : raw) seq.ids.push_back(vocab.id_of(t));
    seq.raw = std::move(raw);
    return seq;
}

std::vector<std::string> noise_pool(const std::string& prefix, std::size_t count) {
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
    return out;
}

// Scatter the payload tokens over `len` slots at distinct random positions
// (keeping payload order only when contiguous = true), noise elsewhere.
std::vector<std::string> compose_line(const std::vector<std::string>& payload, bool contiguous,
                                      std::size_t len, const std::vector<std::string>& noise,
                                      Rng& rng) {
    std::vector<std::string> out(len);
    std::vector<bool> used(len, false);
    if (contiguous) {
        const std::size_t start = rng.uniform_index(len - payload.size() + 1);
        for (std::size_t i = 0; i < payload.size(); ++i) {
            out[start + i] = payload[i];
            used[start + i] = true;
        }
    } else {
        std::vector<std::size_t> positions(len);
        for (std::size_t i = 0; i < len; ++i) positions[i] = i;
        rng.shuffle(positions);
        for (std::size_t i = 0; i < payload.size(); ++i) {
            out[positions[i]] = payload[i];
            used[positions[i]] = true;
        }
    }
    for (std::size_t i = 0; i < len; ++i) {
        if (!used[i]) out[i] = noise[rng.uniform_index(noise.size())];
    }
    return out;
}

// Gold choice, its mandatory confusable sibling (when present), then
// distinct fillers; shuffled so the answer index is uniform.
std::vector<std::size_t> pick_choices(std::size_t gold, long long sibling, std::size_t n_diseases,
                                      std::size_t n_choices, Rng& rng, std::size_t* answer) {
    std::vector<std::size_t> chosen = {gold};
    if (sibling >= 0) chosen.push_back(static_cast<std::size_t>(sibling));
    while (chosen.size() < n_choices) {
        const std::size_t d = rng.uniform_index(n_diseases);
        if (std::find(chosen.begin(), chosen.end(), d) == chosen.end()) chosen.push_back(d);
    }
    rng.shuffle(chosen);
    *answer = static_cast<std::size_t>(
        std::find(chosen.begin(), chosen.end(), gold) - chosen.begin());
    return chosen;
}

}  // namespace

SynthCorpus gen_entity_corpus(const SynthConfig& cfg) {
    if (cfg.entity_len < 2) throw ConfigError("entity corpus: entity_len must be >= 2");
    if (cfg.n_choices < 2) throw ConfigError("entity corpus: n_choices must be >= 2");
    if (cfg.diseases < cfg.n_choices || cfg.diseases < 2 || cfg.diseases % 2 != 0) {
        throw ConfigError("entity corpus: diseases must be even and >= n_choices");
    }
    if (cfg.question_len < cfg.entity_len || cfg.doc_len < cfg.entity_len) {
        throw ConfigError("entity corpus: question_len and doc_len must fit the entity");
    }
    const std::size_t families = cfg.diseases / 2;
    const std::size_t reserved = families * cfg.entity_len + cfg.diseases;
    if (reserved + 8 > cfg.vocab_size) {
        throw ConfigError("entity corpus: vocab_size " + std::to_string(cfg.vocab_size) +
                          " too small to build " + std::to_string(cfg.diseases) +
                          " distinct entities plus noise");
    }

    // Sibling pair 2j / 2j+1 shares one token multiset; the sibling swaps the
    // last two tokens, so only word order separates them.
    std::vector<std::vector<std::string>> entities(cfg.diseases);
    for (std::size_t j = 0; j < families; ++j) {
        std::vector<std::string> base;
        for (std::size_t t = 0; t < cfg.entity_len; ++t) {
            base.push_back("E" + std::to_string(j * cfg.entity_len + t));
        }
        entities[2 * j] = base;
        std::swap(base[cfg.entity_len - 1], base[cfg.entity_len - 2]);
        entities[2 * j + 1] = base;
    }
    std::vector<std::string> names;
    for (std::size_t d = 0; d < cfg.diseases; ++d) names.push_back("N" + std::to_string(d));

    const std::size_t noise_budget = cfg.vocab_size - reserved;
    std::size_t per_side = noise_budget / 2;
    if (cfg.noise_tokens_per_side > 0) per_side = std::min(per_side, cfg.noise_tokens_per_side);
    const std::vector<std::string> q_noise = noise_pool("QN", per_side);
    const std::vector<std::string> d_noise = noise_pool("DN", per_side);

    SynthCorpus corpus;
    for (std::size_t j = 0; j < families; ++j) {
        for (const std::string& t : entities[2 * j]) corpus.vocab.add(t);
    }
    for (const std::string& t : names) corpus.vocab.add(t);
    for (const std::string& t : q_noise) corpus.vocab.add(t);
    for (const std::string& t : d_noise) corpus.vocab.add(t);
    corpus.table = random_embeddings(corpus.vocab, cfg.embed_dim, cfg.seed);

    auto gen_split = [&](const char* split, std::size_t count, Rng& rng) {
        std::vector<QaInstance> out;
        out.reserve(count);
        for (std::size_t n = 0; n < count; ++n) {
            const std::size_t gold = rng.uniform_index(cfg.diseases);
            const std::size_t sibling = gold ^ 1;
            QaInstance inst;
            inst.id = std::string("ent-") + split + "-" + std::to_string(n);
            inst.question = make_seq(
                compose_line(entities[gold], /*contiguous=*/true, cfg.question_len, q_noise, rng),
                corpus.vocab);
            std::size_t answer = 0;
            const std::vector<std::size_t> chosen = pick_choices(
                gold, static_cast<long long>(sibling), cfg.diseases, cfg.n_choices, rng, &answer);
            for (std::size_t d : chosen) {
                inst.choices.push_back(make_seq({names[d]}, corpus.vocab));
                std::vector<TokenSequence> docs;
                for (std::size_t e = 0; e < cfg.docs_per_choice; ++e) {
                    docs.push_back(make_seq(
                        compose_line(entities[d], /*contiguous=*/true, cfg.doc_len, d_noise, rng),
                        corpus.vocab));
                }
                inst.evidence.push_back(std::move(docs));
            }
            inst.answer = static_cast<int>(answer);
            out.push_back(std::move(inst));
        }
        return out;
    };

    Rng train_rng(Rng::derive(cfg.seed, "entity-train"));
    Rng test_rng(Rng::derive(cfg.seed, "entity-test"));
    corpus.train = gen_split("train", cfg.train_size, train_rng);
    corpus.test = gen_split("test", cfg.test_size, test_rng);
    return corpus;
}

SynthCorpus gen_association_corpus(const SynthConfig& cfg) {
    if (cfg.n_choices < 2) throw ConfigError("association corpus: n_choices must be >= 2");
    if (cfg.diseases < cfg.n_choices || cfg.diseases < 3) {
        throw ConfigError("association corpus: diseases must be >= max(3, n_choices)");
    }
    if (cfg.causes_per_disease < 1 || cfg.symptoms_per_disease < 1 ||
        cfg.symptoms_per_disease > cfg.causes_per_disease) {
        throw ConfigError(
            "association corpus: need 1 <= symptoms_per_disease <= causes_per_disease");
    }
    if (cfg.question_len < cfg.causes_per_disease || cfg.doc_len < cfg.symptoms_per_disease) {
        throw ConfigError("association corpus: question_len/doc_len too small for the payloads");
    }
    const std::size_t group_size = cfg.causes_per_disease;
    const std::size_t reserved = cfg.diseases * (group_size + 1);
    if (reserved + 8 > cfg.vocab_size) {
        throw ConfigError("association corpus: vocab_size " + std::to_string(cfg.vocab_size) +
                          " too small for " + std::to_string(cfg.diseases) + " diseases plus noise");
    }

    // One token group per disease; the causes of disease d are group d and
    // its symptoms are group d+1 (mod m). The relation is a directed cycle,
    // so symmetric similarity between cause and symptom representations is
    // structurally insufficient, while learned pairwise association scores
    // express it directly. A side effect: the question of disease d shares
    // every payload token with the evidence of distractor d-1, so lexical
    // overlap actively misleads.
    std::vector<std::vector<std::string>> groups(cfg.diseases);
    std::vector<std::string> names;
    for (std::size_t d = 0; d < cfg.diseases; ++d) {
        for (std::size_t i = 0; i < group_size; ++i) {
            groups[d].push_back("A" + std::to_string(d * group_size + i));
        }
        names.push_back("N" + std::to_string(d));
    }
    auto causes = [&](std::size_t d) { return groups[d]; };
    auto symptoms = [&](std::size_t d) {
        std::vector<std::string> out = groups[(d + 1) % cfg.diseases];
        out.resize(cfg.symptoms_per_disease);
        return out;
    };

    // Shared noise pool for both sides; document noise avoids the question's
    // tokens in every evidence list, so the zero-overlap guarantee for gold
    // evidence does not mark gold documents out statistically.
    std::size_t pool_size = cfg.vocab_size - reserved;
    if (cfg.noise_tokens_per_side > 0) {
        pool_size = std::min(pool_size, 2 * cfg.noise_tokens_per_side);
    }
    const std::vector<std::string> noise = noise_pool("XN", pool_size);

    SynthCorpus corpus;
    for (std::size_t d = 0; d < cfg.diseases; ++d) {
        for (const std::string& t : groups[d]) corpus.vocab.add(t);
    }
    for (const std::string& t : names) corpus.vocab.add(t);
    for (const std::string& t : noise) corpus.vocab.add(t);
    corpus.table = random_embeddings(corpus.vocab, cfg.embed_dim, cfg.seed);

    auto gen_split = [&](const char* split, std::size_t count, Rng& rng) {
        std::vector<QaInstance> out;
        out.reserve(count);
        for (std::size_t n = 0; n < count; ++n) {
            const std::size_t gold = rng.uniform_index(cfg.diseases);
            QaInstance inst;
            inst.id = std::string("assoc-") + split + "-" + std::to_string(n);
            inst.question = make_seq(
                compose_line(causes(gold), /*contiguous=*/false, cfg.question_len, noise, rng),
                corpus.vocab);
            std::vector<std::string> doc_noise;
            for (const std::string& t : noise) {
                if (std::find(inst.question.raw.begin(), inst.question.raw.end(), t) ==
                    inst.question.raw.end()) {
                    doc_noise.push_back(t);
                }
            }
            if (doc_noise.empty()) {
                throw ConfigError("association corpus: noise pool too small for disjoint noise");
            }
            std::size_t answer = 0;
            const std::vector<std::size_t> chosen =
                pick_choices(gold, -1, cfg.diseases, cfg.n_choices, rng, &answer);
            for (std::size_t d : chosen) {
                inst.choices.push_back(make_seq({names[d]}, corpus.vocab));
                std::vector<TokenSequence> docs;
                for (std::size_t e = 0; e < cfg.docs_per_choice; ++e) {
                    docs.push_back(make_seq(
                        compose_line(symptoms(d), /*contiguous=*/false, cfg.doc_len, doc_noise,
                                     rng),
                        corpus.vocab));
                }
                inst.evidence.push_back(std::move(docs));
            }
            inst.answer = static_cast<int>(answer);
            out.push_back(std::move(inst));
        }
        return out;
    };

    Rng train_rng(Rng::derive(cfg.seed, "assoc-train"));
    Rng test_rng(Rng::derive(cfg.seed, "assoc-test"));
    corpus.train = gen_split("train", cfg.train_size, train_rng);
    corpus.test = gen_split("test", cfg.test_size, test_rng);
    return corpus;
}

void write_corpus(const SynthCorpus& corpus, const SynthConfig& cfg, const std::string& kind,
                  const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
    save_dataset(dir + "/train.jsonl", corpus.train);
    save_dataset(dir + "/test.jsonl", corpus.test);
    save_embeddings(dir + "/embeddings.txt", corpus.vocab, corpus.table);
    nlohmann::json manifest;
    manifest["kind"] = kind;
    manifest["seed"] = cfg.seed;
    manifest["train_count"] = corpus.train.size();
    manifest["test_count"] = corpus.test.size();
    manifest["vocab_tokens"] = corpus.vocab.size() - 1;
    manifest["embed_dim"] = cfg.embed_dim;
    manifest["n_choices"] = cfg.n_choices;
    std::ofstream out(dir + "/manifest.json");
    if (!out) throw IoError("cannot write manifest: " + dir + "/manifest.json");
    out << manifest.dump(2) << '\n';
}

}  // namespace camse
