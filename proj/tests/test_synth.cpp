#include <doctest.h>

#include <algorithm>
#include <set>

#include "camse/errors.hpp"
#include "camse/qa.hpp"
#include "camse/synth.hpp"

using namespace camse;

namespace {

bool contains_span(const std::vector<std::string>& haystack, const std::vector<std::string>& span) {
    if (span.size() > haystack.size()) return false;
    for (std::size_t start = 0; start + span.size() <= haystack.size(); ++start) {
        bool match = true;
        for (std::size_t i = 0; i < span.size(); ++i) {
            if (haystack[start + i] != span[i]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

std::vector<std::string> gold_entity(const QaInstance& inst) {
    // the gold evidence docs embed the entity; recover it from the tokens
    // shared between the question and the first gold document
    std::vector<std::string> entity;
    for (const std::string& t : inst.question.raw) {
        if (t.size() > 1 && t[0] == 'E') entity.push_back(t);
    }
    return entity;
}

}  // namespace

TEST_CASE("entity corpus construction properties") {
    SynthConfig cfg;
    cfg.vocab_size = 120;
    cfg.diseases = 8;
    cfg.entity_len = 3;
    cfg.question_len = 10;
    cfg.doc_len = 7;
    cfg.n_choices = 4;
    cfg.train_size = 60;
    cfg.test_size = 30;
    cfg.seed = 41;
    SynthCorpus corpus = gen_entity_corpus(cfg);
    CHECK(corpus.train.size() == 60);
    CHECK(corpus.test.size() == 30);

    auto scan = [&](const std::vector<QaInstance>& instances) {
        for (const QaInstance& inst : instances) {
            REQUIRE(inst.choices.size() == cfg.n_choices);
            REQUIRE(inst.evidence.size() == cfg.n_choices);
            REQUIRE(inst.has_answer());

            // the question embeds exactly one contiguous disease entity
            const std::vector<std::string> entity = gold_entity(inst);
            REQUIRE(entity.size() == cfg.entity_len);
            CHECK(contains_span(inst.question.raw, entity));

            // every gold evidence document carries the full entity span
            for (const TokenSequence& doc :
                 inst.evidence[static_cast<std::size_t>(inst.answer)]) {
                CHECK(contains_span(doc.raw, entity));
            }

            // some distractor's evidence shares every unigram of the entity
            // (the sibling permutation), so single-word overlap misleads
            const std::set<std::string> entity_set(entity.begin(), entity.end());
            bool sibling_found = false;
            for (std::size_t c = 0; c < inst.choices.size(); ++c) {
                if (static_cast<int>(c) == inst.answer) continue;
                for (const TokenSequence& doc : inst.evidence[c]) {
                    std::set<std::string> doc_entity;
                    for (const std::string& t : doc.raw) {
                        if (entity_set.count(t)) doc_entity.insert(t);
                    }
                    if (doc_entity == entity_set && !contains_span(doc.raw, entity)) {
                        sibling_found = true;
                    }
                }
            }
            CHECK(sibling_found);
        }
    };
    scan(corpus.train);
    scan(corpus.test);
}

TEST_CASE("generators are deterministic per seed") {
    SynthConfig cfg;
    cfg.train_size = 20;
    cfg.test_size = 10;
    SynthCorpus a = gen_entity_corpus(cfg);
    SynthCorpus b = gen_entity_corpus(cfg);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].question.raw == b.train[i].question.raw);
        CHECK(a.train[i].answer == b.train[i].answer);
        for (std::size_t c = 0; c < a.train[i].choices.size(); ++c) {
            CHECK(a.train[i].choices[c].raw == b.train[i].choices[c].raw);
        }
    }
    cfg.seed += 1;
    SynthCorpus c = gen_entity_corpus(cfg);
    bool any_differs = false;
    for (std::size_t i = 0; i < a.train.size() && !any_differs; ++i) {
        any_differs = a.train[i].question.raw != c.train[i].question.raw;
    }
    CHECK(any_differs);

    SynthCorpus a2 = gen_association_corpus(cfg);
    SynthCorpus b2 = gen_association_corpus(cfg);
    for (std::size_t i = 0; i < a2.train.size(); ++i) {
        CHECK(a2.train[i].question.raw == b2.train[i].question.raw);
        CHECK(a2.train[i].answer == b2.train[i].answer);
    }
}

TEST_CASE("infeasible configurations are rejected") {
    SynthConfig cfg;
    cfg.entity_len = 1;
    CHECK_THROWS_AS(gen_entity_corpus(cfg), ConfigError);
    cfg = SynthConfig{};
    cfg.vocab_size = 20;  // not enough room for entities plus noise
    CHECK_THROWS_AS(gen_entity_corpus(cfg), ConfigError);
    cfg = SynthConfig{};
    cfg.diseases = 7;  // must be even
    CHECK_THROWS_AS(gen_entity_corpus(cfg), ConfigError);
    cfg = SynthConfig{};
    cfg.diseases = 2;
    cfg.n_choices = 4;
    CHECK_THROWS_AS(gen_entity_corpus(cfg), ConfigError);
    cfg = SynthConfig{};
    cfg.vocab_size = 30;
    CHECK_THROWS_AS(gen_association_corpus(cfg), ConfigError);
}

TEST_CASE("association corpus keeps questions and gold evidence disjoint") {
    SynthConfig cfg;
    cfg.vocab_size = 160;
    cfg.diseases = 10;
    cfg.train_size = 50;
    cfg.test_size = 25;
    cfg.seed = 42;
    SynthCorpus corpus = gen_association_corpus(cfg);

    auto payload_tokens = [](const std::vector<TokenSequence>& docs) {
        std::set<std::string> out;
        for (const TokenSequence& doc : docs) {
            for (const std::string& t : doc.raw) {
                if (!t.empty() && t[0] == 'A') out.insert(t);
            }
        }
        return out;
    };

    auto scan = [&](const std::vector<QaInstance>& instances) {
        for (const QaInstance& inst : instances) {
            const std::set<std::string> q_tokens(inst.question.raw.begin(),
                                                 inst.question.raw.end());
            // zero lexical overlap with every gold evidence document
            for (const TokenSequence& doc :
                 inst.evidence[static_cast<std::size_t>(inst.answer)]) {
                for (const std::string& t : doc.raw) CHECK(q_tokens.count(t) == 0);
            }
            // distractor evidence carries the symptom set of its own disease,
            // which differs from the gold disease's symptoms
            const std::set<std::string> gold_payload =
                payload_tokens(inst.evidence[static_cast<std::size_t>(inst.answer)]);
            CHECK(!gold_payload.empty());
            for (std::size_t c = 0; c < inst.choices.size(); ++c) {
                if (static_cast<int>(c) == inst.answer) continue;
                const std::set<std::string> payload = payload_tokens(inst.evidence[c]);
                CHECK(!payload.empty());
                CHECK(payload != gold_payload);
            }
        }
    };
    scan(corpus.train);
    scan(corpus.test);
}

TEST_CASE("labels are balanced and a constant predictor scores near chance") {
    SynthConfig cfg;
    cfg.train_size = 1200;
    cfg.test_size = 10;
    SynthCorpus corpus = gen_entity_corpus(cfg);
    std::vector<std::size_t> counts(cfg.n_choices, 0);
    for (const QaInstance& inst : corpus.train) {
        ++counts[static_cast<std::size_t>(inst.answer)];
    }
    const double expected = 1.0 / static_cast<double>(cfg.n_choices);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        const double freq = static_cast<double>(counts[c]) / static_cast<double>(corpus.train.size());
        CHECK(std::abs(freq - expected) <= 0.05);
    }

    // with zeroed aggregation weights every candidate scores b_s: the
    // constant predictor always answers 0 and lands at ~1/n_c
    ModelConfig mc;
    mc.camse.scales = 2;
    mc.camse.subspaces = 2;
    mc.camse.embed_dim = cfg.embed_dim;
    mc.camse.context_units = 3;
    mc.camse.attention_units = 3;
    mc.camse.attention_hidden = 3;
    mc.camse.dropout = 0.0;
    mc.gate_hidden = 3;
    QaModel model = QaModel::create(mc, corpus.vocab, corpus.table, 1);
    model.params.find("scoring.agg.w")->value_mut().fill(0.0);
    ScoreLimits limits;
    std::size_t hits = 0;
    const std::size_t sample = 400;
    for (std::size_t i = 0; i < sample; ++i) {
        const QaInstance& inst = corpus.train[i];
        CHECK(predict(inst, model, limits) == 0);
        if (inst.answer == 0) ++hits;
    }
    const double acc = static_cast<double>(hits) / static_cast<double>(sample);
    CHECK(std::abs(acc - expected) <= 0.06);
}
