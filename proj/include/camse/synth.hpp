#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "camse/qa.hpp"
#include "camse/text.hpp"

namespace camse {

struct SynthConfig {
    std::size_t vocab_size = 200;
    std::size_t diseases = 12;  // even: diseases come in confusable sibling pairs
    std::size_t entity_len = 3;
    std::size_t causes_per_disease = 3;
    std::size_t symptoms_per_disease = 3;
    std::size_t question_len = 12;
    std::size_t doc_len = 8;
    std::size_t docs_per_choice = 2;
    std::size_t n_choices = 4;
    std::size_t train_size = 500;
    std::size_t test_size = 200;
    std::size_t embed_dim = 32;
    // Noise tokens drawn per side (question/document). 0 spends the whole
    // remaining vocab budget; a small pool makes individual noise tokens
    // frequent and therefore carry no label signal.
    std::size_t noise_tokens_per_side = 0;
    std::uint64_t seed = 7;
};

struct SynthCorpus {
    std::vector<QaInstance> train;
    std::vector<QaInstance> test;
    Vocabulary vocab;
    EmbeddingTable table;
};

// Multi-word entity binding corpus. Each disease is a multi-token entity;
// sibling diseases share the full token multiset (common head, last two
// tokens swapped), so unigram overlap between a question and the sibling's
// evidence is total while the word order differs. Choices are single
// disease-code tokens; the correct choice's evidence contains the question's
// entity, the sibling distractor's evidence contains the permuted entity.
SynthCorpus gen_entity_corpus(const SynthConfig& cfg);

// Cross-subspace association corpus. Each disease has a cause token set
// and a symptom token set arranged in a directed cycle (the symptoms of
// disease d are the causes of d+1); questions mention only causes, evidence
// only symptoms, and document noise avoids the question's tokens, so a
// question and its gold evidence share zero tokens. The answer is learnable
// only through directed cause-symptom co-occurrence, and plain lexical
// overlap favors a distractor.
SynthCorpus gen_association_corpus(const SynthConfig& cfg);

// Writes train.jsonl, test.jsonl, embeddings.txt and manifest.json.
void write_corpus(const SynthCorpus& corpus, const SynthConfig& cfg, const std::string& kind,
                  const std::string& dir);

}  // namespace camse
