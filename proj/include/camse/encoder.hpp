#pragma once

#include <vector>

#include "camse/autodiff.hpp"
#include "camse/nn.hpp"
#include "camse/text.hpp"

namespace camse {

struct CamseConfig {
    std::size_t scales = 3;          // k: convolution windows 1..k
    std::size_t subspaces = 15;      // r
    std::size_t embed_dim = 200;     // d
    std::size_t context_units = 128;    // u1, one direction
    std::size_t attention_units = 128;  // u2, one direction
    std::size_t attention_hidden = 100; // d_a
    double dropout = 0.2;
    void validate() const;
    std::size_t encoding_width() const { return 2 * context_units; }
};

// Every scale owns a disjoint parameter group.
struct ScaleParams {
    Var conv_w;  // (i*d) x d
    Var conv_b;  // d
    nn::BiLstmParams context;    // d -> 2u1
    Var attn_proj;               // 2u1 x d_a
    nn::BiLstmParams attention;  // d_a -> 2u2
    Var attn_out;                // 2u2 x r
};

struct CamseParams {
    std::vector<ScaleParams> scales;
};

CamseParams init_camse(ParamStore& store, const CamseConfig& cfg, Rng& rng);

// Per-forward execution context: tape for training, dropout stream when
// train is set.
struct Exec {
    Tape* tape = nullptr;
    bool train = false;
    double dropout = 0.0;
    Rng* rng = nullptr;
};

// Sentence embedding tensor: one r x 2u1 slice per scale, with the
// attention matrices retained for inspection.
struct EmbeddingTensor {
    std::vector<Var> scales;     // T^i
    std::vector<Var> attention;  // A^i: n_i x r
};

// Per-scale contextual encodings H^i = bilstm_i(conv_i(E)), n_i = n - i + 1.
std::vector<Var> multi_scale_context(const Exec& ex, const Var& e, const CamseParams& params);

// A^i = softmax_cols(bilstm(tanh(H W_s1)) W_s2); each of the r columns sums
// to 1 over the sequence positions.
Var contextual_attention(const Exec& ex, const Var& h, const ScaleParams& scale);

// T^i = (A^i)^T H^i: attention-weighted summaries per subspace.
Var embed_tensor(Tape* tape, const Var& h, const Var& a);

EmbeddingTensor encode(const Exec& ex, const TokenSequence& seq, const Var& table,
                       const CamseParams& params, const CamseConfig& cfg);

}  // namespace camse
