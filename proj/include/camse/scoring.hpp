#pragma once

#include <utility>
#include <vector>

#include "camse/autodiff.hpp"
#include "camse/encoder.hpp"
#include "camse/nn.hpp"

namespace camse {

enum class ScoreMode { sms_sas, sms_only, sas_only };

struct ScoringConfig {
    std::size_t scales = 3;         // k, must match the encoder
    std::size_t subspaces = 15;     // r
    std::size_t context_units = 128;  // u1
    std::size_t gate_hidden = 128;  // h_g
    bool sas_bias = true;
    ScoreMode mode = ScoreMode::sms_sas;
    std::size_t pair_count() const { return subspaces * (subspaces - 1); }
    void validate() const;
};

struct GateParams {
    Var w1;  // h_g x (r * 2u1)
    Var w2;  // r^2 x h_g
};

struct ScoringParams {
    Var sas_w;                      // r(r-1) x 4u1, rows in offdiag_pair order
    Var sas_b;                      // r(r-1); undefined when sas_bias is off
    std::vector<GateParams> gates;  // one per scale
    Var agg_w;                      // 2k, ordered [O_sms^1..k, O_sas^1..k]
    Var agg_b;                      // 1
};

ScoringParams init_scoring(ParamStore& store, const ScoringConfig& cfg, Rng& rng);

// Diagnostics of one scored pair, for the inspection dumps.
struct ScorePack {
    struct Scale {
        Tensor sms_diag;   // r
        Tensor sas;        // r x r, zero diagonal
        Tensor gate;       // r x r
        double o_sms = 0.0;
        double o_sas = 0.0;
    };
    std::vector<Scale> scales;
    double score = 0.0;
    int zero_norm_pairs = 0;
};

// Cosine between aligned subspace rows; zero-norm rows score 0 and are
// counted in zero_norm_pairs.
Var sms(Tape* tape, const Var& t1, const Var& t2, int* zero_norm_pairs = nullptr);

// sigmoid(w_uv . [t1_u, t2_v] + b_uv) for u != v, returned as an r x r
// matrix with a zero diagonal (diagonal parameters are never allocated).
Var sas(Tape* tape, const Var& t1, const Var& t2, const ScoringParams& params);

// Statement-dependent gate: sigmoid(W_g2 tanh(W_g1 flatten(t1))) reshaped
// to r x r. Depends only on the statement tensor.
Var gate(Tape* tape, const Var& t1, const GateParams& params, std::size_t r);

// Diagonal mask for SMS, off-diagonal mask for SAS, then total sums:
// returns (O_sms, O_sas).
std::pair<Var, Var> aggregate_scale(Tape* tape, const Var& sms_diag, const Var& sas_matrix,
                                    const Var& gate_matrix);

// S = w_s . [O_sms^1..k, O_sas^1..k] + b_s over all scales.
Var score_pair(Tape* tape, const EmbeddingTensor& statement, const EmbeddingTensor& document,
               const ScoringParams& params, const ScoringConfig& cfg, ScorePack* pack = nullptr);

}  // namespace camse
