#include "camse/scoring.hpp"

#include <cmath>

#include "camse/errors.hpp"

namespace camse {

void ScoringConfig::validate() const {
    if (scales < 1 || context_units < 1 || gate_hidden < 1) {
        throw ConfigError("scoring config: all sizes must be >= 1");
    }
    if (subspaces < 2) {
        throw ConfigError("scoring config: need at least 2 subspaces for off-diagonal pairs");
    }
}


ScoringParams init_scoring(ParamStore& store, const ScoringConfig& cfg, Rng& rng) {
    cfg.validate();
    ScoringParams params;
    const std::size_t width = 2 * cfg.context_units;
    params.sas_w = store.add("scoring.sas.w", nn::glorot(cfg.pair_count(), 2 * width, rng));
    if (cfg.sas_bias) {
        params.sas_b = store.add("scoring.sas.b", Tensor({cfg.pair_count()}));
    }
    for (std::size_t i = 1; i <= cfg.scales; ++i) {
        GateParams gp;
        gp.w1 = store.add("scoring.gate" + std::to_string(i) + ".w1",
                          nn::glorot(cfg.gate_hidden, cfg.subspaces * width, rng));
        gp.w2 = store.add("scoring.gate" + std::to_string(i) + ".w2",
                          nn::glorot(cfg.subspaces * cfg.subspaces, cfg.gate_hidden, rng));
        params.gates.push_back(std::move(gp));
    }
    // The SMS and SAS feature magnitudes differ by an order of r at init;
    // starting the aggregation weights at zero lets their scales be learned
    // instead of saturating the candidate softmax on step one.
    params.agg_w = store.add("scoring.agg.w", Tensor({2 * cfg.scales}));
    params.agg_b = store.add("scoring.agg.b", Tensor({1}));
    return params;
}

Var sms(Tape* tape, const Var& t1, const Var& t2, int* zero_norm_pairs) {
    return ops::rowwise_cosine(tape, t1, t2, 1e-12, zero_norm_pairs);
}

Var sas(Tape* tape, const Var& t1, const Var& t2, const ScoringParams& params) {
    const std::size_t r = t1.value().rows();
    Var pairs = ops::pair_concat(tape, t1, t2);
    Var logits = ops::rowwise_dot(tape, params.sas_w, pairs);
    if (params.sas_b.defined()) logits = ops::add(tape, logits, params.sas_b);
    Var scores = ops::sigmoid(tape, logits);
    return ops::scatter_offdiag(tape, scores, r);
}

Var gate(Tape* tape, const Var& t1, const GateParams& params, std::size_t r) {
    Var flat = ops::reshape(tape, t1, {t1.value().size()});
    Var hidden = ops::tanh(tape, ops::matvec(tape, params.w1, flat));
    Var g_flat = ops::sigmoid(tape, ops::matvec(tape, params.w2, hidden));
    return ops::reshape(tape, g_flat, {r, r});
}

std::pair<Var, Var> aggregate_scale(Tape* tape, const Var& sms_diag, const Var& sas_matrix,
                                    const Var& gate_matrix) {
    const std::size_t r = sms_diag.value().size();
    if (sas_matrix.value().ndim() != 2 || sas_matrix.value().rows() != r ||
        sas_matrix.value().cols() != r || !gate_matrix.value().same_shape(sas_matrix.value())) {
        throw DimensionError("aggregate_scale: shapes disagree: diag " +
                             sms_diag.value().shape_str() + ", sas " +
                             sas_matrix.value().shape_str() + ", gate " +
                             gate_matrix.value().shape_str());
    }
    Var o_sms = ops::dot(tape, sms_diag, ops::gather_diag(tape, gate_matrix));
    Var o_sas =
        ops::dot(tape, ops::gather_offdiag(tape, sas_matrix), ops::gather_offdiag(tape, gate_matrix));
    return {o_sms, o_sas};
}

Var score_pair(Tape* tape, const EmbeddingTensor& statement, const EmbeddingTensor& document,
               const ScoringParams& params, const ScoringConfig& cfg, ScorePack* pack) {
    if (statement.scales.size() != cfg.scales || document.scales.size() != cfg.scales) {
        throw ConfigError("score_pair: tensors carry " + std::to_string(statement.scales.size()) +
                          "/" + std::to_string(document.scales.size()) + " scales, config expects " +
                          std::to_string(cfg.scales));
    }
    if (pack) {
        pack->scales.assign(cfg.scales, {});
        pack->zero_norm_pairs = 0;
    }
    const bool use_sms = cfg.mode != ScoreMode::sas_only;
    const bool use_sas = cfg.mode != ScoreMode::sms_only;
    std::vector<Var> sms_features(cfg.scales);
    std::vector<Var> sas_features(cfg.scales);
    for (std::size_t i = 0; i < cfg.scales; ++i) {
        const Var& t1 = statement.scales[i];
        const Var& t2 = document.scales[i];
        if (!t1.value().same_shape(t2.value())) {
            throw ConfigError("score_pair: scale " + std::to_string(i + 1) + " tensors " +
                              t1.value().shape_str() + " vs " + t2.value().shape_str());
        }
        Var g = gate(tape, t1, params.gates[i], cfg.subspaces);
        Var o_sms, o_sas;
        Var diag, sas_m;
        if (use_sms) {
            diag = sms(tape, t1, t2, pack ? &pack->zero_norm_pairs : nullptr);
            o_sms = ops::dot(tape, diag, ops::gather_diag(tape, g));
        } else {
            o_sms = Var::constant(Tensor::scalar(0.0));
        }
        if (use_sas) {
            sas_m = sas(tape, t1, t2, params);
            o_sas = ops::dot(tape, ops::gather_offdiag(tape, sas_m), ops::gather_offdiag(tape, g));
        } else {
            o_sas = Var::constant(Tensor::scalar(0.0));
        }
        sms_features[i] = o_sms;
        sas_features[i] = o_sas;
        if (pack) {
            ScorePack::Scale& ps = pack->scales[i];
            ps.gate = g.value();
            ps.sms_diag = use_sms ? diag.value() : Tensor({cfg.subspaces});
            ps.sas = use_sas ? sas_m.value() : Tensor({cfg.subspaces, cfg.subspaces});
            ps.o_sms = o_sms.value().item();
            ps.o_sas = o_sas.value().item();
        }
    }
    std::vector<Var> feature_parts;
    feature_parts.reserve(2 * cfg.scales);
    for (const Var& v : sms_features) feature_parts.push_back(v);
    for (const Var& v : sas_features) feature_parts.push_back(v);
    Var features = ops::concat_list(tape, feature_parts);
    Var s = ops::add(tape, ops::dot(tape, params.agg_w, features), params.agg_b);
    if (pack) pack->score = s.value().item();
    return s;
}

}  // namespace camse
