#include "camse/encoder.hpp"

#include "camse/errors.hpp"

namespace camse {

void CamseConfig::validate() const {
    if (scales < 1 || subspaces < 1 || embed_dim < 1 || context_units < 1 ||
        attention_units < 1 || attention_hidden < 1) {
        throw ConfigError("camse config: all sizes must be >= 1");
    }
    if (dropout < 0.0 || dropout >= 1.0) {
        throw ConfigError("camse config: dropout must be in [0, 1)");
    }
}

CamseParams init_camse(ParamStore& store, const CamseConfig& cfg, Rng& rng) {
    cfg.validate();
    CamseParams params;
    params.scales.reserve(cfg.scales);
    for (std::size_t i = 1; i <= cfg.scales; ++i) {
        const std::string prefix = "encoder.scale" + std::to_string(i);
        ScaleParams sp;
        sp.conv_w = store.add(prefix + ".conv.w", nn::glorot(i * cfg.embed_dim, cfg.embed_dim, rng));
        sp.conv_b = store.add(prefix + ".conv.b", Tensor({cfg.embed_dim}));
        sp.context = nn::init_bilstm(store, prefix + ".ctx", cfg.embed_dim, cfg.context_units, rng);
        sp.attn_proj =
            store.add(prefix + ".attn_proj.w", nn::glorot(2 * cfg.context_units, cfg.attention_hidden, rng));
        sp.attention =
            nn::init_bilstm(store, prefix + ".attn", cfg.attention_hidden, cfg.attention_units, rng);
        sp.attn_out =
            store.add(prefix + ".attn_out.w", nn::glorot(2 * cfg.attention_units, cfg.subspaces, rng));
        params.scales.push_back(std::move(sp));
    }
    return params;
}

namespace {

Var maybe_dropout(const Exec& ex, const Var& x) {
    if (!ex.train || ex.dropout == 0.0) return x;
    if (!ex.rng) throw StateError("train-mode forward needs an rng for dropout");
    return ops::dropout(ex.tape, x, ex.dropout, *ex.rng);
}

}  // namespace

std::vector<Var> multi_scale_context(const Exec& ex, const Var& e, const CamseParams& params) {
    const std::size_t n = e.value().rows();
    const std::size_t k = params.scales.size();
    if (n < k) {
        throw DimensionError("multi_scale_context: sequence of length " + std::to_string(n) +
                             " shorter than largest window " + std::to_string(k));
    }
    std::vector<Var> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const ScaleParams& sp = params.scales[i];
        Var conv = nn::conv_window(ex.tape, e, i + 1, sp.conv_w, sp.conv_b);
        Var h = nn::bilstm(ex.tape, conv, sp.context);
        out.push_back(maybe_dropout(ex, h));
    }
    return out;
}

Var contextual_attention(const Exec& ex, const Var& h, const ScaleParams& scale) {
    Var m1 = ops::tanh(ex.tape, ops::matmul(ex.tape, h, scale.attn_proj));
    m1 = maybe_dropout(ex, m1);
    Var m2 = nn::bilstm(ex.tape, m1, scale.attention);
    Var logits = ops::matmul(ex.tape, m2, scale.attn_out);
    return ops::softmax(ex.tape, logits, ops::Axis::cols);
}

Var embed_tensor(Tape* tape, const Var& h, const Var& a) {
    if (a.value().rows() != h.value().rows()) {
        throw DimensionError("embed_tensor: attention " + a.value().shape_str() +
                             " does not align with encodings " + h.value().shape_str());
    }
    return ops::matmul_tn(tape, a, h);
}

EmbeddingTensor encode(const Exec& ex, const TokenSequence& seq, const Var& table,
                       const CamseParams& params, const CamseConfig& cfg) {
    if (seq.length() < cfg.scales) {
        throw DimensionError("encode: sequence of length " + std::to_string(seq.length()) +
                             " shorter than largest window " + std::to_string(cfg.scales));
    }
    Var e = ops::lookup_rows(ex.tape, table, seq.ids);
    std::vector<Var> contexts = multi_scale_context(ex, e, params);
    EmbeddingTensor out;
    out.scales.reserve(contexts.size());
    out.attention.reserve(contexts.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        Var a = contextual_attention(ex, contexts[i], params.scales[i]);
        out.attention.push_back(a);
        out.scales.push_back(embed_tensor(ex.tape, contexts[i], a));
    }
    return out;
}

}  // namespace camse
