#include "camse/nn.hpp"

#include <algorithm>
#include <cmath>

namespace camse {

Var ParamStore::add(const std::string& name, Tensor init) {
    if (find(name) != nullptr) {
        throw StateError("duplicate parameter name: " + name);
    }
    names_.push_back(name);
    params_.push_back(Var::leaf(std::move(init)));
    return params_.back();
}

Var* ParamStore::find(const std::string& name) {
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i] == name) return &params_[i];
    }
    return nullptr;
}

void ParamStore::zero_grads() {
    for (Var& p : params_) p.zero_grad();
}

std::size_t ParamStore::total_values() const {
    std::size_t n = 0;
    for (const Var& p : params_) n += p.value().size();
    return n;
}

namespace nn {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

Tensor uniform_init(std::vector<std::size_t> shape, double bound, Rng& rng) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
}

LstmDirParams init_lstm_dir(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                            std::size_t units, Rng& rng) {
    LstmDirParams p;
    p.w_x = store.add(prefix + ".w_x", glorot(4 * units, input_dim, rng));
    p.w_h = store.add(prefix + ".w_h", glorot(4 * units, units, rng));
    Tensor bias({4 * units});
    for (std::size_t j = 0; j < units; ++j) bias[units + j] = 1.0;  // forget gate block
    p.b = store.add(prefix + ".b", std::move(bias));
    return p;
}

BiLstmParams init_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t units, Rng& rng) {
    BiLstmParams p;
    p.fwd = init_lstm_dir(store, prefix + ".fwd", input_dim, units, rng);
    p.bwd = init_lstm_dir(store, prefix + ".bwd", input_dim, units, rng);
    return p;
}

namespace {

// Runs one direction over the rows of x (in the given order), returning the
// hidden state per input position, indexed by original position.
std::vector<Var> run_direction(Tape* tape, const Var& x, const LstmDirParams& p, bool reverse) {
    const std::size_t n = x.value().rows();
    const std::size_t u = p.units();
    Var h = Var::constant(Tensor({u}));
    Var c = Var::constant(Tensor({u}));
    std::vector<Var> out(n);
    for (std::size_t step = 0; step < n; ++step) {
        const std::size_t t = reverse ? n - 1 - step : step;
        Var xt = ops::slice_row(tape, x, t);
        auto [h2, c2] = ops::lstm_cell(tape, xt, h, c, p.w_x, p.w_h, p.b);
        h = h2;
        c = c2;
        out[t] = h;
    }
    return out;
}

}  // namespace

Var bilstm(Tape* tape, const Var& x, const BiLstmParams& params) {
    const Tensor& xv = x.value();
    if (xv.ndim() != 2 || xv.rows() == 0) {
        throw DimensionError("bilstm: expected non-empty sequence matrix, got " + xv.shape_str());
    }
    std::vector<Var> hf = run_direction(tape, x, params.fwd, /*reverse=*/false);
    std::vector<Var> hb = run_direction(tape, x, params.bwd, /*reverse=*/true);
    Var fwd = ops::concat_rows(tape, hf);
    Var bwd = ops::concat_rows(tape, hb);
    return ops::concat_cols(tape, fwd, bwd);
}

Var bilstm_final(Tape* tape, const Var& x, const BiLstmParams& params) {
    const Tensor& xv = x.value();
    if (xv.ndim() != 2 || xv.rows() == 0) {
        throw DimensionError("bilstm_final: expected non-empty sequence matrix, got " + xv.shape_str());
    }
    std::vector<Var> hf = run_direction(tape, x, params.fwd, /*reverse=*/false);
    std::vector<Var> hb = run_direction(tape, x, params.bwd, /*reverse=*/true);
    std::vector<Var> finals = {hf.back(), hb.front()};
    return ops::concat_list(tape, finals);
}

Var conv_window(Tape* tape, const Var& e, std::size_t window, const Var& w, const Var& b) {
    const Tensor& ev = e.value();
    if (ev.ndim() != 2) throw DimensionError("conv_window: expected matrix, got " + ev.shape_str());
    if (window < 1 || window > ev.rows()) {
        throw DimensionError("conv_window: sequence length " + std::to_string(ev.rows()) +
                             " shorter than window " + std::to_string(window));
    }
    if (w.value().rows() != window * ev.cols()) {
        throw DimensionError("conv_window: weight " + w.value().shape_str() +
                             " does not match window " + std::to_string(window) + " over " +
                             ev.shape_str());
    }
    Var windows = ops::window_concat(tape, e, window);
    Var pre = ops::add_rowvec(tape, ops::matmul(tape, windows, w), b);
    return ops::tanh(tape, pre);
}

}  // namespace nn
}  // namespace camse
