#pragma once

#include <string>
#include <utility>
#include <vector>

#include "camse/autodiff.hpp"
#include "camse/errors.hpp"
#include "camse/rng.hpp"
#include "camse/tensor.hpp"

namespace camse {

// Named, ordered collection of trainable leaves. Registration order is the
// canonical order for the optimizer and for checkpoint serialization.
class ParamStore {
  public:
    Var add(const std::string& name, Tensor init);
    std::size_t size() const { return params_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Var& at(std::size_t i) { return params_[i]; }
    const Var& at(std::size_t i) const { return params_[i]; }
    Var* find(const std::string& name);
    void zero_grads();
    std::size_t total_values() const;

  private:
    std::vector<std::string> names_;
    std::vector<Var> params_;
};

namespace nn {

// Glorot-uniform over the full matrix dimensions; biases are zeroed by the
// callers that want zeros.
Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng);
Tensor uniform_init(std::vector<std::size_t> shape, double bound, Rng& rng);

struct LstmDirParams {
    Var w_x;  // 4u x d_in, gate rows [input, forget, candidate, output]
    Var w_h;  // 4u x u
    Var b;    // 4u, forget block initialized to +1
    std::size_t units() const { return w_h.value().cols(); }
};

struct BiLstmParams {
    LstmDirParams fwd;
    LstmDirParams bwd;
    std::size_t units() const { return fwd.units(); }
};

LstmDirParams init_lstm_dir(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                            std::size_t units, Rng& rng);
BiLstmParams init_bilstm(ParamStore& store, const std::string& prefix, std::size_t input_dim,
                         std::size_t units, Rng& rng);

// Full sequence pass, h0 = c0 = 0. Output row t is [h_fwd(t) , h_bwd(t)].
Var bilstm(Tape* tape, const Var& x, const BiLstmParams& params);
// Concatenated final states [h_fwd(n-1) , h_bwd(0)] without materializing
// the full output matrix.
Var bilstm_final(Tape* tape, const Var& x, const BiLstmParams& params);

// Valid convolution: row t = tanh([e_t, ..., e_{t+window-1}] W + b).
// Output has n - window + 1 rows.
Var conv_window(Tape* tape, const Var& e, std::size_t window, const Var& w, const Var& b);

}  // namespace nn
}  // namespace camse
