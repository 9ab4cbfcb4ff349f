#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "camse/rng.hpp"
#include "camse/tensor.hpp"

namespace camse {

// Shared handle to a value in the computation graph. Constants carry no
// gradient buffer; tracked vars (parameters and anything computed from
// them under a tape) own a grad tensor of the same shape. Like any shared
// handle, a const Var still exposes its mutable payload.
class Var {
  public:
    Var() = default;

    static Var constant(Tensor v);
    // Grad-tracked leaf; parameters are created through this.
    static Var leaf(Tensor v);

    bool defined() const { return static_cast<bool>(n_); }
    const Tensor& value() const { return n_->value; }
    Tensor& value_mut() const { return n_->value; }
    Tensor& grad() const { return n_->grad; }
    bool tracks_grad() const { return n_ && n_->tracks; }
    void zero_grad() const;

    bool same_node(const Var& o) const { return n_ == o.n_; }

  private:
    struct Node {
        Tensor value;
        Tensor grad;  // empty unless tracks
        bool tracks = false;
    };
    std::shared_ptr<Node> n_;
    friend class Tape;
    friend Var make_tracked(Tensor v);
};

// Creates a tracked non-leaf output (used by op implementations).
Var make_tracked(Tensor v);

// Ordered record of executed operations. backward() replays adjoints in
// exact reverse execution order, visiting every node once. A consumed tape
// must be reset before another backward.
class Tape {
  public:
    void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }
    std::size_t size() const { return nodes_.size(); }
    void backward(const Var& loss);
    void reset();

  private:
    std::vector<std::function<void()>> nodes_;
    bool consumed_ = false;
};

// Enumeration of the r(r-1) ordered off-diagonal pairs of an r x r grid:
// index p runs u-major over v != u. Shared by the SAS parameter layout and
// the gather/scatter ops so checkpoints stay stable.
inline std::pair<std::size_t, std::size_t> offdiag_pair(std::size_t p, std::size_t r) {
    std::size_t u = p / (r - 1);
    std::size_t j = p % (r - 1);
    return {u, j + (j >= u ? 1 : 0)};
}

namespace ops {

enum class Axis { rows, cols };

// Elementwise / linear algebra. Every op validates shapes and records its
// adjoint on the tape when tape != nullptr and an input tracks gradients.
Var add(Tape* tape, const Var& a, const Var& b);
Var mul(Tape* tape, const Var& a, const Var& b);
Var scale(Tape* tape, const Var& a, double c);
Var add_rowvec(Tape* tape, const Var& m, const Var& v);
Var matmul(Tape* tape, const Var& a, const Var& b);
// A^T * B with A: n x r, B: n x d -> r x d.
Var matmul_tn(Tape* tape, const Var& a, const Var& b);
Var matvec(Tape* tape, const Var& w, const Var& x);
Var tanh(Tape* tape, const Var& x);
Var sigmoid(Tape* tape, const Var& x);
Var softmax(Tape* tape, const Var& m, Axis axis);
Var log_softmax_vec(Tape* tape, const Var& x);
Var pick(Tape* tape, const Var& x, std::size_t idx);
Var sum(Tape* tape, const Var& x);
Var dot(Tape* tape, const Var& a, const Var& b);
Var cosine(Tape* tape, const Var& a, const Var& b, double eps = 1e-12);

// Structure ops.
Var reshape(Tape* tape, const Var& x, std::vector<std::size_t> shape);
Var slice_row(Tape* tape, const Var& m, std::size_t row);
Var slice_vec(Tape* tape, const Var& x, std::size_t offset, std::size_t len);
Var concat_rows(Tape* tape, std::span<const Var> rows);
Var concat_cols(Tape* tape, const Var& a, const Var& b);
Var concat_list(Tape* tape, std::span<const Var> parts);  // 1-D concat
// Row t of the output is the concatenation of rows t..t+window-1 of e.
Var window_concat(Tape* tape, const Var& e, std::size_t window);
Var lookup_rows(Tape* tape, const Var& table, const std::vector<int>& ids);

// Inverted dropout (train-time scaling); eval path never calls this.
Var dropout(Tape* tape, const Var& x, double rate, Rng& rng);

// Fused LSTM step. Weight rows are the [input, forget, candidate, output]
// gate blocks. Returns (h, c).
std::pair<Var, Var> lstm_cell(Tape* tape, const Var& x, const Var& h_prev, const Var& c_prev,
                              const Var& w_x, const Var& w_h, const Var& b);

// Row-paired reductions used by the scoring module.
Var rowwise_dot(Tape* tape, const Var& a, const Var& b);
Var rowwise_cosine(Tape* tape, const Var& a, const Var& b, double eps = 1e-12,
                   int* zero_norm_pairs = nullptr);
// P[p] = [a_u , b_v] over ordered off-diagonal pairs (u, v).
Var pair_concat(Tape* tape, const Var& a, const Var& b);
Var gather_diag(Tape* tape, const Var& m);
Var gather_offdiag(Tape* tape, const Var& m);
Var scatter_offdiag(Tape* tape, const Var& v, std::size_t r);

}  // namespace ops
}  // namespace camse
