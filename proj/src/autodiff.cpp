#include "camse/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "camse/errors.hpp"

namespace camse {

Var Var::constant(Tensor v) {
    Var out;
    out.n_ = std::make_shared<Node>();
    out.n_->value = std::move(v);
    return out;
}

Var Var::leaf(Tensor v) {
    Var out;
    out.n_ = std::make_shared<Node>();
    out.n_->grad = Tensor::zeros_like(v);
    out.n_->value = std::move(v);
    out.n_->tracks = true;
    return out;
}

void Var::zero_grad() const {
    if (n_ && n_->tracks) n_->grad.fill(0.0);
}

Var make_tracked(Tensor v) { return Var::leaf(std::move(v)); }

void Tape::backward(const Var& loss) {
    if (consumed_) {
        throw StateError("tape already consumed by backward; reset() before reuse");
    }
    if (!loss.defined() || loss.value().size() != 1) {
        throw DimensionError("backward requires a scalar loss, got " +
                             (loss.defined() ? loss.value().shape_str() : std::string("<undefined>")));
    }
    consumed_ = true;
    if (loss.tracks_grad()) {
        loss.grad()[0] = 1.0;
    }
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

void Tape::reset() {
    nodes_.clear();
    consumed_ = false;
}

namespace ops {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                         b.shape_str());
}

bool want_grad(Tape* tape, std::initializer_list<const Var*> inputs) {
    if (!tape) return false;
    for (const Var* v : inputs) {
        if (v->tracks_grad()) return true;
    }
    return false;
}

// y += W^T * g  with W: n x m, g: n
void add_matT_vec(Tensor& y, const Tensor& w, const double* g) {
    const std::size_t n = w.rows(), m = w.cols();
    double* yd = y.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* wi = w.row(i);
        for (std::size_t j = 0; j < m; ++j) yd[j] += gi * wi[j];
    }
}

// W += g (n) outer x (m)
void add_outer(Tensor& w, const double* g, const double* x, std::size_t n, std::size_t m) {
    for (std::size_t i = 0; i < n; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        double* wi = w.row(i);
        for (std::size_t j = 0; j < m; ++j) wi[j] += gi * x[j];
    }
}

}  // namespace

Var add(Tape* tape, const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) shape_error("add", a.value(), b.value());
    Tensor out = a.value();
    const double* bd = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bd[i];
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([a, b, c]() {
        const Tensor& g = c.grad();
        if (a.tracks_grad()) {
            double* ga = a.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (b.tracks_grad()) {
            double* gb = b.grad().data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
    return c;
}

Var mul(Tape* tape, const Var& a, const Var& b) {
    if (!a.value().same_shape(b.value())) shape_error("mul", a.value(), b.value());
    Tensor out = a.value();
    const double* bd = b.value().data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bd[i];
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([a, b, c]() {
        const Tensor& g = c.grad();
        if (a.tracks_grad()) {
            double* ga = a.grad().data();
            const double* bv = b.value().data();
            for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (b.tracks_grad()) {
            double* gb = b.grad().data();
            const double* av = a.value().data();
            for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
        }
    });
    return c;
}

Var scale(Tape* tape, const Var& a, double k) {
    Tensor out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= k;
    if (!want_grad(tape, {&a})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([a, c, k]() {
        const Tensor& g = c.grad();
        double* ga = a.grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
    });
    return c;
}

Var add_rowvec(Tape* tape, const Var& m, const Var& v) {
    const Tensor& mv = m.value();
    const Tensor& vv = v.value();
    if (mv.ndim() != 2 || vv.ndim() != 1 || mv.cols() != vv.size()) {
        shape_error("add_rowvec", mv, vv);
    }
    Tensor out = mv;
    const std::size_t n = mv.rows(), d = mv.cols();
    for (std::size_t i = 0; i < n; ++i) {
        double* r = out.row(i);
        for (std::size_t j = 0; j < d; ++j) r[j] += vv[j];
    }
    if (!want_grad(tape, {&m, &v})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([m, v, c, n, d]() {
        const Tensor& g = c.grad();
        if (m.tracks_grad()) {
            double* gm = m.grad().data();
            const double* gd = g.data();
            for (std::size_t i = 0; i < g.size(); ++i) gm[i] += gd[i];
        }
        if (v.tracks_grad()) {
            double* gv = v.grad().data();
            for (std::size_t i = 0; i < n; ++i) {
                const double* gr = g.row(i);
                for (std::size_t j = 0; j < d; ++j) gv[j] += gr[j];
            }
        }
    });
    return c;
}

Var matmul(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || bv.ndim() != 2 || av.cols() != bv.rows()) {
        shape_error("matmul", av, bv);
    }
    const std::size_t n = av.rows(), m = av.cols(), p = bv.cols();
    Tensor out({n, p});
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = av.row(i);
        double* cr = out.row(i);
        for (std::size_t k = 0; k < m; ++k) {
            const double aik = ar[k];
            if (aik == 0.0) continue;
            const double* br = bv.row(k);
            for (std::size_t j = 0; j < p; ++j) cr[j] += aik * br[j];
        }
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([a, b, c, n, m, p]() {
        const Tensor& g = c.grad();
        if (a.tracks_grad()) {
            // dA += dC * B^T
            Tensor& ga = a.grad();
            const Tensor& bv2 = b.value();
            for (std::size_t i = 0; i < n; ++i) {
                const double* gr = g.row(i);
                double* gar = ga.row(i);
                for (std::size_t k = 0; k < m; ++k) {
                    const double* br = bv2.row(k);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < p; ++j) acc += gr[j] * br[j];
                    gar[k] += acc;
                }
            }
        }
        if (b.tracks_grad()) {
            // dB += A^T * dC
            Tensor& gb = b.grad();
            const Tensor& av2 = a.value();
            for (std::size_t i = 0; i < n; ++i) {
                const double* ar = av2.row(i);
                const double* gr = g.row(i);
                for (std::size_t k = 0; k < m; ++k) {
                    const double aik = ar[k];
                    if (aik == 0.0) continue;
                    double* gbr = gb.row(k);
                    for (std::size_t j = 0; j < p; ++j) gbr[j] += aik * gr[j];
                }
            }
        }
    });
    return c;
}

Var matmul_tn(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || bv.ndim() != 2 || av.rows() != bv.rows()) {
        shape_error("matmul_tn", av, bv);
    }
    const std::size_t n = av.rows(), r = av.cols(), d = bv.cols();
    Tensor out({r, d});
    for (std::size_t t = 0; t < n; ++t) {
        const double* ar = av.row(t);
        const double* br = bv.row(t);
        for (std::size_t i = 0; i < r; ++i) {
            const double ati = ar[i];
            if (ati == 0.0) continue;
            double* cr = out.row(i);
            for (std::size_t j = 0; j < d; ++j) cr[j] += ati * br[j];
        }
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var c = make_tracked(std::move(out));
    tape->record([a, b, c, n, r, d]() {
        const Tensor& g = c.grad();
        if (a.tracks_grad()) {
            // dA_{ti} += sum_j B_{tj} dC_{ij}
            Tensor& ga = a.grad();
            const Tensor& bv2 = b.value();
            for (std::size_t t = 0; t < n; ++t) {
                const double* br = bv2.row(t);
                double* gar = ga.row(t);
                for (std::size_t i = 0; i < r; ++i) {
                    const double* gr = g.row(i);
                    double acc = 0.0;
                    for (std::size_t j = 0; j < d; ++j) acc += br[j] * gr[j];
                    gar[i] += acc;
                }
            }
        }
        if (b.tracks_grad()) {
            // dB_{tj} += sum_i A_{ti} dC_{ij}
            Tensor& gb = b.grad();
            const Tensor& av2 = a.value();
            for (std::size_t t = 0; t < n; ++t) {
                const double* ar = av2.row(t);
                double* gbr = gb.row(t);
                for (std::size_t i = 0; i < r; ++i) {
                    const double ati = ar[i];
                    if (ati == 0.0) continue;
                    const double* gr = g.row(i);
                    for (std::size_t j = 0; j < d; ++j) gbr[j] += ati * gr[j];
                }
            }
        }
    });
    return c;
}

Var matvec(Tape* tape, const Var& w, const Var& x) {
    const Tensor& wv = w.value();
    const Tensor& xv = x.value();
    if (wv.ndim() != 2 || xv.ndim() != 1 || wv.cols() != xv.size()) {
        shape_error("matvec", wv, xv);
    }
    const std::size_t n = wv.rows(), m = wv.cols();
    Tensor out({n});
    const double* xd = xv.data();
    for (std::size_t i = 0; i < n; ++i) {
        const double* wr = wv.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += wr[j] * xd[j];
        out[i] = acc;
    }
    if (!want_grad(tape, {&w, &x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([w, x, y, n, m]() {
        const Tensor& g = y.grad();
        if (w.tracks_grad()) add_outer(w.grad(), g.data(), x.value().data(), n, m);
        if (x.tracks_grad()) add_matT_vec(x.grad(), w.value(), g.data());
    });
    return y;
}

Var tanh(Tape* tape, const Var& x) {
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y]() {
        const Tensor& g = y.grad();
        const Tensor& yv = y.value();
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (1.0 - yv[i] * yv[i]);
    });
    return y;
}

Var sigmoid(Tape* tape, const Var& x) {
    Tensor out = x.value();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = out[i];
        // Split on sign so exp never overflows.
        out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y]() {
        const Tensor& g = y.grad();
        const Tensor& yv = y.value();
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * yv[i] * (1.0 - yv[i]);
    });
    return y;
}

Var softmax(Tape* tape, const Var& m, Axis axis) {
    const Tensor& mv = m.value();
    if (mv.ndim() != 2) throw DimensionError("softmax: expected matrix, got " + mv.shape_str());
    const std::size_t n = mv.rows(), r = mv.cols();
    Tensor out({n, r});
    if (axis == Axis::cols) {
        // Each of the r columns is normalized over the n rows.
        for (std::size_t j = 0; j < r; ++j) {
            double mx = mv.at(0, j);
            for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, mv.at(i, j));
            double z = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double e = std::exp(mv.at(i, j) - mx);
                out.at(i, j) = e;
                z += e;
            }
            for (std::size_t i = 0; i < n; ++i) out.at(i, j) /= z;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double* src = mv.row(i);
            double* dst = out.row(i);
            double mx = src[0];
            for (std::size_t j = 1; j < r; ++j) mx = std::max(mx, src[j]);
            double z = 0.0;
            for (std::size_t j = 0; j < r; ++j) {
                dst[j] = std::exp(src[j] - mx);
                z += dst[j];
            }
            for (std::size_t j = 0; j < r; ++j) dst[j] /= z;
        }
    }
    if (!want_grad(tape, {&m})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([m, y, n, r, axis]() {
        // dx = y * (dy - sum(y * dy)) per normalized slice
        const Tensor& g = y.grad();
        const Tensor& yv = y.value();
        Tensor& gm = m.grad();
        if (axis == Axis::cols) {
            for (std::size_t j = 0; j < r; ++j) {
                double s = 0.0;
                for (std::size_t i = 0; i < n; ++i) s += yv.at(i, j) * g.at(i, j);
                for (std::size_t i = 0; i < n; ++i) {
                    gm.at(i, j) += yv.at(i, j) * (g.at(i, j) - s);
                }
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                const double* yr = yv.row(i);
                const double* gr = g.row(i);
                double s = 0.0;
                for (std::size_t j = 0; j < r; ++j) s += yr[j] * gr[j];
                double* gmr = gm.row(i);
                for (std::size_t j = 0; j < r; ++j) gmr[j] += yr[j] * (gr[j] - s);
            }
        }
    });
    return y;
}

Var log_softmax_vec(Tape* tape, const Var& x) {
    const Tensor& xv = x.value();
    if (xv.ndim() != 1) throw DimensionError("log_softmax_vec: expected vector, got " + xv.shape_str());
    const std::size_t n = xv.size();
    double mx = xv[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, xv[i]);
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(xv[i] - mx);
    const double lse = mx + std::log(z);
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) out[i] = xv[i] - lse;
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y, n]() {
        const Tensor& g = y.grad();
        const Tensor& yv = y.value();
        double gs = 0.0;
        for (std::size_t i = 0; i < n; ++i) gs += g[i];
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < n; ++i) gx[i] += g[i] - std::exp(yv[i]) * gs;
    });
    return y;
}

Var pick(Tape* tape, const Var& x, std::size_t idx) {
    const Tensor& xv = x.value();
    if (xv.ndim() != 1 || idx >= xv.size()) {
        throw DimensionError("pick: index " + std::to_string(idx) + " out of range for " +
                             xv.shape_str());
    }
    Tensor out = Tensor::scalar(xv[idx]);
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y, idx]() { x.grad()[idx] += y.grad()[0]; });
    return y;
}

Var sum(Tape* tape, const Var& x) {
    double acc = 0.0;
    const Tensor& xv = x.value();
    for (std::size_t i = 0; i < xv.size(); ++i) acc += xv[i];
    Tensor out = Tensor::scalar(acc);
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y]() {
        const double g = y.grad()[0];
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < x.value().size(); ++i) gx[i] += g;
    });
    return y;
}

Var dot(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.size() != bv.size()) shape_error("dot", av, bv);
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
    Tensor out = Tensor::scalar(acc);
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y]() {
        const double g = y.grad()[0];
        if (a.tracks_grad()) {
            double* ga = a.grad().data();
            const double* bd = b.value().data();
            for (std::size_t i = 0; i < b.value().size(); ++i) ga[i] += g * bd[i];
        }
        if (b.tracks_grad()) {
            double* gb = b.grad().data();
            const double* ad = a.value().data();
            for (std::size_t i = 0; i < a.value().size(); ++i) gb[i] += g * ad[i];
        }
    });
    return y;
}

namespace {

struct CosineParts {
    double na, nb, denom, cos;
    bool guarded;
};

CosineParts cosine_forward(const double* a, const double* b, std::size_t n, double eps) {
    double dab = 0.0, na2 = 0.0, nb2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        dab += a[i] * b[i];
        na2 += a[i] * a[i];
        nb2 += b[i] * b[i];
    }
    CosineParts p;
    p.na = std::sqrt(na2);
    p.nb = std::sqrt(nb2);
    const double raw = p.na * p.nb;
    p.guarded = raw < eps;
    p.denom = p.guarded ? eps : raw;
    p.cos = p.guarded ? 0.0 : dab / p.denom;
    return p;
}

// da += g * (b / (na*nb) - cos * a / na^2), symmetric for db. Flat when guarded.
void cosine_backward(double g, const double* a, const double* b, std::size_t n,
                     const CosineParts& p, double* ga, double* gb) {
    if (p.guarded || g == 0.0) return;
    const double inv = 1.0 / p.denom;
    const double ia2 = 1.0 / (p.na * p.na);
    const double ib2 = 1.0 / (p.nb * p.nb);
    for (std::size_t i = 0; i < n; ++i) {
        if (ga) ga[i] += g * (b[i] * inv - p.cos * a[i] * ia2);
        if (gb) gb[i] += g * (a[i] * inv - p.cos * b[i] * ib2);
    }
}

}  // namespace

Var cosine(Tape* tape, const Var& a, const Var& b, double eps) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.size() != bv.size()) shape_error("cosine", av, bv);
    const std::size_t n = av.size();
    CosineParts p = cosine_forward(av.data(), bv.data(), n, eps);
    Tensor out = Tensor::scalar(p.cos);
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y, n, p]() {
        cosine_backward(y.grad()[0], a.value().data(), b.value().data(), n, p,
                        a.tracks_grad() ? a.grad().data() : nullptr,
                        b.tracks_grad() ? b.grad().data() : nullptr);
    });
    return y;
}

Var reshape(Tape* tape, const Var& x, std::vector<std::size_t> shape) {
    Tensor out(std::move(shape), x.value().vec());
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y]() {
        const Tensor& g = y.grad();
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
    return y;
}

Var slice_row(Tape* tape, const Var& m, std::size_t row) {
    const Tensor& mv = m.value();
    if (mv.ndim() != 2 || row >= mv.rows()) {
        throw DimensionError("slice_row: row " + std::to_string(row) + " out of range for " +
                             mv.shape_str());
    }
    const std::size_t d = mv.cols();
    Tensor out({d});
    const double* src = mv.row(row);
    std::copy(src, src + d, out.data());
    if (!want_grad(tape, {&m})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([m, y, row, d]() {
        const Tensor& g = y.grad();
        double* gr = m.grad().row(row);
        for (std::size_t j = 0; j < d; ++j) gr[j] += g[j];
    });
    return y;
}

Var slice_vec(Tape* tape, const Var& x, std::size_t offset, std::size_t len) {
    const Tensor& xv = x.value();
    if (xv.ndim() != 1 || offset + len > xv.size()) {
        throw DimensionError("slice_vec: range [" + std::to_string(offset) + ", " +
                             std::to_string(offset + len) + ") out of bounds for " + xv.shape_str());
    }
    Tensor out({len});
    std::copy(xv.data() + offset, xv.data() + offset + len, out.data());
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y, offset, len]() {
        const Tensor& g = y.grad();
        double* gx = x.grad().data() + offset;
        for (std::size_t j = 0; j < len; ++j) gx[j] += g[j];
    });
    return y;
}

Var concat_rows(Tape* tape, std::span<const Var> rows) {
    if (rows.empty()) throw DimensionError("concat_rows: empty row list");
    const std::size_t d = rows[0].value().size();
    const std::size_t n = rows.size();
    Tensor out({n, d});
    bool any_grad = false;
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor& rv = rows[i].value();
        if (rv.ndim() != 1 || rv.size() != d) shape_error("concat_rows", rows[0].value(), rv);
        std::copy(rv.data(), rv.data() + d, out.row(i));
        any_grad = any_grad || rows[i].tracks_grad();
    }
    if (!tape || !any_grad) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    std::vector<Var> captured(rows.begin(), rows.end());
    tape->record([captured = std::move(captured), y, d]() {
        const Tensor& g = y.grad();
        for (std::size_t i = 0; i < captured.size(); ++i) {
            if (!captured[i].tracks_grad()) continue;
            double* gr = captured[i].grad().data();
            const double* gs = g.row(i);
            for (std::size_t j = 0; j < d; ++j) gr[j] += gs[j];
        }
    });
    return y;
}

Var concat_cols(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || bv.ndim() != 2 || av.rows() != bv.rows()) {
        shape_error("concat_cols", av, bv);
    }
    const std::size_t n = av.rows(), da = av.cols(), db = bv.cols();
    Tensor out({n, da + db});
    for (std::size_t i = 0; i < n; ++i) {
        double* dst = out.row(i);
        std::copy(av.row(i), av.row(i) + da, dst);
        std::copy(bv.row(i), bv.row(i) + db, dst + da);
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y, n, da, db]() {
        const Tensor& g = y.grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double* gr = g.row(i);
            if (a.tracks_grad()) {
                double* ga = a.grad().row(i);
                for (std::size_t j = 0; j < da; ++j) ga[j] += gr[j];
            }
            if (b.tracks_grad()) {
                double* gb = b.grad().row(i);
                for (std::size_t j = 0; j < db; ++j) gb[j] += gr[da + j];
            }
        }
    });
    return y;
}

Var concat_list(Tape* tape, std::span<const Var> parts) {
    if (parts.empty()) throw DimensionError("concat_list: empty part list");
    std::size_t total = 0;
    bool any_grad = false;
    for (const Var& p : parts) {
        if (p.value().ndim() != 1) {
            throw DimensionError("concat_list: expected vectors, got " + p.value().shape_str());
        }
        total += p.value().size();
        any_grad = any_grad || p.tracks_grad();
    }
    Tensor out({total});
    std::size_t off = 0;
    for (const Var& p : parts) {
        std::copy(p.value().data(), p.value().data() + p.value().size(), out.data() + off);
        off += p.value().size();
    }
    if (!tape || !any_grad) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    std::vector<Var> captured(parts.begin(), parts.end());
    tape->record([captured = std::move(captured), y]() {
        const Tensor& g = y.grad();
        std::size_t off2 = 0;
        for (const Var& p : captured) {
            const std::size_t len = p.value().size();
            if (p.tracks_grad()) {
                double* gp = p.grad().data();
                for (std::size_t j = 0; j < len; ++j) gp[j] += g[off2 + j];
            }
            off2 += len;
        }
    });
    return y;
}

Var window_concat(Tape* tape, const Var& e, std::size_t window) {
    const Tensor& ev = e.value();
    if (ev.ndim() != 2) throw DimensionError("window_concat: expected matrix, got " + ev.shape_str());
    const std::size_t n = ev.rows(), d = ev.cols();
    if (window < 1 || window > n) {
        throw DimensionError("window_concat: sequence of length " + std::to_string(n) +
                             " too short for window " + std::to_string(window));
    }
    const std::size_t rows = n - window + 1;
    Tensor out({rows, window * d});
    for (std::size_t t = 0; t < rows; ++t) {
        double* dst = out.row(t);
        for (std::size_t w = 0; w < window; ++w) {
            std::copy(ev.row(t + w), ev.row(t + w) + d, dst + w * d);
        }
    }
    if (!want_grad(tape, {&e})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([e, y, rows, window, d]() {
        const Tensor& g = y.grad();
        Tensor& ge = e.grad();
        for (std::size_t t = 0; t < rows; ++t) {
            const double* gr = g.row(t);
            for (std::size_t w = 0; w < window; ++w) {
                double* gd = ge.row(t + w);
                for (std::size_t j = 0; j < d; ++j) gd[j] += gr[w * d + j];
            }
        }
    });
    return y;
}

Var lookup_rows(Tape* tape, const Var& table, const std::vector<int>& ids) {
    const Tensor& tv = table.value();
    if (tv.ndim() != 2) throw DimensionError("lookup_rows: expected matrix, got " + tv.shape_str());
    const std::size_t d = tv.cols();
    Tensor out({ids.size(), d});
    for (std::size_t t = 0; t < ids.size(); ++t) {
        const int id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= tv.rows()) {
            throw DimensionError("lookup_rows: id " + std::to_string(id) +
                                 " out of range for table " + tv.shape_str());
        }
        std::copy(tv.row(static_cast<std::size_t>(id)), tv.row(static_cast<std::size_t>(id)) + d,
                  out.row(t));
    }
    if (!want_grad(tape, {&table})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([table, y, ids, d]() {
        const Tensor& g = y.grad();
        Tensor& gt = table.grad();
        for (std::size_t t = 0; t < ids.size(); ++t) {
            double* gr = gt.row(static_cast<std::size_t>(ids[t]));
            const double* gs = g.row(t);
            for (std::size_t j = 0; j < d; ++j) gr[j] += gs[j];
        }
    });
    return y;
}

Var dropout(Tape* tape, const Var& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ConfigError("dropout rate must be in [0, 1), got " + std::to_string(rate));
    }
    if (rate == 0.0) return x;
    const Tensor& xv = x.value();
    const double keep_scale = 1.0 / (1.0 - rate);
    Tensor mask = Tensor::zeros_like(xv);
    Tensor out = Tensor::zeros_like(xv);
    for (std::size_t i = 0; i < xv.size(); ++i) {
        if (rng.next_double() >= rate) {
            mask[i] = keep_scale;
            out[i] = xv[i] * keep_scale;
        }
    }
    if (!want_grad(tape, {&x})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([x, y, mask = std::move(mask)]() {
        const Tensor& g = y.grad();
        double* gx = x.grad().data();
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
    });
    return y;
}

std::pair<Var, Var> lstm_cell(Tape* tape, const Var& x, const Var& h_prev, const Var& c_prev,
                              const Var& w_x, const Var& w_h, const Var& b) {
    const Tensor& xv = x.value();
    const Tensor& hv = h_prev.value();
    const Tensor& cv = c_prev.value();
    const Tensor& wxv = w_x.value();
    const Tensor& whv = w_h.value();
    const Tensor& bv = b.value();
    if (wxv.ndim() != 2 || whv.ndim() != 2 || bv.ndim() != 1) {
        throw DimensionError("lstm_cell: weight ranks must be (2,2,1)");
    }
    const std::size_t u = whv.cols();
    if (wxv.rows() != 4 * u || whv.rows() != 4 * u || bv.size() != 4 * u) {
        throw DimensionError("lstm_cell: weight shapes disagree: w_x " + wxv.shape_str() +
                             ", w_h " + whv.shape_str() + ", b " + bv.shape_str());
    }
    if (xv.ndim() != 1 || xv.size() != wxv.cols()) shape_error("lstm_cell input", wxv, xv);
    if (hv.ndim() != 1 || hv.size() != u || cv.ndim() != 1 || cv.size() != u) {
        throw DimensionError("lstm_cell: state size mismatch, expected " + std::to_string(u));
    }

    // z = w_x x + w_h h + b, gate blocks [input, forget, candidate, output]
    Tensor z = bv;
    {
        const double* xd = xv.data();
        const double* hd = hv.data();
        for (std::size_t i = 0; i < 4 * u; ++i) {
            const double* wxr = wxv.row(i);
            double acc = z[i];
            for (std::size_t j = 0; j < xv.size(); ++j) acc += wxr[j] * xd[j];
            const double* whr = whv.row(i);
            for (std::size_t j = 0; j < u; ++j) acc += whr[j] * hd[j];
            z[i] = acc;
        }
    }
    auto sg = [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    };
    Tensor gi({u}), gf({u}), gg({u}), go({u});
    Tensor c_out({u}), h_out({u}), tc({u});
    for (std::size_t j = 0; j < u; ++j) {
        gi[j] = sg(z[j]);
        gf[j] = sg(z[u + j]);
        gg[j] = std::tanh(z[2 * u + j]);
        go[j] = sg(z[3 * u + j]);
        c_out[j] = gf[j] * cv[j] + gi[j] * gg[j];
        tc[j] = std::tanh(c_out[j]);
        h_out[j] = go[j] * tc[j];
    }

    const bool tracked = want_grad(tape, {&x, &h_prev, &c_prev, &w_x, &w_h, &b});
    if (!tracked) {
        return {Var::constant(std::move(h_out)), Var::constant(std::move(c_out))};
    }
    Var h = make_tracked(std::move(h_out));
    Var c = make_tracked(std::move(c_out));
    tape->record([x, h_prev, c_prev, w_x, w_h, b, h, c, gi = std::move(gi), gf = std::move(gf),
                  gg = std::move(gg), go = std::move(go), tc = std::move(tc), u]() {
        const Tensor& dh = h.grad();
        const Tensor& dc_out = c.grad();
        const Tensor& cv2 = c_prev.value();
        Tensor dz({4 * u});
        for (std::size_t j = 0; j < u; ++j) {
            const double dcj = dc_out[j] + dh[j] * go[j] * (1.0 - tc[j] * tc[j]);
            const double di = dcj * gg[j];
            const double df = dcj * cv2[j];
            const double dg = dcj * gi[j];
            const double do_ = dh[j] * tc[j];
            dz[j] = di * gi[j] * (1.0 - gi[j]);
            dz[u + j] = df * gf[j] * (1.0 - gf[j]);
            dz[2 * u + j] = dg * (1.0 - gg[j] * gg[j]);
            dz[3 * u + j] = do_ * go[j] * (1.0 - go[j]);
            if (c_prev.tracks_grad()) c_prev.grad()[j] += dcj * gf[j];
        }
        if (w_x.tracks_grad()) add_outer(w_x.grad(), dz.data(), x.value().data(), 4 * u, x.value().size());
        if (w_h.tracks_grad()) add_outer(w_h.grad(), dz.data(), h_prev.value().data(), 4 * u, u);
        if (b.tracks_grad()) {
            double* gb = b.grad().data();
            for (std::size_t i = 0; i < 4 * u; ++i) gb[i] += dz[i];
        }
        if (x.tracks_grad()) add_matT_vec(x.grad(), w_x.value(), dz.data());
        if (h_prev.tracks_grad()) add_matT_vec(h_prev.grad(), w_h.value(), dz.data());
    });
    return {h, c};
}

Var rowwise_dot(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || !av.same_shape(bv)) shape_error("rowwise_dot", av, bv);
    const std::size_t n = av.rows(), d = av.cols();
    Tensor out({n});
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = av.row(i);
        const double* br = bv.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += ar[j] * br[j];
        out[i] = acc;
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y, n, d]() {
        const Tensor& g = y.grad();
        for (std::size_t i = 0; i < n; ++i) {
            const double gi = g[i];
            if (gi == 0.0) continue;
            if (a.tracks_grad()) {
                double* ga = a.grad().row(i);
                const double* br = b.value().row(i);
                for (std::size_t j = 0; j < d; ++j) ga[j] += gi * br[j];
            }
            if (b.tracks_grad()) {
                double* gb = b.grad().row(i);
                const double* ar = a.value().row(i);
                for (std::size_t j = 0; j < d; ++j) gb[j] += gi * ar[j];
            }
        }
    });
    return y;
}

Var rowwise_cosine(Tape* tape, const Var& a, const Var& b, double eps, int* zero_norm_pairs) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || !av.same_shape(bv)) shape_error("rowwise_cosine", av, bv);
    const std::size_t n = av.rows(), d = av.cols();
    Tensor out({n});
    std::vector<CosineParts> parts(n);
    for (std::size_t i = 0; i < n; ++i) {
        parts[i] = cosine_forward(av.row(i), bv.row(i), d, eps);
        out[i] = parts[i].cos;
        if (parts[i].guarded && zero_norm_pairs) ++*zero_norm_pairs;
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y, n, d, parts = std::move(parts)]() {
        const Tensor& g = y.grad();
        for (std::size_t i = 0; i < n; ++i) {
            cosine_backward(g[i], a.value().row(i), b.value().row(i), d, parts[i],
                            a.tracks_grad() ? a.grad().row(i) : nullptr,
                            b.tracks_grad() ? b.grad().row(i) : nullptr);
        }
    });
    return y;
}

Var pair_concat(Tape* tape, const Var& a, const Var& b) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (av.ndim() != 2 || !av.same_shape(bv)) shape_error("pair_concat", av, bv);
    const std::size_t r = av.rows(), w = av.cols();
    if (r < 2) throw DimensionError("pair_concat: need at least 2 rows, got " + av.shape_str());
    const std::size_t np = r * (r - 1);
    Tensor out({np, 2 * w});
    for (std::size_t p = 0; p < np; ++p) {
        auto [u, v] = offdiag_pair(p, r);
        double* dst = out.row(p);
        std::copy(av.row(u), av.row(u) + w, dst);
        std::copy(bv.row(v), bv.row(v) + w, dst + w);
    }
    if (!want_grad(tape, {&a, &b})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([a, b, y, r, w, np]() {
        const Tensor& g = y.grad();
        for (std::size_t p = 0; p < np; ++p) {
            auto [u, v] = offdiag_pair(p, r);
            const double* gr = g.row(p);
            if (a.tracks_grad()) {
                double* ga = a.grad().row(u);
                for (std::size_t j = 0; j < w; ++j) ga[j] += gr[j];
            }
            if (b.tracks_grad()) {
                double* gb = b.grad().row(v);
                for (std::size_t j = 0; j < w; ++j) gb[j] += gr[w + j];
            }
        }
    });
    return y;
}

Var gather_diag(Tape* tape, const Var& m) {
    const Tensor& mv = m.value();
    if (mv.ndim() != 2 || mv.rows() != mv.cols()) {
        throw DimensionError("gather_diag: expected square matrix, got " + mv.shape_str());
    }
    const std::size_t r = mv.rows();
    Tensor out({r});
    for (std::size_t i = 0; i < r; ++i) out[i] = mv.at(i, i);
    if (!want_grad(tape, {&m})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([m, y, r]() {
        const Tensor& g = y.grad();
        Tensor& gm = m.grad();
        for (std::size_t i = 0; i < r; ++i) gm.at(i, i) += g[i];
    });
    return y;
}

Var gather_offdiag(Tape* tape, const Var& m) {
    const Tensor& mv = m.value();
    if (mv.ndim() != 2 || mv.rows() != mv.cols() || mv.rows() < 2) {
        throw DimensionError("gather_offdiag: expected square matrix (r >= 2), got " + mv.shape_str());
    }
    const std::size_t r = mv.rows(), np = r * (r - 1);
    Tensor out({np});
    for (std::size_t p = 0; p < np; ++p) {
        auto [u, v] = offdiag_pair(p, r);
        out[p] = mv.at(u, v);
    }
    if (!want_grad(tape, {&m})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([m, y, r, np]() {
        const Tensor& g = y.grad();
        Tensor& gm = m.grad();
        for (std::size_t p = 0; p < np; ++p) {
            auto [u, v] = offdiag_pair(p, r);
            gm.at(u, v) += g[p];
        }
    });
    return y;
}

Var scatter_offdiag(Tape* tape, const Var& v, std::size_t r) {
    const Tensor& vv = v.value();
    if (vv.ndim() != 1 || r < 2 || vv.size() != r * (r - 1)) {
        throw DimensionError("scatter_offdiag: vector " + vv.shape_str() +
                             " does not hold r(r-1) entries for r = " + std::to_string(r));
    }
    Tensor out({r, r});
    for (std::size_t p = 0; p < vv.size(); ++p) {
        auto [u, w] = offdiag_pair(p, r);
        out.at(u, w) = vv[p];
    }
    if (!want_grad(tape, {&v})) return Var::constant(std::move(out));
    Var y = make_tracked(std::move(out));
    tape->record([v, y, r]() {
        const Tensor& g = y.grad();
        double* gv = v.grad().data();
        for (std::size_t p = 0; p < v.value().size(); ++p) {
            auto [u, w] = offdiag_pair(p, r);
            gv[p] += g.at(u, w);
        }
    });
    return y;
}

}  // namespace ops
}  // namespace camse
