#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "camse/autodiff.hpp"
#include "camse/errors.hpp"
#include "camse/gradcheck.hpp"
#include "camse/nn.hpp"

using namespace camse;

namespace {

Tensor mat(std::size_t n, std::size_t m, std::vector<double> v) { return Tensor({n, m}, std::move(v)); }

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
    Tensor t(std::move(shape));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-scale, scale);
    return t;
}

}  // namespace

TEST_CASE("matmul basics") {
    Var identity = Var::constant(mat(2, 2, {1, 0, 0, 1}));
    Var b = Var::constant(mat(2, 2, {3, 4, 5, 6}));
    Tensor out = ops::matmul(nullptr, identity, b).value();
    CHECK(out.at(0, 0) == 3);
    CHECK(out.at(0, 1) == 4);
    CHECK(out.at(1, 0) == 5);
    CHECK(out.at(1, 1) == 6);

    Var zeros = Var::constant(Tensor({2, 3}));
    Var any = Var::constant(mat(3, 2, {1, 2, 3, 4, 5, 6}));
    Tensor z = ops::matmul(nullptr, zeros, any).value();
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == 0.0);

    // [[1,2]] * [[3],[4]] = [[11]]
    Var row = Var::constant(mat(1, 2, {1, 2}));
    Var col = Var::constant(mat(2, 1, {3, 4}));
    CHECK(ops::matmul(nullptr, row, col).value().at(0, 0) == doctest::Approx(11.0));

    CHECK_THROWS_AS(ops::matmul(nullptr, row, row), DimensionError);
    try {
        ops::matmul(nullptr, row, row);
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("[1x2]") != std::string::npos);
    }
}

TEST_CASE("pointwise tanh and sigmoid") {
    Var x = Var::constant(Tensor({3}, {0.0, 0.0, 2.0}));
    CHECK(ops::tanh(nullptr, x).value()[0] == 0.0);
    Tensor s = ops::sigmoid(nullptr, x).value();
    CHECK(s[0] == doctest::Approx(0.5));
    CHECK(s[2] == doctest::Approx(0.8807970779778823).epsilon(1e-12));
}

TEST_CASE("softmax along columns") {
    Var m = Var::constant(mat(2, 1, {0.0, 0.0}));
    Tensor y = ops::softmax(nullptr, m, ops::Axis::cols).value();
    CHECK(y.at(0, 0) == doctest::Approx(0.5));
    CHECK(y.at(1, 0) == doctest::Approx(0.5));

    // column [0, ln 3] -> [0.25, 0.75]
    Var m2 = Var::constant(mat(2, 1, {0.0, std::log(3.0)}));
    Tensor y2 = ops::softmax(nullptr, m2, ops::Axis::cols).value();
    CHECK(y2.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(y2.at(1, 0) == doctest::Approx(0.75).epsilon(1e-12));

    // shift invariance along the normalized axis
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor base = random_tensor({4, 3}, rng, 2.0);
        Tensor shifted = base;
        const double c = rng.uniform(-5.0, 5.0);
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t i = 0; i < 4; ++i) shifted.at(i, j) += c;
        }
        Tensor a = ops::softmax(nullptr, Var::constant(base), ops::Axis::cols).value();
        Tensor b = ops::softmax(nullptr, Var::constant(shifted), ops::Axis::cols).value();
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
}

TEST_CASE("softmax columns sum to one with entries in (0,1)") {
    Rng rng(12);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 1 + rng.uniform_index(6);
        const std::size_t r = 1 + rng.uniform_index(6);
        Tensor m = random_tensor({n, r}, rng, 4.0);
        Tensor y = ops::softmax(nullptr, Var::constant(m), ops::Axis::cols).value();
        for (std::size_t j = 0; j < r; ++j) {
            double sum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                sum += y.at(i, j);
                CHECK(y.at(i, j) > 0.0);
                CHECK(y.at(i, j) <= 1.0);
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("backward on linear and quadratic losses") {
    ParamStore store;
    Var p = store.add("p", Tensor({2}, {1.0, 2.0}));

    {
        Tape tape;
        Var loss = ops::sum(&tape, p);
        tape.backward(loss);
        CHECK(p.grad()[0] == doctest::Approx(1.0));
        CHECK(p.grad()[1] == doctest::Approx(1.0));
    }
    store.zero_grads();
    {
        Tape tape;
        Var loss = ops::sum(&tape, ops::mul(&tape, p, p));
        tape.backward(loss);
        CHECK(p.grad()[0] == doctest::Approx(2.0));
        CHECK(p.grad()[1] == doctest::Approx(4.0));
    }
}

TEST_CASE("backward errors") {
    ParamStore store;
    Var p = store.add("p", Tensor({2}, {1.0, 2.0}));
    Tape tape;
    Var v = ops::mul(&tape, p, p);
    CHECK_THROWS_AS(tape.backward(v), DimensionError);  // not scalar

    Tape tape2;
    Var loss = ops::sum(&tape2, p);
    tape2.backward(loss);
    CHECK_THROWS_AS(tape2.backward(loss), StateError);  // consumed
    tape2.reset();
}

TEST_CASE("dropout") {
    Rng rng(5);
    Var x = Var::constant(Tensor({4}, {1.0, 2.0, 3.0, 4.0}));
    // rate 0 in train mode is the identity
    Var same = ops::dropout(nullptr, x, 0.0, rng);
    CHECK(same.same_node(x));
    CHECK_THROWS_AS(ops::dropout(nullptr, x, 1.0, rng), ConfigError);
    CHECK_THROWS_AS(ops::dropout(nullptr, x, -0.1, rng), ConfigError);

    // inverted dropout keeps the mean at 1 over many draws
    const std::size_t n = 1000000;
    Var ones = Var::constant(Tensor({n}, std::vector<double>(n, 1.0)));
    Tensor dropped = ops::dropout(nullptr, ones, 0.2, rng).value();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += dropped[i];
    mean /= static_cast<double>(n);
    CHECK(mean == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("tape replay determinism") {
    auto run = [](std::uint64_t seed) {
        Rng rng(seed);
        ParamStore store;
        Var w = store.add("w", nn::glorot(3, 3, rng));
        Var x = Var::constant(random_tensor({3, 3}, rng));
        Tape tape;
        Var y = ops::tanh(&tape, ops::matmul(&tape, x, w));
        Var loss = ops::sum(&tape, ops::mul(&tape, y, y));
        tape.backward(loss);
        return std::make_pair(loss.value().item(), w.grad());
    };
    auto [l1, g1] = run(99);
    auto [l2, g2] = run(99);
    CHECK(std::memcmp(&l1, &l2, sizeof(double)) == 0);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}

TEST_CASE("cosine op") {
    Var a = Var::constant(Tensor({2}, {1.0, 0.0}));
    Var b = Var::constant(Tensor({2}, {1.0, 1.0}));
    CHECK(ops::cosine(nullptr, a, b).value().item() ==
          doctest::Approx(0.7071067811865475).epsilon(1e-12));
    Var zero = Var::constant(Tensor({2}));
    CHECK(ops::cosine(nullptr, zero, b).value().item() == 0.0);
}

TEST_CASE("gather and scatter respect the pair enumeration") {
    const std::size_t r = 4;
    Rng rng(17);
    Tensor m = random_tensor({r, r}, rng);
    Var mv = Var::constant(m);
    Tensor diag = ops::gather_diag(nullptr, mv).value();
    for (std::size_t i = 0; i < r; ++i) CHECK(diag[i] == m.at(i, i));
    Tensor off = ops::gather_offdiag(nullptr, mv).value();
    CHECK(off.size() == r * (r - 1));
    for (std::size_t p = 0; p < off.size(); ++p) {
        auto [u, v] = offdiag_pair(p, r);
        CHECK(u != v);
        CHECK(off[p] == m.at(u, v));
    }
    Tensor back = ops::scatter_offdiag(nullptr, Var::constant(off), r).value();
    for (std::size_t u = 0; u < r; ++u) {
        for (std::size_t v = 0; v < r; ++v) {
            CHECK(back.at(u, v) == (u == v ? 0.0 : m.at(u, v)));
        }
    }
}

TEST_CASE("gradients of every primitive match finite differences") {
    // Shapes stay <= 6 per dimension; 20 seeds across the op set.
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const std::size_t n = 2 + rng.uniform_index(4);
        const std::size_t m = 2 + rng.uniform_index(4);
        const std::size_t p = 2 + rng.uniform_index(4);

        {
            ParamStore store;
            store.add("a", random_tensor({n, m}, rng));
            store.add("b", random_tensor({m, p}, rng));
            auto f = [&](Tape* t) {
                Var prod = ops::matmul(t, *store.find("a"), *store.find("b"));
                return ops::sum(t, ops::tanh(t, prod));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("a", random_tensor({n, m}, rng));
            store.add("b", random_tensor({n, p}, rng));
            auto f = [&](Tape* t) {
                Var prod = ops::matmul_tn(t, *store.find("a"), *store.find("b"));
                return ops::sum(t, ops::sigmoid(t, prod));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("m", random_tensor({n, m}, rng, 2.0));
            auto f = [&](Tape* t) {
                Var sm = ops::softmax(t, *store.find("m"), ops::Axis::cols);
                return ops::sum(t, ops::mul(t, sm, sm));
            };
            CHECK(grad_check(f, store) < 1e-5);
        }
        {
            ParamStore store;
            store.add("x", random_tensor({m}, rng, 2.0));
            auto f = [&](Tape* t) {
                Var ls = ops::log_softmax_vec(t, *store.find("x"));
                return ops::pick(t, ls, 0);
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("a", random_tensor({m}, rng));
            store.add("b", random_tensor({m}, rng));
            auto f = [&](Tape* t) {
                return ops::cosine(t, *store.find("a"), *store.find("b"));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("a", random_tensor({n, m}, rng));
            store.add("b", random_tensor({n, m}, rng));
            auto f = [&](Tape* t) {
                Var cs = ops::rowwise_cosine(t, *store.find("a"), *store.find("b"));
                Var rd = ops::rowwise_dot(t, *store.find("a"), *store.find("b"));
                return ops::add(t, ops::sum(t, cs), ops::sum(t, ops::tanh(t, rd)));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("a", random_tensor({n, m}, rng));
            store.add("b", random_tensor({n, m}, rng));
            auto f = [&](Tape* t) {
                Var pc = ops::pair_concat(t, *store.find("a"), *store.find("b"));
                return ops::sum(t, ops::sigmoid(t, pc));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("m", random_tensor({p, p}, rng));
            store.add("v", random_tensor({p * (p - 1)}, rng));
            auto f = [&](Tape* t) {
                Var d = ops::gather_diag(t, *store.find("m"));
                Var o = ops::gather_offdiag(t, *store.find("m"));
                Var s = ops::scatter_offdiag(t, *store.find("v"), p);
                Var total = ops::add(t, ops::sum(t, ops::mul(t, o, o)), ops::dot(t, d, d));
                return ops::add(t, total, ops::sum(t, ops::tanh(t, s)));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("e", random_tensor({n + 2, m}, rng));
            store.add("w", random_tensor({2 * m, m}, rng));
            store.add("b", random_tensor({m}, rng));
            auto f = [&](Tape* t) {
                Var wc = ops::window_concat(t, *store.find("e"), 2);
                Var pre = ops::add_rowvec(t, ops::matmul(t, wc, *store.find("w")), *store.find("b"));
                return ops::sum(t, ops::tanh(t, pre));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
        {
            ParamStore store;
            store.add("w", random_tensor({n, m}, rng));
            store.add("x", random_tensor({m}, rng));
            auto f = [&](Tape* t) {
                Var y = ops::matvec(t, *store.find("w"), *store.find("x"));
                Var sl = ops::slice_vec(t, y, 0, n / 2 + 1);
                return ops::sum(t, ops::mul(t, sl, sl));
            };
            CHECK(grad_check(f, store) < 1e-6);
        }
    }
}

TEST_CASE("grad_check rejects non-deterministic functions") {
    ParamStore store;
    store.add("p", Tensor({2}, {0.5, -0.25}));
    Rng rng(3);
    auto f = [&](Tape* t) {
        // value depends on a live RNG draw, so two probes cannot agree
        return ops::scale(t, ops::sum(t, *store.find("p")), 1.0 + rng.next_double());
    };
    CHECK_THROWS_AS(grad_check(f, store), StateError);
}

TEST_CASE("grad_check linear and tanh reference cases") {
    ParamStore store;
    Rng rng(21);
    store.add("p", random_tensor({5}, rng));
    auto linear = [&](Tape* t) { return ops::sum(t, *store.find("p")); };
    CHECK(grad_check(linear, store) < 1e-10);
    auto smooth = [&](Tape* t) { return ops::sum(t, ops::tanh(t, *store.find("p"))); };
    CHECK(grad_check(smooth, store) < 1e-6);
}
