#include <doctest.h>

#include <cmath>

#include "camse/autodiff.hpp"
#include "camse/errors.hpp"
#include "camse/nn.hpp"
#include "camse/optim.hpp"

using namespace camse;

TEST_CASE("adam leaves parameters untouched on zero grads") {
    ParamStore store;
    Var p = store.add("p", Tensor({3}, {1.0, -2.0, 3.0}));
    Adam adam(AdamConfig{});
    store.zero_grads();
    adam.step(store);
    CHECK(p.value()[0] == 1.0);
    CHECK(p.value()[1] == -2.0);
    CHECK(p.value()[2] == 3.0);
}

TEST_CASE("first adam step matches the bias-corrected formula") {
    ParamStore store;
    Var p = store.add("p", Tensor({1}, {0.7}));
    AdamConfig cfg;
    cfg.lr = 0.001;
    Adam adam(cfg);
    p.grad()[0] = 1.0;
    adam.step(store);
    // one step at g = 1: delta = -lr * g / (sqrt(g^2) + eps)
    const double expected = 0.7 - 0.001 * 1.0 / (1.0 + 1e-8);
    CHECK(p.value()[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("identical parameters with identical grads stay identical") {
    ParamStore store;
    Var a = store.add("a", Tensor({2}, {0.5, -0.5}));
    Var b = store.add("b", Tensor({2}, {0.5, -0.5}));
    Adam adam(AdamConfig{});
    Rng rng(8);
    for (int step = 0; step < 25; ++step) {
        store.zero_grads();
        for (std::size_t j = 0; j < 2; ++j) {
            const double g = rng.uniform(-1.0, 1.0);
            a.grad()[j] = g;
            b.grad()[j] = g;
        }
        adam.step(store);
        CHECK(a.value()[0] == b.value()[0]);
        CHECK(a.value()[1] == b.value()[1]);
    }
}

TEST_CASE("adam state is bound to one parameter set") {
    ParamStore store;
    store.add("p", Tensor({2}));
    Adam adam(AdamConfig{});
    adam.step(store);
    ParamStore other;
    other.add("a", Tensor({2}));
    other.add("b", Tensor({2}));
    CHECK_THROWS_AS(adam.step(other), StateError);

    ParamStore reshaped;
    reshaped.add("p", Tensor({3}));
    CHECK_THROWS_AS(adam.step(reshaped), StateError);
}

TEST_CASE("learning rate decays exponentially per epoch") {
    AdamConfig cfg;
    cfg.lr = 1e-3;
    cfg.decay = 0.95;
    Adam adam(cfg);
    adam.set_epoch(0);
    CHECK(adam.effective_lr() == doctest::Approx(1e-3));
    adam.set_epoch(3);
    CHECK(adam.effective_lr() == doctest::Approx(1e-3 * std::pow(0.95, 3)).epsilon(1e-12));
}

TEST_CASE("duplicate parameter names are rejected") {
    ParamStore store;
    store.add("p", Tensor({1}));
    CHECK_THROWS_AS(store.add("p", Tensor({1})), StateError);
}
