#include <cmath>
#include <vector>

#include "doctest.h"
#include "subsetflow/adam.hpp"
#include "subsetflow/numerics.hpp"
#include "subsetflow/oracle.hpp"
#include "subsetflow/rng.hpp"
#include "subsetflow/tape.hpp"

using namespace subsetflow;

TEST_CASE("log_sum_exp basics") {
    std::vector<double> v = {0.0, 0.0};
    CHECK(log_sum_exp(v) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    std::vector<double> small = {-1000.0, -1000.0};
    CHECK(log_sum_exp(small) == doctest::Approx(-1000.0 + std::log(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(log_sum_exp(std::vector<double>{}), ContractError);

    Rng rng(3);
    std::vector<double> r(10);
    for (double& x : r) x = rng.uniform(-5.0, 5.0);
    double naive = 0.0;
    for (double x : r) naive += std::exp(x);
    CHECK(log_sum_exp(r) == doctest::Approx(std::log(naive)).epsilon(1e-12));
    // Shift invariance.
    std::vector<double> shifted = r;
    for (double& x : shifted) x += 123.5;
    CHECK(log_sum_exp(shifted) - log_sum_exp(r) == doctest::Approx(123.5).epsilon(1e-12));
}

TEST_CASE("normal cdf and inverse are consistent") {
    for (double p : {1e-10, 1e-4, 0.1, 0.5, 0.9, 0.9999, 1.0 - 1e-10}) {
        double x = inverse_normal_cdf(p);
        CHECK(normal_cdf(x) == doctest::Approx(p).epsilon(1e-10));
    }
    CHECK(inverse_normal_cdf(0.5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("rng streams are reproducible and splittable") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    // split() is independent of the parent's position.
    Rng c(42);
    Rng child_before = c.split(7);
    c.next_u64();
    Rng child_after = c.split(7);
    CHECK(child_before.next_u64() == child_after.next_u64());
    Rng u(1);
    for (int i = 0; i < 1000; ++i) {
        double x = u.uniform_open();
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
}

TEST_CASE("grad of theta^2") {
    Tape t;
    Var th = t.leaf(Tensor::scalar(3.0), true);
    Var loss = t.mul(th, th);
    auto g = t.grad(loss, {th});
    CHECK(g[0][0] == doctest::Approx(6.0).epsilon(1e-14));
}

TEST_CASE("grad of softmax cross-entropy at uniform logits") {
    Tape t;
    Var logits = t.leaf(Tensor::vec({0.0, 0.0, 0.0, 0.0}), true);
    Var loss = t.neg(t.log_(t.gather(t.softmax(logits), 0)));
    auto g = t.grad(loss, {logits});
    CHECK(g[0][0] == doctest::Approx(-0.75).epsilon(1e-12));
    for (int i = 1; i < 4; ++i) CHECK(g[0][i] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("grad of a composite matches finite differences") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> p(6);
        for (double& v : p) v = rng.uniform(-1.5, 1.5);
        auto eval = [](std::span<const double> point) {
            Tape t;
            Var x = t.leaf(Tensor::vec({point.begin(), point.end()}), true);
            Var a = t.softmax(t.slice(x, 0, 3));
            Var b = t.tanh_(t.slice(x, 3, 3));
            Var c = t.mul(a, t.sigmoid_(b));
            Var d = t.add(t.cumsum(c), t.exp_(t.mul_scalar(b, 0.3)));
            return t.scalar(t.sum(t.sqrt_(t.clamp_min(d, 1e-12))));
        };
        Tape t;
        Var x = t.leaf(Tensor::vec(p), true);
        Var a = t.softmax(t.slice(x, 0, 3));
        Var b = t.tanh_(t.slice(x, 3, 3));
        Var c = t.mul(a, t.sigmoid_(b));
        Var d = t.add(t.cumsum(c), t.exp_(t.mul_scalar(b, 0.3)));
        Var loss = t.sum(t.sqrt_(t.clamp_min(d, 1e-12)));
        auto g = t.grad(loss, {x});
        auto fd = finite_diff_gradient(eval, p);
        for (int i = 0; i < 6; ++i) {
            double denom = std::max({std::abs(g[0][i]), std::abs(fd[i]), 1e-6});
            CHECK(std::abs(g[0][i] - fd[i]) / denom < 1e-4);
        }
    }
}

TEST_CASE("grad requires a scalar loss and is deterministic") {
    Tape t;
    Var x = t.leaf(Tensor::vec({1.0, 2.0}), true);
    Var notscalar = t.mul(x, x);
    CHECK_THROWS_AS(t.grad(notscalar, {x}), ContractError);

    auto run = []() {
        Tape t2;
        Var y = t2.leaf(Tensor::vec({0.3, -0.7, 1.1}), true);
        Var l = t2.sum(t2.mul(t2.tanh_(y), t2.softmax(y)));
        return t2.grad(l, {y});
    };
    auto g1 = run(), g2 = run();
    for (int i = 0; i < 3; ++i) CHECK(g1[0][i] == g2[0][i]);  // bitwise
}

TEST_CASE("adam step properties") {
    ParamStore store;
    int id = store.add("w", Tensor::vec({1.0, -2.0}));
    AdamState st = AdamState::init(store);
    AdamConfig cfg;
    cfg.lr = 0.1;

    SUBCASE("zero gradient leaves parameters unchanged") {
        std::vector<Tensor> g = {Tensor({2}, 0.0)};
        adam_step(store, g, st, cfg, 0);
        CHECK(store.value(id)[0] == 1.0);
        CHECK(store.value(id)[1] == -2.0);
        CHECK(st.step == 1);
    }

    SUBCASE("first step moves by about lr against the gradient sign") {
        std::vector<Tensor> g = {Tensor::vec({0.5, -0.25})};
        adam_step(store, g, st, cfg, 0);
        CHECK(store.value(id)[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-5));
        CHECK(store.value(id)[1] == doctest::Approx(-2.0 + 0.1).epsilon(1e-5));
    }

    SUBCASE("constant gradient walks opposite its sign") {
        std::vector<Tensor> g = {Tensor::vec({0.3, -0.3})};
        for (int i = 0; i < 50; ++i) adam_step(store, g, st, cfg, 0);
        CHECK(store.value(id)[0] < 1.0);
        CHECK(store.value(id)[1] > -2.0);
    }

    SUBCASE("shape mismatch is rejected") {
        std::vector<Tensor> g = {Tensor({3}, 0.0)};
        CHECK_THROWS_AS(adam_step(store, g, st, cfg, 0), ContractError);
    }
}

TEST_CASE("lr decay schedule multiplies factors of passed epochs") {
    AdamConfig cfg;
    cfg.lr = 1.0;
    cfg.decay = {{2, 0.5}, {4, 0.5}};
    CHECK(lr_at_epoch(cfg, 0) == 1.0);
    CHECK(lr_at_epoch(cfg, 2) == 0.5);
    CHECK(lr_at_epoch(cfg, 3) == 0.5);
    CHECK(lr_at_epoch(cfg, 4) == 0.25);
}

TEST_CASE("mean_stderr") {
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    MeanStderr ms = mean_stderr(v);
    CHECK(ms.mean == doctest::Approx(2.5));
    CHECK(ms.stderr_ == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(ms.n == 4);
}
