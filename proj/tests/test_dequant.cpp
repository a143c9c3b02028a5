#include <cmath>
#include <vector>

#include "doctest.h"
#include "subsetflow/dequant.hpp"
#include "subsetflow/numerics.hpp"

using namespace subsetflow;

namespace {

ModelConfig basic_config(int D, int K, std::vector<LayerConfig> layers,
                         bool bin_conditioning = true) {
    ModelConfig cfg;
    cfg.D = D;
    cfg.K = K;
    cfg.bin_conditioning = bin_conditioning;
    cfg.layers = std::move(layers);
    return cfg;
}

}  // namespace

TEST_CASE("uniform model + uniform dequantizer: all estimators are exact") {
    SubsetFlowModel model(basic_config(3, 4, {{TransformFamily::Linear, 4, {8}, false}}), 1);
    Dequantizer deq = Dequantizer::uniform(3, 4);
    Rng rng(7);
    std::vector<int> x = {0, 2, 3};
    double expected = 3 * std::log(0.25);
    for (int rep = 0; rep < 20; ++rep) {
        Rng s = rng.split(rep);
        CHECK(elbo_sample(model, deq, x, s) == doctest::Approx(expected).epsilon(1e-13));
        CHECK(iwbo_sample(model, deq, x, 10, s) == doctest::Approx(expected).epsilon(1e-13));
    }
    CHECK(nats_to_bits_per_dim(expected, 3) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("iwbo with k=1 is bitwise the elbo") {
    SubsetFlowModel model(basic_config(2, 4, {{TransformFamily::Quadratic, 4, {8}, false}}), 5,
                          true);
    Dequantizer deq = Dequantizer::uniform(2, 4);
    Rng rng(9);
    std::vector<int> x = {1, 3};
    for (int rep = 0; rep < 20; ++rep) {
        Rng s = rng.split(rep);
        CHECK(elbo_sample(model, deq, x, s) == iwbo_sample(model, deq, x, 1, s));
    }
}

TEST_CASE("bin-conditioned linear model has exactly zero gap per draw") {
    SubsetFlowModel model(basic_config(3, 4, {{TransformFamily::Linear, 4, {8}, false}}), 13,
                          true);
    Dequantizer deq = Dequantizer::uniform(3, 4);
    Rng rng(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<int> x = {rng.uniform_int(4), rng.uniform_int(4), rng.uniform_int(4)};
        double exact = model.exact_log_likelihood(x);
        double e = elbo_sample(model, deq, x, rng.split(rep));
        CHECK(std::abs(e - exact) < 1e-12);
    }
    CHECK(dequant_gap(model, deq, std::vector<int>{0, 1, 2}, 10, rng) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("bounds are ordered: elbo <= iwbo(k) <= exact within 3 SE") {
    SubsetFlowModel model(basic_config(2, 4, {{TransformFamily::Quadratic, 3, {8}, false}}), 17,
                          true);
    Dequantizer deq = Dequantizer::uniform(2, 4);
    Rng rng(19);
    std::vector<int> x = {1, 2};
    double exact = model.exact_log_likelihood(x);
    std::vector<double> e1(400), e10(400);
    for (int i = 0; i < 400; ++i) {
        e1[i] = elbo_sample(model, deq, x, rng.split(i));
        e10[i] = iwbo_sample(model, deq, x, 10, rng.split(4000 + i));
    }
    MeanStderr m1 = mean_stderr(e1), m10 = mean_stderr(e10);
    CHECK(m1.mean <= m10.mean + 3 * (m1.stderr_ + m10.stderr_));
    CHECK(m10.mean <= exact + 3 * m10.stderr_);
}

TEST_CASE("variational dequantizer stays inside the bin and normalizes") {
    Dequantizer deq = Dequantizer::variational(3, 4, {16}, 23);
    Rng rng(29);
    std::vector<int> x = {0, 2, 3};
    for (int rep = 0; rep < 2000; ++rep) {
        Rng s = rng.split(rep);
        double lq = 0.0;
        std::vector<double> y = deq.sample(x, s, &lq);
        for (int d = 0; d < 3; ++d) {
            CHECK(y[d] >= x[d]);
            CHECK(y[d] < x[d] + 1.0);
        }
        CHECK(std::isfinite(lq));
    }
    // E_q[1/q] = 1 over the bin: importance-sample the bin volume.
    std::vector<double> inv(5000);
    for (int i = 0; i < 5000; ++i) {
        Rng s = rng.split(100000 + i);
        double lq = 0.0;
        deq.sample(x, s, &lq);
        inv[i] = std::exp(-lq);
    }
    MeanStderr ms = mean_stderr(inv);
    CHECK(std::abs(ms.mean - 1.0) <= 4 * ms.stderr_ + 1e-3);
}

TEST_CASE("training objectives") {
    SubsetFlowModel model(basic_config(2, 4, {{TransformFamily::Linear, 4, {8}, false}}), 31);
    std::vector<int> x = {1, 2};
    Rng rng(37);
    SUBCASE("exact objective on the uniform model is D log K") {
        Tape t;
        std::vector<Var> mb = model.bind(t);
        Var loss = neg_objective_t(model, nullptr, t, mb, {}, Objective::Exact, x, rng.split(0));
        CHECK(t.scalar(loss) == doctest::Approx(2 * std::log(4.0)).epsilon(1e-13));
    }
    SUBCASE("elbo-uniform equals exact for a linear bin-conditioned model") {
        SubsetFlowModel m2(basic_config(2, 4, {{TransformFamily::Linear, 4, {8}, false}}), 41,
                           true);
        for (int rep = 0; rep < 10; ++rep) {
            Tape t;
            std::vector<Var> mb = m2.bind(t);
            double a = t.scalar(
                neg_objective_t(m2, nullptr, t, mb, {}, Objective::Exact, x, rng.split(rep)));
            Tape t2;
            std::vector<Var> mb2 = m2.bind(t2);
            double b = t2.scalar(neg_objective_t(m2, nullptr, t2, mb2, {}, Objective::ElboUniform,
                                                 x, rng.split(rep)));
            CHECK(std::abs(a - b) < 1e-12);
        }
    }
    SUBCASE("capability violations are rejected") {
        ModelConfig nobc = basic_config(2, 4, {{TransformFamily::Linear, 4, {8}, false}}, false);
        SubsetFlowModel m3(nobc, 43);
        Tape t;
        std::vector<Var> mb = m3.bind(t);
        CHECK_THROWS_AS(neg_objective_t(m3, nullptr, t, mb, {}, Objective::Exact, x, rng),
                        ConfigError);
        CHECK_THROWS_AS(
            neg_objective_t(m3, nullptr, t, mb, {}, Objective::ElboVariational, x, rng),
            ConfigError);
    }
    SUBCASE("variational objective differentiates the dequantizer") {
        Dequantizer deq = Dequantizer::variational(2, 4, {8}, 47);
        SubsetFlowModel m4(basic_config(2, 4, {{TransformFamily::Quadratic, 3, {8}, false}}), 53,
                           /*random_output_layer=*/true);
        Tape t;
        std::vector<Var> mb = m4.bind(t);
        std::vector<Var> db = deq.bind(t);
        Var loss = neg_objective_t(m4, &deq, t, mb, db, Objective::ElboVariational, x,
                                   rng.split(1));
        std::vector<Var> all = mb;
        all.insert(all.end(), db.begin(), db.end());
        auto grads = t.grad(loss, all);
        double dnorm = 0.0;
        for (size_t g = mb.size(); g < grads.size(); ++g)
            for (int i = 0; i < grads[g].size(); ++i) dnorm += std::abs(grads[g][i]);
        CHECK(dnorm > 0.0);
    }
}
