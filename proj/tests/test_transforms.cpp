#include <cmath>
#include <vector>

#include "doctest.h"
#include "subsetflow/numerics.hpp"
#include "subsetflow/oracle.hpp"
#include "subsetflow/rng.hpp"
#include "subsetflow/transforms.hpp"

using namespace subsetflow;

namespace {

std::vector<double> random_raw(const TransformSpec& spec, Rng& rng, double lo = -2.0,
                               double hi = 2.0) {
    std::vector<double> raw(transform_param_count(spec));
    for (double& v : raw) v = rng.uniform(lo, hi);
    return raw;
}

}  // namespace

TEST_CASE("linear spline hand-derived values") {
    TransformSpec spec{TransformFamily::Linear, 4, 4.0, false};
    SUBCASE("uniform logits is y/K") {
        std::vector<double> raw(4, 0.0);
        Transform1D tr(spec, raw);
        CHECK(tr.forward(1.0) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(tr.forward(0.0) == 0.0);
        CHECK(tr.forward(4.0) == 1.0);
        CHECK(tr.inverse(0.25) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(tr.inverse(1.0) == 4.0);
    }
    SUBCASE("pi = (0.1, 0.2, 0.3, 0.4)") {
        std::vector<double> raw = {std::log(0.1), std::log(0.2), std::log(0.3), std::log(0.4)};
        Transform1D tr(spec, raw);
        CHECK(tr.forward(2.5) == doctest::Approx(0.45).epsilon(1e-13));
        CHECK(tr.inverse(0.45) == doctest::Approx(2.5).epsilon(1e-13));
        // Discrete mass is exactly the bin probability.
        for (int x = 0; x < 4; ++x)
            CHECK(tr.interval_width(x, x + 1.0) == tr.probs()[x]);
    }
    SUBCASE("domain errors") {
        std::vector<double> raw(4, 0.0);
        Transform1D tr(spec, raw);
        CHECK_THROWS_AS(tr.forward(-0.1), ContractError);
        CHECK_THROWS_AS(tr.forward(4.1), ContractError);
        CHECK_THROWS_AS(tr.inverse(1.0001), ContractError);
    }
}

TEST_CASE("quadratic spline: uniform at zero logits, roundtrip, derivative") {
    TransformSpec spec{TransformFamily::Quadratic, 5, 2.0, false};
    SUBCASE("all-zero logits give the uniform density") {
        std::vector<double> raw(transform_param_count(spec), 0.0);
        Transform1D tr(spec, raw);
        for (double y : {0.0, 0.3, 1.0, 1.7, 2.0})
            CHECK(tr.forward(y) == doctest::Approx(y / 2.0).epsilon(1e-13));
    }
    Rng rng(17);
    SUBCASE("forward/inverse roundtrip over 1000 z draws") {
        for (int rep = 0; rep < 10; ++rep) {
            Transform1D tr(spec, random_raw(spec, rng));
            for (int i = 0; i < 100; ++i) {
                double z = rng.uniform_open();
                double y = tr.inverse(z);
                CHECK(std::abs(tr.forward(y) - z) < 1e-10);
            }
        }
    }
    SUBCASE("derivative matches finite differences away from knots") {
        for (int rep = 0; rep < 10; ++rep) {
            Transform1D tr(spec, random_raw(spec, rng));
            for (int i = 0; i < 50; ++i) {
                double y = rng.uniform(1e-3, 2.0 - 1e-3);
                bool near_knot = false;
                for (double kn : tr.knots())
                    if (std::abs(y - kn) < 1e-4) near_knot = true;
                if (near_knot) continue;
                double h = 1e-6;
                double fd = (tr.forward(y + h) - tr.forward(y - h)) / (2 * h);
                CHECK(std::abs(tr.deriv(y) - fd) / std::max(fd, 1e-9) < 1e-6);
            }
        }
    }
    SUBCASE("bin masses follow the trapezoid formula and sum to 1") {
        Transform1D tr(spec, random_raw(spec, rng));
        double total = 0.0;
        for (int k = 0; k < 5; ++k) {
            double m = 0.5 * (tr.vertices()[k] + tr.vertices()[k + 1]) * tr.widths()[k];
            CHECK(tr.bin_masses()[k] == doctest::Approx(m).epsilon(1e-12));
            total += m;
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        double wsum = 0.0;
        for (double w : tr.widths()) wsum += w;
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-9));
    }
}

TEST_CASE("mixture of logistics transform") {
    SUBCASE("single component, absorbing tails: f(0.5) with mu=0 is sigma(0)") {
        std::vector<double> mu = {0.0}, s = {1.0}, logits = {0.0};
        Transform1D tr = Transform1D::mol(256.0, true, logits, mu, s);
        CHECK(tr.forward(0.5) == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(tr.forward(0.0) == 0.0);
        CHECK(tr.forward(256.0) == 1.0);
    }
    SUBCASE("DMOL edge bin matches the piecewise formula") {
        std::vector<double> mu = {127.5}, s = {10.0}, logits = {0.0};
        Transform1D tr = Transform1D::mol(256.0, true, logits, mu, s);
        CHECK(tr.interval_width(0.0, 1.0) ==
              doctest::Approx(sigmoid((0.5 - 127.5) / 10.0)).epsilon(1e-14));
        CHECK(tr.interval_width(255.0, 256.0) ==
              doctest::Approx(1.0 - sigmoid((254.5 - 127.5) / 10.0)).epsilon(1e-12));
    }
    SUBCASE("telescoping: masses over all 256 symbols sum to 1 exactly") {
        Rng rng(23);
        for (int rep = 0; rep < 20; ++rep) {
            int M = 1 + rng.uniform_int(5);
            std::vector<double> logits(M), mu(M), s(M);
            for (int m = 0; m < M; ++m) {
                logits[m] = rng.uniform(-1.0, 1.0);
                mu[m] = rng.uniform(-20.0, 276.0);
                s[m] = std::exp(rng.uniform(-1.0, 3.0));
            }
            Transform1D tr = Transform1D::mol(256.0, true, logits, mu, s);
            double total = 0.0;
            for (int x = 0; x < 256; ++x) total += tr.interval_width(x, x + 1.0);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    SUBCASE("rescaled (inner-layer) variant pins the endpoints") {
        Rng rng(29);
        TransformSpec spec{TransformFamily::Mol, 4, 1.0, false};
        for (int rep = 0; rep < 10; ++rep) {
            Transform1D tr(spec, random_raw(spec, rng));
            CHECK(tr.forward(0.0) == doctest::Approx(0.0).epsilon(1e-14));
            CHECK(tr.forward(1.0) == doctest::Approx(1.0).epsilon(1e-14));
            for (int i = 0; i < 50; ++i) {
                double z = rng.uniform_open();
                double y = tr.inverse(z);
                CHECK(std::abs(tr.forward(y) - z) < 1e-10);
            }
        }
    }
    SUBCASE("absorbing inverse converges and stays in the domain") {
        Rng rng(31);
        std::vector<double> logits = {0.3, -0.2}, mu = {50.0, 200.0}, s = {5.0, 30.0};
        Transform1D tr = Transform1D::mol(256.0, true, logits, mu, s);
        for (int i = 0; i < 200; ++i) {
            double z = rng.uniform_open();
            double y = tr.inverse(z);
            CHECK(y >= 0.0);
            CHECK(y < 256.0);
            // z lies in the interval of the enclosing symbol (edge bins absorb
            // the tail mass, so the roundtrip through forward() only holds in
            // the interior).
            double x = std::floor(y);
            CHECK(tr.forward(x) <= z + 1e-9);
            CHECK(z <= tr.forward(x + 1.0) + 1e-9);
            if (y > 0.0 && y < 255.5) CHECK(std::abs(tr.forward(y) - z) < 1e-10);
        }
    }
}

TEST_CASE("strict monotonicity across families") {
    Rng rng(37);
    for (int rep = 0; rep < 1000; ++rep) {
        TransformSpec spec;
        int fam = rep % 3;
        spec.family = fam == 0   ? TransformFamily::Linear
                      : fam == 1 ? TransformFamily::Quadratic
                                 : TransformFamily::Mol;
        spec.bins = 2 + rng.uniform_int(6);
        spec.domain = fam == 0 ? static_cast<double>(spec.bins) : 1.0;
        spec.absorb_tails = false;
        Transform1D tr(spec, random_raw(spec, rng));
        double y1 = rng.uniform(0.0, spec.domain);
        double y2 = rng.uniform(0.0, spec.domain);
        if (y1 > y2) std::swap(y1, y2);
        if (y2 - y1 < 1e-9) continue;
        CHECK(tr.forward(y1) < tr.forward(y2));
        CHECK(tr.interval_width(y1, y2) > 0.0);
    }
}

TEST_CASE("interval mapping agrees with endpoint evaluation") {
    Rng rng(41);
    for (int rep = 0; rep < 50; ++rep) {
        TransformSpec spec{TransformFamily::Quadratic, 4, 3.0, false};
        Transform1D tr(spec, random_raw(spec, rng));
        double a = rng.uniform(0.0, 3.0), b = rng.uniform(0.0, 3.0);
        if (a > b) std::swap(a, b);
        Interval img = tr.map({a, b});
        CHECK(img.lower == doctest::Approx(tr.forward(a)).epsilon(1e-12));
        CHECK(img.upper == doctest::Approx(tr.forward(b)).epsilon(1e-11));
        CHECK(img.lower <= img.upper);
        // Degenerate interval has zero volume.
        Interval deg = tr.map({a, a});
        CHECK(deg.upper - deg.lower == 0.0);
    }
}

TEST_CASE("tape transform matches the plain transform") {
    Rng rng(43);
    for (int rep = 0; rep < 30; ++rep) {
        TransformSpec spec;
        int fam = rep % 3;
        spec.family = fam == 0   ? TransformFamily::Linear
                      : fam == 1 ? TransformFamily::Quadratic
                                 : TransformFamily::Mol;
        spec.bins = 3 + rng.uniform_int(4);
        spec.domain = fam == 0 ? static_cast<double>(spec.bins) : 1.0;
        spec.absorb_tails = false;
        std::vector<double> raw = random_raw(spec, rng);
        Transform1D plain(spec, raw);
        Tape t(false);
        TapeTransform taped(t, spec, t.leaf(Tensor::vec(raw), false));
        for (int i = 0; i < 20; ++i) {
            double a = rng.uniform(0.0, spec.domain), b = rng.uniform(0.0, spec.domain);
            if (a > b) std::swap(a, b);
            CHECK(t.scalar(taped.forward(t.constant(a))) ==
                  doctest::Approx(plain.forward(a)).epsilon(1e-12));
            CHECK(t.scalar(taped.interval_width(t.constant(a), t.constant(b))) ==
                  doctest::Approx(plain.interval_width(a, b)).epsilon(1e-12));
            CHECK(t.scalar(taped.log_deriv(t.constant(a))) ==
                  doctest::Approx(std::log(plain.deriv(a))).epsilon(1e-12));
        }
    }
}

TEST_CASE("tape transform gradients match finite differences") {
    Rng rng(47);
    for (int fam = 0; fam < 3; ++fam) {
        TransformSpec spec;
        spec.family = fam == 0   ? TransformFamily::Linear
                      : fam == 1 ? TransformFamily::Quadratic
                                 : TransformFamily::Mol;
        spec.bins = 4;
        spec.domain = fam == 0 ? 4.0 : 1.0;
        spec.absorb_tails = false;
        std::vector<double> raw = random_raw(spec, rng, -1.0, 1.0);
        double a = 0.37 * spec.domain, b = 0.81 * spec.domain;
        auto eval = [&](std::span<const double> point) {
            Tape t(false);
            TapeTransform tr(t, spec, t.leaf(Tensor::vec({point.begin(), point.end()}), false));
            return t.scalar(
                t.log_(tr.interval_width(t.constant(a), t.constant(b))));
        };
        Tape t;
        Var leaf = t.leaf(Tensor::vec(raw), true);
        TapeTransform tr(t, spec, leaf);
        Var loss = t.log_(tr.interval_width(t.constant(a), t.constant(b)));
        auto g = t.grad(loss, {leaf});
        auto fd = finite_diff_gradient(eval, raw);
        for (size_t i = 0; i < raw.size(); ++i) {
            double denom = std::max({std::abs(g[0][static_cast<int>(i)]), std::abs(fd[i]), 1e-6});
            CHECK(std::abs(g[0][static_cast<int>(i)] - fd[i]) / denom < 1e-4);
        }
    }
}
