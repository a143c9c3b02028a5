#include <cmath>
#include <vector>

#include "doctest.h"
#include "subsetflow/conditioner.hpp"

using namespace subsetflow;

TEST_CASE("input normalization endpoints") {
    CHECK(normalize_value(0.0, 8.0) == -1.0);
    CHECK(normalize_value(8.0, 8.0) == 1.0);
    CHECK(normalize_value(4.0, 8.0) == 0.0);
    CHECK(denormalize_value(normalize_value(3.1, 8.0), 8.0) == doctest::Approx(3.1).epsilon(1e-12));
    // Shifting the raw value by one bin shifts the input by 2/K.
    CHECK(normalize_value(5.0, 8.0) - normalize_value(4.0, 8.0) ==
          doctest::Approx(2.0 / 8.0).epsilon(1e-14));
}

TEST_CASE("autoregressive mask: gradient probe") {
    int D = 4, P = 3;
    Rng rng(5);
    for (int rep = 0; rep < 5; ++rep) {
        ParamStore store;
        std::vector<int> positions(D);
        bool reversed = rep % 2 == 1;
        for (int d = 0; d < D; ++d) positions[d] = reversed ? D - 1 - d : d;
        Rng init = rng.split(rep);
        MaskedDenseNet net(store, "n", D, P, {16, 16}, positions, init, false);
        std::vector<double> input(D);
        for (double& v : input) v = rng.uniform(-1.0, 1.0);
        for (int out = 0; out < D * P; ++out) {
            Tape t;
            std::vector<Var> bound = store.bind(t);
            Var in = t.leaf(Tensor::vec(input), true);
            Var y = net.forward(t, bound, in);
            auto g = t.grad(t.gather(y, out), {in});
            int d = out / P;
            for (int e = 0; e < D; ++e) {
                if (positions[e] >= positions[d])
                    CHECK(g[0][e] == 0.0);  // exact zero, enforced by the mask
            }
        }
    }
}

TEST_CASE("autoregressive mask: perturbation probe") {
    int D = 3, P = 2;
    ParamStore store;
    Rng init(9);
    MaskedDenseNet net(store, "n", D, P, {8}, {0, 1, 2}, init, false);
    std::vector<double> base = {0.1, -0.4, 0.9};
    std::vector<double> out0 = net.forward_plain(store, base);
    // Perturbing dimension e never changes outputs for d <= e.
    for (int e = 0; e < D; ++e) {
        std::vector<double> pert = base;
        pert[e] += 0.5;
        std::vector<double> out1 = net.forward_plain(store, pert);
        for (int d = 0; d <= e; ++d)
            for (int p = 0; p < P; ++p) CHECK(out0[d * P + p] == out1[d * P + p]);
    }
}

TEST_CASE("D=1 conditioner output is constant") {
    ParamStore store;
    Rng init(7);
    MaskedDenseNet net(store, "n", 1, 4, {8}, {0}, init, false);
    std::vector<double> a = net.forward_plain(store, {-0.8});
    std::vector<double> b = net.forward_plain(store, {0.9});
    for (int i = 0; i < 4; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("zero-init final layer gives all-zero outputs") {
    ParamStore store;
    Rng init(3);
    MaskedDenseNet net(store, "n", 3, 2, {8}, {0, 1, 2}, init, true);
    std::vector<double> out = net.forward_plain(store, {0.2, -0.3, 0.7});
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("tape forward and plain forward agree bitwise") {
    ParamStore store;
    Rng init(21);
    MaskedDenseNet net(store, "n", 3, 2, {8, 8}, {0, 1, 2}, init, false);
    std::vector<double> input = {0.4, -0.2, 0.6};
    std::vector<double> plain = net.forward_plain(store, input);
    Tape t(true);
    std::vector<Var> bound = store.bind(t);
    Var out = net.forward(t, bound, t.leaf(Tensor::vec(input), false));
    for (int i = 0; i < 6; ++i) CHECK(t.val(out)[i] == plain[i]);
}
