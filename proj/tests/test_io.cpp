#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "subsetflow/checkpoint.hpp"
#include "subsetflow/commands.hpp"
#include "subsetflow/dataset.hpp"
#include "subsetflow/train.hpp"

using namespace subsetflow;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/subsetflow_test_" + name; }

std::vector<char> read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("dataset file roundtrip and validation") {
    OrdinalDataset ds = gen_markov(40, 6, 4, 1.0, 5);
    std::string path = tmp_path("ds.subf");
    save_dataset(ds, path);
    OrdinalDataset back = load_dataset(path);
    CHECK(back.N == ds.N);
    CHECK(back.D == ds.D);
    CHECK(back.K == ds.K);
    CHECK(back.data == ds.data);

    SUBCASE("bad magic") {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << "NOPE!!!!!!!!!!!!!!!!!!!!";
        out.close();
        CHECK_THROWS_AS(load_dataset(path), DataFormatError);
    }
    SUBCASE("truncated payload") {
        auto bytes = read_bytes(path);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 5));
        out.close();
        CHECK_THROWS_AS(load_dataset(path), DataFormatError);
    }
    SUBCASE("value >= K rejected") {
        auto bytes = read_bytes(path);
        bytes[20] = 7;  // first payload byte, K is 4
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        out.close();
        CHECK_THROWS_AS(load_dataset(path), DataFormatError);
    }
    SUBCASE("trailing bytes rejected") {
        std::ofstream out(path, std::ios::binary | std::ios::app);
        out.put(0);
        out.close();
        CHECK_THROWS_AS(load_dataset(path), DataFormatError);
    }
    std::remove(path.c_str());
}

TEST_CASE("empty dataset file is valid") {
    OrdinalDataset ds{0, 3, 4, {}};
    std::string path = tmp_path("empty.subf");
    save_dataset(ds, path);
    OrdinalDataset back = load_dataset(path);
    CHECK(back.N == 0);
    CHECK(back.data.empty());
    std::remove(path.c_str());
}

TEST_CASE("toy generator entropies") {
    CHECK(independent_entropy_bits_per_dim(4) == doctest::Approx(2.0));
    // tau -> infinity approaches independent uniform.
    CHECK(markov_entropy_bits_per_dim(8, 4, 1e9) == doctest::Approx(2.0).epsilon(1e-6));
    // Correlation strictly reduces entropy.
    CHECK(markov_entropy_bits_per_dim(8, 4, 1.0) < 2.0);
    // Empirical frequency sanity for the independent kind.
    OrdinalDataset ds = gen_independent(20000, 2, 4, 9);
    std::vector<int> counts(4, 0);
    for (uint8_t v : ds.data) counts[v]++;
    for (int c : counts) CHECK(std::abs(c - 10000) < 4 * 100);  // ~4 sigma
}

TEST_CASE("config parsing and capability validation") {
    RunConfig cfg = parse_run_config(R"({
        "model": {"bin_conditioning": true,
                   "layers": [{"transform": "quadratic", "bins": 8, "hidden": [32], "order": "raster"},
                              {"transform": "mol", "order": "raster"}]},
        "train": {"objective": "exact", "lr": 0.001, "batch": 16, "epochs": 5, "seed": 3,
                   "lr_decay": [[2, 0.5]]},
        "eval": {"estimators": ["exact", "iwbo"], "k_list": [5], "mc_samples": 50}
    })");
    finalize_run_config(cfg, 6, 4);
    CHECK(cfg.model.D == 6);
    CHECK(cfg.model.layers[0].bins == 8);
    CHECK(cfg.model.layers[1].bins == 10);  // mol default
    CHECK(cfg.adam.decay.size() == 1);

    CHECK_THROWS_AS(parse_run_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({"model": {"layers": []}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config(R"({
        "model": {"layers": [{"transform": "cubic"}]}})"),
                    ConfigError);

    RunConfig bad = parse_run_config(R"({
        "model": {"bin_conditioning": false, "layers": [{"transform": "linear"}]},
        "train": {"objective": "exact"}})");
    CHECK_THROWS_AS(finalize_run_config(bad, 4, 4), ConfigError);

    RunConfig rot = parse_run_config(R"({
        "model": {"layers": [{"transform": "linear", "order": "raster"},
                              {"transform": "linear", "order": "rotated"}]},
        "train": {"objective": "exact"}})");
    CHECK_THROWS_AS(finalize_run_config(rot, 4, 4), ConfigError);
    rot.objective = Objective::ElboUniform;
    finalize_run_config(rot, 4, 4);  // fine as a bound-only model
}

TEST_CASE("checkpoint round-trip is byte-identical") {
    RunConfig cfg = parse_run_config(R"({
        "model": {"layers": [{"transform": "quadratic", "bins": 3, "hidden": [8]}]},
        "train": {"objective": "elbo-variational", "lr": 0.01, "batch": 8, "epochs": 2, "seed": 7}
    })");
    finalize_run_config(cfg, 4, 4);
    Checkpoint ck = init_checkpoint(cfg);
    OrdinalDataset data = gen_markov(32, 4, 4, 1.0, 11);
    train(ck, data);
    std::string p1 = tmp_path("ck1.bin"), p2 = tmp_path("ck2.bin");
    save_checkpoint(ck, p1);
    Checkpoint back = load_checkpoint(p1);
    save_checkpoint(back, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
    CHECK(back.steps == ck.steps);
    CHECK(back.epochs_done == 2);
    REQUIRE(back.dequantizer != nullptr);
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("training is deterministic given the seed") {
    RunConfig cfg = parse_run_config(R"({
        "model": {"layers": [{"transform": "linear", "hidden": [8]}]},
        "train": {"objective": "exact", "lr": 0.01, "batch": 16, "epochs": 3, "seed": 21}
    })");
    finalize_run_config(cfg, 6, 4);
    OrdinalDataset data = gen_markov(64, 6, 4, 1.0, 13);
    Checkpoint a = init_checkpoint(cfg);
    Checkpoint b = init_checkpoint(cfg);
    auto la = train(a, data);
    auto lb = train(b, data);
    REQUIRE(la.size() == lb.size());
    for (size_t i = 0; i < la.size(); ++i) CHECK(la[i].bits_per_dim == lb[i].bits_per_dim);
    std::string p1 = tmp_path("det1.bin"), p2 = tmp_path("det2.bin");
    save_checkpoint(a, p1);
    save_checkpoint(b, p2);
    CHECK(read_bytes(p1) == read_bytes(p2));
    std::remove(p1.c_str());
    std::remove(p2.c_str());
}

TEST_CASE("eval reports are reproducible") {
    OrdinalDataset data = gen_markov(16, 4, 4, 1.0, 17);
    std::string dpath = tmp_path("rep.subf"), cpath = tmp_path("rep.ck");
    save_dataset(data, dpath);
    RunConfig cfg = parse_run_config(R"({
        "model": {"layers": [{"transform": "quadratic", "bins": 3, "hidden": [8]}]},
        "train": {"objective": "exact", "epochs": 1, "seed": 3}
    })");
    finalize_run_config(cfg, 4, 4);
    Checkpoint ck = init_checkpoint(cfg);
    train(ck, data);
    save_checkpoint(ck, cpath);
    std::ostringstream r1, r2;
    cmd_eval(cpath, dpath, {"exact", "elbo", "iwbo"}, {5}, 10, 99, r1);
    cmd_eval(cpath, dpath, {"exact", "elbo", "iwbo"}, {5}, 10, 99, r2);
    CHECK(r1.str() == r2.str());
    std::remove(dpath.c_str());
    std::remove(cpath.c_str());
}
