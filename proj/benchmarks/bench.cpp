#include <benchmark/benchmark.h>

#include "subsetflow/flow.hpp"
#include "subsetflow/transforms.hpp"

using namespace subsetflow;

namespace {

SubsetFlowModel make_model(int layers) {
    ModelConfig cfg;
    cfg.D = 16;
    cfg.K = 8;
    cfg.bin_conditioning = true;
    for (int l = 0; l < layers; ++l)
        cfg.layers.push_back({TransformFamily::Quadratic, 8, {64, 64}, false});
    return SubsetFlowModel(cfg, 7, /*random_output_layer=*/true);
}

void bm_exact_log_likelihood(benchmark::State& state) {
    SubsetFlowModel model = make_model(static_cast<int>(state.range(0)));
    Rng rng(11);
    std::vector<int> x(16);
    for (int& v : x) v = rng.uniform_int(8);
    for (auto _ : state) benchmark::DoNotOptimize(model.exact_log_likelihood(x));
}
BENCHMARK(bm_exact_log_likelihood)->Arg(1)->Arg(2)->Arg(3);

void bm_sample(benchmark::State& state) {
    SubsetFlowModel model = make_model(static_cast<int>(state.range(0)));
    Rng rng(12);
    uint64_t i = 0;
    for (auto _ : state) {
        Rng s = rng.split(i++);
        benchmark::DoNotOptimize(model.sample(s));
    }
}
BENCHMARK(bm_sample)->Arg(1)->Arg(2);

void bm_transform_forward(benchmark::State& state) {
    Rng rng(13);
    TransformSpec spec{TransformFamily::Quadratic, 16, 1.0, false};
    std::vector<double> raw(transform_param_count(spec));
    for (double& v : raw) v = rng.uniform(-1.0, 1.0);
    Transform1D tr(spec, raw);
    double y = 0.0;
    for (auto _ : state) {
        y += 1e-7;
        if (y > 1.0) y = 0.0;
        benchmark::DoNotOptimize(tr.forward(y));
    }
}
BENCHMARK(bm_transform_forward);

}  // namespace

BENCHMARK_MAIN();
