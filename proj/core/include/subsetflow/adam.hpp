#pragma once

#include <utility>
#include <vector>

#include "subsetflow/params.hpp"

namespace subsetflow {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    // (epoch, factor) pairs; factors of all entries with epoch <= current apply.
    std::vector<std::pair<int, double>> decay;
};

// Effective learning rate at a given epoch.
double lr_at_epoch(const AdamConfig& cfg, int epoch);

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long step = 0;

    static AdamState init(const ParamStore& params);
};

// One bias-corrected Adam update in place. Shapes of params, grads and state
// must agree.
void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg, int epoch);

}  // namespace subsetflow
