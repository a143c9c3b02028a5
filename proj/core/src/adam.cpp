#include "subsetflow/adam.hpp"

#include <cmath>

namespace subsetflow {

double lr_at_epoch(const AdamConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (const auto& [e, f] : cfg.decay)
        if (epoch >= e) lr *= f;
    return lr;
}

AdamState AdamState::init(const ParamStore& params) {
    AdamState s;
    for (int i = 0; i < params.count(); ++i) {
        s.m.emplace_back(params.value(i).shape());
        s.v.emplace_back(params.value(i).shape());
    }
    return s;
}

void adam_step(ParamStore& params, const std::vector<Tensor>& grads, AdamState& state,
               const AdamConfig& cfg, int epoch) {
    if (static_cast<int>(grads.size()) != params.count() ||
        static_cast<int>(state.m.size()) != params.count())
        throw ContractError("adam_step: parameter/gradient/state count mismatch");
    state.step += 1;
    double lr = lr_at_epoch(cfg, epoch);
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (int p = 0; p < params.count(); ++p) {
        Tensor& theta = params.value(p);
        const Tensor& g = grads[p];
        if (!theta.same_shape(g)) throw ContractError("adam_step: gradient shape mismatch");
        Tensor& m = state.m[p];
        Tensor& v = state.v[p];
        for (int i = 0; i < theta.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            double mhat = m[i] / bc1;
            double vhat = v[i] / bc2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace subsetflow
