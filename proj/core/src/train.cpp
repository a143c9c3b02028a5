#include "subsetflow/train.hpp"

#include <algorithm>
#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

namespace {

// One bias-corrected Adam step over the combined (model + dequantizer)
// parameter list.
void combined_adam_step(Checkpoint& ck, const std::vector<Tensor>& grads, int epoch) {
    const AdamConfig& cfg = ck.config.adam;
    AdamState& st = ck.opt;
    if (grads.size() != st.m.size())
        throw ContractError("train: gradient/moment count mismatch");
    st.step += 1;
    double lr = lr_at_epoch(cfg, epoch);
    double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    size_t gi = 0;
    auto update_store = [&](ParamStore& store) {
        for (int p = 0; p < store.count(); ++p, ++gi) {
            Tensor& theta = store.value(p);
            const Tensor& g = grads[gi];
            Tensor& m = st.m[gi];
            Tensor& v = st.v[gi];
            if (!g.same_shape(theta)) throw ContractError("train: gradient shape mismatch");
            for (int i = 0; i < theta.size(); ++i) {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.eps);
            }
        }
    };
    update_store(ck.model->params());
    if (ck.dequantizer) update_store(ck.dequantizer->params());
}

}  // namespace

std::vector<EpochLog> train(Checkpoint& ck, const OrdinalDataset& data,
                            const std::function<void(const EpochLog&)>& on_epoch) {
    const RunConfig& cfg = ck.config;
    if (static_cast<int>(data.D) != cfg.model.D || static_cast<int>(data.K) != cfg.model.K)
        throw ConfigError("train: dataset shape does not match the checkpoint config");
    if (data.N == 0) throw ConfigError("train: dataset is empty");

    Rng base = Rng::restore(ck.rng_key, ck.rng_counter);
    std::vector<EpochLog> logs;
    int first_epoch = ck.epochs_done;
    for (int epoch = first_epoch; epoch < first_epoch + cfg.epochs; ++epoch) {
        Rng erng = base.split(0xE50C0000ULL + static_cast<uint64_t>(epoch));
        std::vector<uint32_t> order(data.N);
        for (uint32_t i = 0; i < data.N; ++i) order[i] = i;
        for (uint32_t i = data.N - 1; i > 0; --i)
            std::swap(order[i], order[erng.uniform_int(static_cast<int>(i) + 1)]);

        double nats_sum = 0.0;
        for (uint32_t start = 0; start < data.N; start += cfg.batch) {
            uint32_t end = std::min(data.N, start + cfg.batch);
            std::vector<uint32_t> batch(order.begin() + start, order.begin() + end);
            // Fixed accumulation order for bitwise reproducibility.
            std::sort(batch.begin(), batch.end());
            std::vector<Tensor> acc;
            for (uint32_t idx : batch) {
                Tape t(true);
                std::vector<Var> mbound = ck.model->bind(t);
                std::vector<Var> dbound =
                    ck.dequantizer ? ck.dequantizer->bind(t) : std::vector<Var>{};
                std::vector<int> x = data.sample_ints(idx);
                Var loss = neg_objective_t(*ck.model, ck.dequantizer.get(), t, mbound, dbound,
                                           cfg.objective, x, erng.split(idx));
                nats_sum += t.scalar(loss);
                std::vector<Var> all = mbound;
                all.insert(all.end(), dbound.begin(), dbound.end());
                std::vector<Tensor> grads = t.grad(loss, all);
                if (acc.empty()) {
                    acc = std::move(grads);
                } else {
                    for (size_t g = 0; g < acc.size(); ++g)
                        for (int i = 0; i < acc[g].size(); ++i) acc[g][i] += grads[g][i];
                }
            }
            double inv = 1.0 / static_cast<double>(batch.size());
            for (Tensor& g : acc)
                for (int i = 0; i < g.size(); ++i) g[i] *= inv;
            combined_adam_step(ck, acc, epoch);
            ck.steps += 1;
        }
        ck.epochs_done = epoch + 1;
        EpochLog log{epoch, nats_sum / data.N / (cfg.model.D * std::log(2.0))};
        logs.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    return logs;
}

}  // namespace subsetflow
