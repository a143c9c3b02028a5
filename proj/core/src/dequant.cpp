#include "subsetflow/dequant.hpp"

#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

Dequantizer Dequantizer::uniform(int D, int K) {
    Dequantizer d;
    d.variant_ = DequantVariant::Uniform;
    d.D_ = D;
    d.K_ = K;
    return d;
}

Dequantizer Dequantizer::variational(int D, int K, std::vector<int> hidden, uint64_t seed) {
    Dequantizer d;
    d.variant_ = DequantVariant::Variational;
    d.D_ = D;
    d.K_ = K;
    Rng rng(seed);
    d.net_.emplace(d.store_, "dequant", D, 2 * D, hidden, rng, /*zero_last=*/true);
    return d;
}

std::vector<Var> Dequantizer::sample_t(Tape& t, const std::vector<Var>& bound,
                                       std::span<const int> x, Rng& stream, Var* log_q) const {
    if (static_cast<int>(x.size()) != D_)
        throw ContractError("dequantizer: sample dimensionality mismatch");
    std::vector<Var> y(D_);
    if (variant_ == DequantVariant::Uniform) {
        for (int d = 0; d < D_; ++d)
            y[d] = t.constant(x[d] + stream.uniform_open());
        if (log_q) *log_q = t.constant(0.0);
        return y;
    }
    // Variational: truncated logistic per dimension, reparameterized through
    // the inverse CDF so gradients reach both location and scale.
    std::vector<double> nx(D_);
    for (int d = 0; d < D_; ++d) nx[d] = normalize_value(static_cast<double>(x[d]), K_);
    Var out = net_->forward(t, bound, t.leaf(Tensor::vec(nx), false));
    Var lq = t.constant(0.0);
    for (int d = 0; d < D_; ++d) {
        Var m = t.sigmoid_(t.gather(out, 2 * d));
        Var s = t.add_scalar(t.exp_(t.clamp(t.gather(out, 2 * d + 1), -6.0, 3.0)), 1e-2);
        Var s0 = t.sigmoid_(t.div(t.neg(m), s));
        Var s1 = t.sigmoid_(t.div(t.add_scalar(t.neg(m), 1.0), s));
        double eps = stream.uniform_open();
        Var p = t.add(s0, t.mul_scalar(t.sub(s1, s0), eps));
        Var u = t.add(m, t.mul(s, t.sub(t.log_(p), t.log_(t.add_scalar(t.neg(p), 1.0)))));
        u = t.clamp(u, 1e-12, 1.0 - 1e-12);
        Var tt = t.div(t.sub(u, m), s);
        Var lpdf = t.sub(t.add(t.log_(t.sigmoid_(tt)), t.log_(t.sigmoid_(t.neg(tt)))),
                         t.add(t.log_(s), t.log_(t.sub(s1, s0))));
        lq = t.add(lq, lpdf);
        y[d] = t.add_scalar(u, static_cast<double>(x[d]));
    }
    if (log_q) *log_q = lq;
    return y;
}

std::vector<double> Dequantizer::sample(std::span<const int> x, Rng& stream,
                                        double* log_q) const {
    Tape t(false);
    std::vector<Var> bound = store_.bind(t);
    Var lq;
    std::vector<Var> y = sample_t(t, bound, x, stream, &lq);
    std::vector<double> out(y.size());
    for (size_t d = 0; d < y.size(); ++d) out[d] = t.scalar(y[d]);
    if (log_q) *log_q = t.scalar(lq);
    return out;
}

double elbo_sample(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   const Rng& stream) {
    return iwbo_sample(model, deq, x, 1, stream);
}

double iwbo_sample(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   int k, const Rng& stream) {
    if (k < 1) throw ContractError("iwbo needs k >= 1");
    std::vector<double> logw(k);
    for (int i = 0; i < k; ++i) {
        Rng sub = stream.split(static_cast<uint64_t>(i));
        double lq = 0.0;
        std::vector<double> y = deq.sample(x, sub, &lq);
        logw[i] = model.log_density(y) - lq;
    }
    return log_sum_exp(logw) - std::log(static_cast<double>(k));
}

double dequant_gap(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   int samples, const Rng& stream) {
    if (samples < 1) throw ContractError("dequant_gap needs samples >= 1");
    double exact = model.exact_log_likelihood(x);
    double acc = 0.0;
    for (int i = 0; i < samples; ++i)
        acc += elbo_sample(model, deq, x, stream.split(static_cast<uint64_t>(i)));
    return exact - acc / samples;
}

Objective objective_from_string(const std::string& s) {
    if (s == "exact") return Objective::Exact;
    if (s == "elbo-uniform") return Objective::ElboUniform;
    if (s == "elbo-variational") return Objective::ElboVariational;
    throw ConfigError("unknown objective '" + s + "'");
}

std::string objective_to_string(Objective o) {
    switch (o) {
        case Objective::Exact: return "exact";
        case Objective::ElboUniform: return "elbo-uniform";
        case Objective::ElboVariational: return "elbo-variational";
    }
    throw ContractError("unknown objective");
}

Var neg_objective_t(const SubsetFlowModel& model, const Dequantizer* deq, Tape& t,
                    const std::vector<Var>& mbound, const std::vector<Var>& dbound,
                    Objective objective, std::span<const int> x, Rng stream) {
    switch (objective) {
        case Objective::Exact: {
            if (!model.exact_capable())
                throw ConfigError(
                    "objective 'exact' requires bin conditioning and a shared autoregressive "
                    "order");
            return t.neg(model.exact_log_likelihood_t(t, mbound, x));
        }
        case Objective::ElboUniform: {
            std::vector<Var> y(x.size());
            Rng sub = stream.split(0);
            for (size_t d = 0; d < x.size(); ++d)
                y[d] = t.constant(x[d] + sub.uniform_open());
            return t.neg(model.log_density_t(t, mbound, y));
        }
        case Objective::ElboVariational: {
            if (!deq || deq->variant() != DequantVariant::Variational)
                throw ConfigError(
                    "objective 'elbo-variational' requires a variational dequantizer");
            Rng sub = stream.split(0);
            Var lq;
            std::vector<Var> y = deq->sample_t(t, dbound, x, sub, &lq);
            return t.neg(t.sub(model.log_density_t(t, mbound, y), lq));
        }
    }
    throw ContractError("unknown objective");
}

}  // namespace subsetflow
