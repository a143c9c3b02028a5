#pragma once

#include <optional>
#include <span>
#include <string>

#include "subsetflow/conditioner.hpp"
#include "subsetflow/flow.hpp"

namespace subsetflow {

enum class DequantVariant { Uniform, Variational };

// Dequantization distribution q(y|x) with support exactly B(x) = [x, x+1)^D.
// The variational variant is a conditional truncated-logistic flow per
// dimension: a small dense network maps x to a location/scale pair per dim and
// the noise is the logistic CDF rescaled to the unit bin.
class Dequantizer {
public:
    static Dequantizer uniform(int D, int K);
    static Dequantizer variational(int D, int K, std::vector<int> hidden, uint64_t seed);

    DequantVariant variant() const { return variant_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    std::vector<Var> bind(Tape& tape) const { return store_.bind(tape); }

    // Reparameterized draw y ~ q(.|x) on the tape; log q(y|x) is accumulated
    // into *log_q (a scalar Var). The draw consumes the stream sequentially.
    std::vector<Var> sample_t(Tape& tape, const std::vector<Var>& bound, std::span<const int> x,
                              Rng& stream, Var* log_q) const;

    std::vector<double> sample(std::span<const int> x, Rng& stream, double* log_q) const;

private:
    Dequantizer() = default;

    DequantVariant variant_ = DequantVariant::Uniform;
    int D_ = 0, K_ = 0;
    ParamStore store_;
    std::optional<MaskedDenseNet> net_;
};

struct DequantEstimate {
    double value = 0.0;        // nats (log-likelihood scale, usually negative)
    std::string estimator;     // "elbo", "iwbo", "exact"
    int k = 1;
    int samples = 1;
    uint64_t seed = 0;
};

// One-sample ELBO estimate log p(y) - log q(y|x); the draw uses stream.split(0)
// so iwbo with k=1 is bit-identical.
double elbo_sample(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   const Rng& stream);

// log-mean-exp over k importance samples; sample i uses stream.split(i).
double iwbo_sample(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   int k, const Rng& stream);

// exact_log_likelihood(x) - mean of `samples` ELBO draws, in nats. Requires an
// exact-capable model.
double dequant_gap(const SubsetFlowModel& model, const Dequantizer& deq, std::span<const int> x,
                   int samples, const Rng& stream);

enum class Objective { Exact, ElboUniform, ElboVariational };

Objective objective_from_string(const std::string& s);
std::string objective_to_string(Objective o);

// Per-sample negative training objective on the tape. `dbound` may be empty
// unless the objective is elbo-variational, in which case `deq` must be a
// bound variational dequantizer.
Var neg_objective_t(const SubsetFlowModel& model, const Dequantizer* deq, Tape& tape,
                    const std::vector<Var>& mbound, const std::vector<Var>& dbound,
                    Objective objective, std::span<const int> x, Rng stream);

}  // namespace subsetflow
