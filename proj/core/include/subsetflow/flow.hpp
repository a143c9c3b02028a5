#pragma once

#include <memory>
#include <span>
#include <vector>

#include "subsetflow/conditioner.hpp"
#include "subsetflow/params.hpp"
#include "subsetflow/rng.hpp"
#include "subsetflow/transforms.hpp"

namespace subsetflow {

struct LayerConfig {
    TransformFamily family = TransformFamily::Quadratic;
    int bins = 16;  // mixture count for Mol
    std::vector<int> hidden = {64, 64};
    bool reversed_order = false;  // reverse the autoregressive order for this layer
};

struct ModelConfig {
    int D = 0;
    int K = 0;
    bool bin_conditioning = true;
    std::vector<LayerConfig> layers;
};

// Stack of autoregressive flow layers over [0,K]^D with a uniform base
// distribution on [0,1]^D. Exact discrete likelihoods are available when all
// layers share one autoregressive order and bin conditioning is on; otherwise
// only density evaluation (for dequantization bounds) is supported.
class SubsetFlowModel {
public:
    // random_output_layer keeps the final conditioner layers randomly
    // initialized instead of zero (used to build non-trivial random models).
    SubsetFlowModel(ModelConfig cfg, uint64_t init_seed, bool random_output_layer = false);

    const ModelConfig& config() const { return cfg_; }
    ParamStore& params() { return store_; }
    const ParamStore& params() const { return store_; }
    int layer_count() const { return static_cast<int>(cfg_.layers.size()); }
    TransformSpec layer_spec(int l) const;
    const MaskedDenseNet& net(int l) const { return nets_[l]; }

    bool exact_capable() const;

    std::vector<Var> bind(Tape& tape) const { return store_.bind(tape); }

    // Hyperrectangle-propagation likelihood. Requires exact capability.
    Var exact_log_likelihood_t(Tape& tape, const std::vector<Var>& bound,
                               std::span<const int> x) const;
    double exact_log_likelihood(std::span<const int> x) const;

    // Continuous model density at y in [0,K]^D. The Var overload keeps the
    // point differentiable (reparameterized dequantization samples).
    Var log_density_t(Tape& tape, const std::vector<Var>& bound,
                      std::span<const double> y) const;
    Var log_density_t(Tape& tape, const std::vector<Var>& bound,
                      const std::vector<Var>& y) const;
    double log_density(std::span<const double> y) const;

    // Image of the bin of x at the top of the stack. Requires exact capability.
    std::vector<Interval> latent_box(std::span<const int> x) const;

    std::vector<int> sample(Rng& rng, std::vector<double>* y_out = nullptr) const;
    std::vector<int> invert_latent(std::span<const double> z,
                                   std::vector<double>* y_out = nullptr) const;

    // Path of equally probable latent interpolants between the boxes of xa and
    // xb; element 0 reconstructs xa, the last element xb. Requires exact
    // capability.
    std::vector<std::vector<int>> interpolate(std::span<const int> xa, std::span<const int> xb,
                                              int steps, Rng& rng) const;

private:
    std::vector<int> layer_positions(int l) const;
    void check_x(std::span<const int> x) const;
    std::vector<int> invert_shared_order(std::span<const double> z, std::vector<double>* y_out) const;
    std::vector<int> invert_layerwise(std::span<const double> z, std::vector<double>* y_out) const;

    ModelConfig cfg_;
    ParamStore store_;
    std::vector<MaskedDenseNet> nets_;
};

void validate_model_config(const ModelConfig& cfg);

}  // namespace subsetflow
