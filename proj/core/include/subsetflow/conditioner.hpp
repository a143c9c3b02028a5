#pragma once

#include <string>
#include <vector>

#include "subsetflow/params.hpp"
#include "subsetflow/rng.hpp"
#include "subsetflow/tape.hpp"

namespace subsetflow {

// Affine map of a raw value in [0, domain] to the network input range [-1, 1].
inline double normalize_value(double raw, double domain) { return 2.0 * raw / domain - 1.0; }
inline double denormalize_value(double n, double domain) { return (n + 1.0) * 0.5 * domain; }

inline Var normalize_vec(Tape& t, Var raw, double domain) {
    return t.add_scalar(t.mul_scalar(raw, 2.0 / domain), -1.0);
}

// Dense network with optional MADE-style autoregressive masks.
//
// With masks, output block d (of size out_per_dim) is a function of the inputs
// at strictly earlier autoregressive positions only. `positions[d]` gives the
// 0-based position of dimension d in the autoregressive order; raster order is
// positions[d] = d.
//
// Hidden activations are tanh; the final layer is linear. With zero_last the
// final layer starts at zero so the initial parameter blocks are all-zero
// (identity/uniform transforms).
class MaskedDenseNet {
public:
    MaskedDenseNet(ParamStore& store, const std::string& prefix, int in_dim, int out_per_dim,
                   const std::vector<int>& hidden, const std::vector<int>& positions,
                   Rng& init_rng, bool zero_last);

    // Unmasked variant: every output may depend on every input.
    MaskedDenseNet(ParamStore& store, const std::string& prefix, int in_dim, int out_total,
                   const std::vector<int>& hidden, Rng& init_rng, bool zero_last);

    Var forward(Tape& tape, const std::vector<Var>& bound, Var input) const;
    std::vector<double> forward_plain(const ParamStore& store, const std::vector<double>& input) const;

    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }
    int out_per_dim() const { return out_per_dim_; }

private:
    void build(ParamStore& store, const std::string& prefix, const std::vector<int>& widths,
               Rng& init_rng, bool zero_last);

    int in_dim_ = 0;
    int out_dim_ = 0;
    int out_per_dim_ = 0;
    std::vector<int> w_idx_, b_idx_;
    std::vector<Tensor> masks_;
};

}  // namespace subsetflow
