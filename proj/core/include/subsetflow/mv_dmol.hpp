#pragma once

#include <span>
#include <vector>

#include "subsetflow/transforms.hpp"

namespace subsetflow {

// Multivariate discretized mixture of logistics over C=3 channels with K
// levels each: a shared mixture index, per-channel locations/scales, and
// linear autoregressive coefficients r coupling the channel means.
struct MvDmolParams {
    int M = 0;  // mixture components
    int K = 0;  // quantization levels per channel
    std::vector<double> logit_pi;  // M
    std::vector<double> mu;        // 3*M, channel-major: mu[c*M + m]
    std::vector<double> log_s;     // 3*M
    std::vector<double> r;         // 3*M: r1 (ch2<-ch1), r2 (ch3<-ch1), r3 (ch3<-ch2)
};

void validate_mv_dmol(const MvDmolParams& p, int channels = 3);

// Exact log P(x) of a 3-channel sample via the autoregressive factorization:
// each channel conditional is a univariate DMOL whose mixture weights are the
// posterior weights of the earlier channels and whose means are shifted by the
// r-linear terms.
double mv_dmol_log_prob(const MvDmolParams& p, std::span<const int> x);

// The univariate DMOL for channel c (0-based) given the earlier channel
// values; exposed so the per-channel conditionals can be inspected directly.
Transform1D mv_dmol_channel_transform(const MvDmolParams& p, int c, std::span<const int> prefix);

}  // namespace subsetflow
