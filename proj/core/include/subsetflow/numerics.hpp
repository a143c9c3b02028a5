#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "subsetflow/errors.hpp"

namespace subsetflow {

// Max-shifted log(sum(exp(v))). Errors on empty input.
double log_sum_exp(std::span<const double> values);

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sigmoid(double x) {
    // log sigma(x) = -log(1 + e^{-x})
    return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Inverse standard normal CDF (Acklam's approximation polished with Newton).
double inverse_normal_cdf(double p);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
    int n = 0;
};

MeanStderr mean_stderr(std::span<const double> values);

// Negative log-likelihood in nats over D dimensions, expressed in bits/dim.
inline double nats_to_bits_per_dim(double log_likelihood, int dims) {
    return -log_likelihood / (static_cast<double>(dims) * std::log(2.0));
}

}  // namespace subsetflow
