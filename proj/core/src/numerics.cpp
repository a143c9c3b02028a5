#include "subsetflow/numerics.hpp"

#include <algorithm>

#include "subsetflow/rng.hpp"

namespace subsetflow {

double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw ContractError("log_sum_exp of empty list");
    double m = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(m)) return m;  // all -inf, or contains +inf
    double s = 0.0;
    for (double v : values) s += std::exp(v - m);
    return m + std::log(s);
}

namespace {

// Coefficients from Acklam's rational approximation of the probit function.
constexpr double kA[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                         -2.759285104469687e+02, 1.383577518672690e+02,
                         -3.066479806614716e+01, 2.506628277459239e+00};
constexpr double kB[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                         -1.556989798598866e+02, 6.680131188771972e+01,
                         -1.328068155288572e+01};
constexpr double kC[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                         -2.400758277161838e+00, -2.549732539343734e+00,
                         4.374664141464968e+00,  2.938163982698783e+00};
constexpr double kD[] = {7.784695709041462e-03, 3.224671290700398e-01,
                         2.445134137142996e+00, 3.754408661907416e+00};

double acklam(double p) {
    constexpr double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
               ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((kC[0] * q + kC[1]) * q + kC[2]) * q + kC[3]) * q + kC[4]) * q + kC[5]) /
               ((((kD[0] * q + kD[1]) * q + kD[2]) * q + kD[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((kA[0] * r + kA[1]) * r + kA[2]) * r + kA[3]) * r + kA[4]) * r + kA[5]) * q /
           (((((kB[0] * r + kB[1]) * r + kB[2]) * r + kB[3]) * r + kB[4]) * r + 1.0);
}

}  // namespace

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw ContractError("inverse_normal_cdf requires p in (0,1)");
    double x = acklam(p);
    // One Halley step against erfc for full double precision.
    for (int i = 0; i < 2; ++i) {
        double e = normal_cdf(x) - p;
        double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
        x = x - u / (1.0 + 0.5 * x * u);
    }
    return x;
}

double Rng::normal() { return inverse_normal_cdf(uniform_open()); }

MeanStderr mean_stderr(std::span<const double> values) {
    MeanStderr r;
    r.n = static_cast<int>(values.size());
    if (r.n == 0) return r;
    double s = 0.0;
    for (double v : values) s += v;
    r.mean = s / r.n;
    if (r.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.stderr_ = std::sqrt(ss / (r.n - 1)) / std::sqrt(static_cast<double>(r.n));
    }
    return r;
}

}  // namespace subsetflow
