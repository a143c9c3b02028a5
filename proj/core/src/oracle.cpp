#include "subsetflow/oracle.hpp"

#include <cmath>

#include "subsetflow/errors.hpp"

namespace subsetflow {

bool enumeration_feasible(int D, int K, const EnumerationBudget& budget) {
    return D * std::log2(static_cast<double>(K)) <= std::log2(budget.max_outcomes) + 1e-9;
}

double enumerate_normalization(const SubsetFlowModel& model, const EnumerationBudget& budget) {
    int D = model.config().D, K = model.config().K;
    if (!enumeration_feasible(D, K, budget))
        throw ConfigError("enumeration space exceeds the outcome budget");
    std::vector<int> x(D, 0);
    double total = 0.0;
    while (true) {
        total += std::exp(model.exact_log_likelihood(x));
        int d = D - 1;
        while (d >= 0 && ++x[d] == K) x[d--] = 0;
        if (d < 0) break;
    }
    return total;
}

namespace {

// Independent copy of the discretized-logistic machinery: plain CDF sigmoids
// with the half-offset edges, no Transform1D involved.
double dlogistic_mass(int x, int K, double mu, double log_s) {
    double s = std::max(std::exp(log_s), kMolScaleFloor);
    auto sig = [](double t) {
        return t >= 0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
    };
    double hi = (x == K - 1) ? 1.0 : sig((x + 0.5 - mu) / s);
    double lo = (x == 0) ? 0.0 : sig((x - 0.5 - mu) / s);
    return hi - lo;
}

}  // namespace

double joint_mv_dmol(const MvDmolParams& p, std::span<const int> x) {
    validate_mv_dmol(p);
    if (x.size() != 3) throw ContractError("joint_mv_dmol expects a 3-channel sample");
    int M = p.M;
    // Mixture weights by direct softmax.
    double lmax = p.logit_pi[0];
    for (int m = 0; m < M; ++m) lmax = std::max(lmax, p.logit_pi[m]);
    std::vector<double> pi(M);
    double z = 0.0;
    for (int m = 0; m < M; ++m) {
        pi[m] = std::exp(p.logit_pi[m] - lmax);
        z += pi[m];
    }
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        double mu1 = p.mu[0 * M + m];
        double mu2 = p.mu[1 * M + m] + p.r[0 * M + m] * x[0];
        double mu3 = p.mu[2 * M + m] + p.r[1 * M + m] * x[0] + p.r[2 * M + m] * x[1];
        total += (pi[m] / z) * dlogistic_mass(x[0], p.K, mu1, p.log_s[0 * M + m]) *
                 dlogistic_mass(x[1], p.K, mu2, p.log_s[1 * M + m]) *
                 dlogistic_mass(x[2], p.K, mu3, p.log_s[2 * M + m]);
    }
    return total;
}

std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& fn,
                                         std::span<const double> point, double h) {
    if (h <= 0.0) throw ContractError("finite differences need h > 0");
    std::vector<double> p(point.begin(), point.end());
    std::vector<double> g(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
        double orig = p[i];
        p[i] = orig + h;
        double fp = fn(p);
        p[i] = orig - h;
        double fm = fn(p);
        p[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

double quadrature_bin_mass(const SubsetFlowModel& model, std::span<const int> x, int grid) {
    int D = model.config().D;
    if (grid < 1 || std::pow(static_cast<double>(grid), D) > std::pow(32.0, D) + 0.5 ||
        std::pow(static_cast<double>(grid), D) > 1.1e6)
        throw ConfigError("quadrature grid exceeds the point budget");
    std::vector<int> idx(D, 0);
    std::vector<double> y(D);
    double total = 0.0;
    while (true) {
        for (int d = 0; d < D; ++d)
            y[d] = x[d] + (idx[d] + 0.5) / grid;
        total += std::exp(model.log_density(y));
        int d = D - 1;
        while (d >= 0 && ++idx[d] == grid) idx[d--] = 0;
        if (d < 0) break;
    }
    return total / std::pow(static_cast<double>(grid), D);
}

}  // namespace subsetflow
