#include "subsetflow/mv_dmol.hpp"

#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

void validate_mv_dmol(const MvDmolParams& p, int channels) {
    if (channels != 3)
        throw ConfigError("multivariate DMOL is defined for 3 channels only");
    if (p.M < 1) throw ConfigError("multivariate DMOL: M must be >= 1");
    if (p.K < 2 || p.K > 256) throw ConfigError("multivariate DMOL: K must be in [2, 256]");
    size_t M = static_cast<size_t>(p.M);
    if (p.logit_pi.size() != M || p.mu.size() != 3 * M || p.log_s.size() != 3 * M ||
        p.r.size() != 3 * M)
        throw ConfigError("multivariate DMOL: parameter sizes do not match M");
}

namespace {

// Mean of component m for channel c given earlier channel values.
double channel_mean(const MvDmolParams& p, int c, int m, std::span<const int> prefix) {
    int M = p.M;
    double mu = p.mu[c * M + m];
    if (c == 1) mu += p.r[0 * M + m] * prefix[0];
    if (c == 2) mu += p.r[1 * M + m] * prefix[0] + p.r[2 * M + m] * prefix[1];
    return mu;
}

// log mass of component m at symbol x for channel c (DMOL edge convention).
double component_log_mass(const MvDmolParams& p, int c, int m, int x,
                          std::span<const int> prefix) {
    double mu = channel_mean(p, c, m, prefix);
    double s = std::max(std::exp(p.log_s[c * p.M + m]), kMolScaleFloor);
    double hi = (x == p.K - 1) ? 1.0 : sigmoid((x + 0.5 - mu) / s);
    double lo = (x == 0) ? 0.0 : sigmoid((x - 0.5 - mu) / s);
    return std::log(std::max(hi - lo, 1e-300));
}

}  // namespace

Transform1D mv_dmol_channel_transform(const MvDmolParams& p, int c, std::span<const int> prefix) {
    validate_mv_dmol(p);
    if (c < 0 || c > 2 || static_cast<int>(prefix.size()) != c)
        throw ContractError("multivariate DMOL: channel/prefix mismatch");
    int M = p.M;
    std::vector<double> logits(M), mu(M), s(M);
    for (int m = 0; m < M; ++m) {
        // Posterior mixture weights given the earlier channels.
        logits[m] = p.logit_pi[m];
        for (int cc = 0; cc < c; ++cc)
            logits[m] += component_log_mass(p, cc, m, prefix[cc], prefix.subspan(0, cc));
        mu[m] = channel_mean(p, c, m, prefix);
        s[m] = std::exp(p.log_s[c * M + m]);
    }
    return Transform1D::mol(static_cast<double>(p.K), /*absorb_tails=*/true, logits, mu, s);
}

double mv_dmol_log_prob(const MvDmolParams& p, std::span<const int> x) {
    validate_mv_dmol(p);
    if (x.size() != 3) throw ContractError("multivariate DMOL expects a 3-channel sample");
    for (int v : x)
        if (v < 0 || v >= p.K) throw ContractError("multivariate DMOL: value outside [0, K)");
    double lp = 0.0;
    for (int c = 0; c < 3; ++c) {
        Transform1D tr = mv_dmol_channel_transform(p, c, x.subspan(0, c));
        double mass = tr.interval_width(static_cast<double>(x[c]), static_cast<double>(x[c] + 1));
        lp += std::log(std::max(mass, 1e-300));
    }
    return lp;
}

}  // namespace subsetflow
