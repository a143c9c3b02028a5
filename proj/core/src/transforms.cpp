#include "subsetflow/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

int transform_param_count(const TransformSpec& spec) {
    switch (spec.family) {
        case TransformFamily::Linear: return spec.bins;
        case TransformFamily::Quadratic: return 2 * spec.bins + 1;
        case TransformFamily::Mol: return 3 * spec.bins;
    }
    throw ContractError("unknown transform family");
}

namespace {

std::vector<double> softmax_plain(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double s = 0.0;
    for (size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        s += out[i];
    }
    for (double& v : out) v /= s;
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transform1D
// ---------------------------------------------------------------------------

Transform1D::Transform1D(const TransformSpec& spec, std::span<const double> raw) {
    spec_ = spec;
    if (static_cast<int>(raw.size()) != transform_param_count(spec))
        throw ContractError("transform raw parameter block has wrong size");
    switch (spec.family) {
        case TransformFamily::Linear: derive_linear(raw); break;
        case TransformFamily::Quadratic: derive_quadratic(raw); break;
        case TransformFamily::Mol: derive_mol_from_raw(raw); break;
    }
}

Transform1D Transform1D::mol(double domain, bool absorb_tails, std::span<const double> pi_logits,
                             std::span<const double> mu, std::span<const double> scales) {
    Transform1D t;
    t.spec_ = {TransformFamily::Mol, static_cast<int>(pi_logits.size()), domain, absorb_tails};
    t.pi_ = softmax_plain(pi_logits);
    t.mu_.assign(mu.begin(), mu.end());
    t.s_.resize(scales.size());
    for (size_t m = 0; m < scales.size(); ++m) t.s_[m] = std::max(scales[m], kMolScaleFloor);
    t.finish_mol();
    return t;
}

void Transform1D::derive_linear(std::span<const double> logits) {
    pi_ = softmax_plain(logits);
    cumz_.resize(pi_.size());
    double s = 0.0;
    for (size_t k = 0; k < pi_.size(); ++k) {
        s += pi_[k];
        cumz_[k] = s;
    }
}

void Transform1D::derive_quadratic(std::span<const double> raw) {
    int B = spec_.bins;
    w_ = softmax_plain(raw.subspan(0, B));
    for (double& x : w_) x *= spec_.domain;
    // Vertex densities: exp normalized so the trapezoid integral is 1. The
    // shift by the max cancels in the normalization.
    double vmax = raw[B];
    for (int k = 0; k <= B; ++k) vmax = std::max(vmax, raw[B + k]);
    std::vector<double> ev(B + 1);
    for (int k = 0; k <= B; ++k) ev[k] = std::exp(raw[B + k] - vmax);
    double denom = 0.0;
    for (int k = 0; k < B; ++k) denom += 0.5 * (ev[k] + ev[k + 1]) * w_[k];
    v_.resize(B + 1);
    for (int k = 0; k <= B; ++k) v_[k] = ev[k] / denom;
    knots_.resize(B + 1);
    knots_[0] = 0.0;
    for (int k = 0; k < B; ++k) knots_[k + 1] = knots_[k] + w_[k];
    masses_.resize(B);
    cumz_.resize(B);
    double s = 0.0;
    for (int k = 0; k < B; ++k) {
        masses_[k] = 0.5 * (v_[k] + v_[k + 1]) * w_[k];
        s += masses_[k];
        cumz_[k] = s;
    }
}

void Transform1D::derive_mol_from_raw(std::span<const double> raw) {
    int M = spec_.bins;
    pi_ = softmax_plain(raw.subspan(0, M));
    double Q = spec_.domain;
    mu_.resize(M);
    s_.resize(M);
    for (int m = 0; m < M; ++m) {
        mu_[m] = 0.5 * Q + raw[M + m] * (0.25 * Q);
        double c = std::min(std::max(raw[2 * M + m], -10.0), 10.0);
        s_[m] = kMolScaleFloor + (Q / 8.0) * std::exp(c);
    }
    finish_mol();
}

void Transform1D::finish_mol() {
    if (!spec_.absorb_tails) {
        trunc_lo_ = mol_cdf(0.0);
        trunc_hi_ = mol_cdf(spec_.domain);
        if (trunc_hi_ - trunc_lo_ <= 0.0)
            throw NumericError("degenerate mixture-of-logistics transform");
    }
}

void Transform1D::check_y(double y) const {
    if (spec_.family == TransformFamily::Mol && spec_.absorb_tails) return;
    if (y < 0.0 || y > spec_.domain)
        throw ContractError("transform input outside [0, domain]");
}

int Transform1D::bin_of_y(double y) const {
    if (spec_.family == TransformFamily::Linear) {
        int K = spec_.bins;
        int k = static_cast<int>(std::floor(y * K / spec_.domain));
        return std::min(std::max(k, 0), K - 1);
    }
    // quadratic: knots are non-uniform
    int B = spec_.bins;
    auto it = std::upper_bound(knots_.begin() + 1, knots_.end(), y);
    int k = static_cast<int>(it - knots_.begin()) - 1;
    return std::min(std::max(k, 0), B - 1);
}

int Transform1D::bin_of_z(double z) const {
    int n = static_cast<int>(cumz_.size());
    for (int k = 0; k < n; ++k)
        if (z <= cumz_[k]) return k;
    return n - 1;
}

double Transform1D::mol_cdf(double y) const {
    double shift = spec_.absorb_tails ? 0.5 : 0.0;
    double z = 0.0;
    for (size_t m = 0; m < pi_.size(); ++m)
        z += pi_[m] * sigmoid((y - shift - mu_[m]) / s_[m]);
    return z;
}

double Transform1D::deriv_unclamped_pdf(double y) const {
    double shift = spec_.absorb_tails ? 0.5 : 0.0;
    double p = 0.0;
    for (size_t m = 0; m < pi_.size(); ++m) {
        double sg = sigmoid((y - shift - mu_[m]) / s_[m]);
        p += pi_[m] * sg * (1.0 - sg) / s_[m];
    }
    return p;
}

double Transform1D::mol_endpoint_term(double y, int m) const {
    if (spec_.absorb_tails) {
        if (y <= 0.0) return 0.0;
        if (y >= spec_.domain) return 1.0;
    }
    double shift = spec_.absorb_tails ? 0.5 : 0.0;
    return sigmoid((y - shift - mu_[m]) / s_[m]);
}

double Transform1D::forward(double y) const {
    check_y(y);
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int k = bin_of_y(y);
            double wq = spec_.domain / spec_.bins;
            double zprev = k > 0 ? cumz_[k - 1] : 0.0;
            return zprev + pi_[k] * (y - k * wq) / wq;
        }
        case TransformFamily::Quadratic: {
            int k = bin_of_y(y);
            double a = (y - knots_[k]) / w_[k];
            double zprev = k > 0 ? cumz_[k - 1] : 0.0;
            return zprev + w_[k] * (a * v_[k] + 0.5 * a * a * (v_[k + 1] - v_[k]));
        }
        case TransformFamily::Mol: {
            if (spec_.absorb_tails) {
                if (y <= 0.0) return 0.0;
                if (y >= spec_.domain) return 1.0;
                return mol_cdf(y);
            }
            return (mol_cdf(y) - trunc_lo_) / (trunc_hi_ - trunc_lo_);
        }
    }
    throw ContractError("unknown transform family");
}

double Transform1D::inverse(double z) const {
    if (z < 0.0 || z > 1.0) throw ContractError("transform inverse input outside [0,1]");
    if (spec_.family == TransformFamily::Linear) {
        if (z >= 1.0) return spec_.domain;
        int k = bin_of_z(z);
        double wq = spec_.domain / spec_.bins;
        double zprev = k > 0 ? cumz_[k - 1] : 0.0;
        return k * wq + (z - zprev) / pi_[k] * wq;
    }
    if (spec_.family == TransformFamily::Quadratic) {
        if (z >= 1.0) return spec_.domain;
        if (z <= 0.0) return 0.0;
        int k = bin_of_z(z);
        double zrel = z - (k > 0 ? cumz_[k - 1] : 0.0);
        double dv = v_[k + 1] - v_[k];
        if (std::abs(dv) < kQuadLinearBinEps * std::max(v_[k], 1.0))
            return knots_[k] + zrel / v_[k];
        // Subtraction-free root of the bin quadratic.
        double disc = v_[k] * v_[k] + 2.0 * dv * zrel / w_[k];
        disc = std::max(disc, 0.0);
        return knots_[k] + 2.0 * zrel / (std::sqrt(disc) + v_[k]);
    }
    // Mol: bisection bracket, then Newton polish.
    double target = spec_.absorb_tails ? z : trunc_lo_ + z * (trunc_hi_ - trunc_lo_);
    double lo = 0.0, hi = spec_.domain;
    if (spec_.absorb_tails) {
        double smax = *std::max_element(s_.begin(), s_.end());
        double step = 8.0 * smax + 1.0;
        lo = *std::min_element(mu_.begin(), mu_.end());
        hi = *std::max_element(mu_.begin(), mu_.end());
        for (int i = 0; i < 200 && mol_cdf(lo) > target; ++i) lo -= step, step *= 1.5;
        step = 8.0 * smax + 1.0;
        for (int i = 0; i < 200 && mol_cdf(hi) < target; ++i) hi += step, step *= 1.5;
    }
    double y = 0.5 * (lo + hi);
    for (int i = 0; i < 200; ++i) {
        double f = mol_cdf(y);
        if (std::abs(f - target) < 1e-13) break;
        if (f < target)
            lo = y;
        else
            hi = y;
        y = 0.5 * (lo + hi);
        if (hi - lo < 1e-15 * (1.0 + std::abs(y))) break;
    }
    for (int i = 0; i < 8; ++i) {
        double f = mol_cdf(y) - target;
        if (std::abs(f) < 1e-14) break;
        double d = deriv_unclamped_pdf(y);
        if (d <= 0.0) break;
        double yn = y - f / d;
        if (yn <= lo || yn >= hi) break;
        y = yn;
    }
    if (std::abs(mol_cdf(y) - target) > 1e-9)
        throw NumericError("mixture-of-logistics inverse did not converge");
    if (spec_.absorb_tails) {
        // Tail mass is absorbed into the edge bins: keep the result inside the
        // domain so the enclosing symbol is well defined.
        y = std::min(std::max(y, 0.0), std::nextafter(spec_.domain, 0.0));
    }
    return y;
}

double Transform1D::deriv(double y) const {
    check_y(y);
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int k = bin_of_y(y);
            return pi_[k] * spec_.bins / spec_.domain;
        }
        case TransformFamily::Quadratic: {
            int k = bin_of_y(y);
            double a = (y - knots_[k]) / w_[k];
            return v_[k] + a * (v_[k + 1] - v_[k]);
        }
        case TransformFamily::Mol: {
            double p = deriv_unclamped_pdf(y);
            return spec_.absorb_tails ? p : p / (trunc_hi_ - trunc_lo_);
        }
    }
    throw ContractError("unknown transform family");
}

double Transform1D::interval_width(double lower, double upper) const {
    if (lower > upper) throw ContractError("interval lower > upper");
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int ka = bin_of_y(lower), kb = bin_of_y(upper);
            double scale = spec_.bins / spec_.domain;
            double wq = spec_.domain / spec_.bins;
            if (ka == kb) return pi_[ka] * (upper - lower) * scale;
            double width = pi_[ka] * ((ka + 1) * wq - lower) * scale;
            for (int k = ka + 1; k < kb; ++k) width += pi_[k];
            width += pi_[kb] * (upper - kb * wq) * scale;
            return width;
        }
        case TransformFamily::Quadratic: {
            int ka = bin_of_y(lower), kb = bin_of_y(upper);
            auto partial_from = [&](double y, int k) {  // knot_k .. y
                double a = (y - knots_[k]) / w_[k];
                return (y - knots_[k]) * (v_[k] + 0.5 * a * (v_[k + 1] - v_[k]));
            };
            auto partial_to = [&](double y, int k) {  // y .. knot_{k+1}
                double a = (y - knots_[k]) / w_[k];
                return (knots_[k + 1] - y) * (v_[k] + 0.5 * (1.0 + a) * (v_[k + 1] - v_[k]));
            };
            if (ka == kb) {
                double al = (lower - knots_[ka]) / w_[ka];
                double au = (upper - knots_[ka]) / w_[ka];
                return (upper - lower) * (v_[ka] + 0.5 * (al + au) * (v_[ka + 1] - v_[ka]));
            }
            double width = partial_to(lower, ka);
            for (int k = ka + 1; k < kb; ++k) width += masses_[k];
            width += partial_from(upper, kb);
            return width;
        }
        case TransformFamily::Mol: {
            double width = 0.0;
            for (size_t m = 0; m < pi_.size(); ++m)
                width +=
                    pi_[m] * (mol_endpoint_term(upper, static_cast<int>(m)) -
                              mol_endpoint_term(lower, static_cast<int>(m)));
            return spec_.absorb_tails ? width : width / (trunc_hi_ - trunc_lo_);
        }
    }
    throw ContractError("unknown transform family");
}

Interval Transform1D::map(const Interval& in) const {
    double lo = forward(in.lower);
    return {lo, lo + interval_width(in.lower, in.upper)};
}

}  // namespace subsetflow
