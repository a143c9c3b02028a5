#include "subsetflow/flow.hpp"

#include <algorithm>
#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"

namespace subsetflow {

void validate_model_config(const ModelConfig& cfg) {
    if (cfg.D < 1) throw ConfigError("model: D must be >= 1");
    if (cfg.K < 2) throw ConfigError("model: K must be >= 2");
    if (cfg.layers.empty()) throw ConfigError("model: at least one layer is required");
    for (const auto& l : cfg.layers) {
        if (l.bins < 1) throw ConfigError("model: layer bins must be >= 1");
        for (int h : l.hidden)
            if (h < 1) throw ConfigError("model: hidden widths must be >= 1");
    }
}

SubsetFlowModel::SubsetFlowModel(ModelConfig cfg, uint64_t init_seed, bool random_output_layer)
    : cfg_(std::move(cfg)) {
    validate_model_config(cfg_);
    Rng root(init_seed);
    nets_.reserve(cfg_.layers.size());
    for (int l = 0; l < layer_count(); ++l) {
        Rng lr = root.split(static_cast<uint64_t>(l));
        nets_.emplace_back(store_, "layer" + std::to_string(l), cfg_.D,
                           transform_param_count(layer_spec(l)), cfg_.layers[l].hidden,
                           layer_positions(l), lr, !random_output_layer);
    }
}

TransformSpec SubsetFlowModel::layer_spec(int l) const {
    const LayerConfig& lc = cfg_.layers[l];
    TransformSpec spec;
    spec.family = lc.family;
    spec.bins = lc.bins;
    spec.domain = (l == 0) ? static_cast<double>(cfg_.K) : 1.0;
    spec.absorb_tails = (lc.family == TransformFamily::Mol && l == 0);
    return spec;
}

std::vector<int> SubsetFlowModel::layer_positions(int l) const {
    std::vector<int> pos(cfg_.D);
    for (int d = 0; d < cfg_.D; ++d)
        pos[d] = cfg_.layers[l].reversed_order ? cfg_.D - 1 - d : d;
    return pos;
}

bool SubsetFlowModel::exact_capable() const {
    if (!cfg_.bin_conditioning) return false;
    for (const auto& l : cfg_.layers)
        if (l.reversed_order != cfg_.layers[0].reversed_order) return false;
    return true;
}

void SubsetFlowModel::check_x(std::span<const int> x) const {
    if (static_cast<int>(x.size()) != cfg_.D)
        throw ContractError("sample dimensionality does not match model D");
    for (int v : x)
        if (v < 0 || v >= cfg_.K) throw ContractError("sample value outside [0, K)");
}

Var SubsetFlowModel::exact_log_likelihood_t(Tape& tape, const std::vector<Var>& bound,
                                            std::span<const int> x) const {
    if (!exact_capable())
        throw ConfigError(
            "exact likelihood requires bin conditioning and a shared autoregressive order");
    check_x(x);
    Tape& t = tape;
    int D = cfg_.D, L = layer_count();
    std::vector<Var> lower(D), upper(D);
    for (int d = 0; d < D; ++d) {
        lower[d] = t.constant(static_cast<double>(x[d]));
        upper[d] = t.constant(static_cast<double>(x[d] + 1));
    }
    Var log_p = t.constant(0.0);
    for (int l = 0; l < L; ++l) {
        TransformSpec spec = layer_spec(l);
        Var input = normalize_vec(t, t.pack(lower), spec.domain);
        Var out = nets_[l].forward(t, bound, input);
        int P = transform_param_count(spec);
        std::vector<Var> nl(D), nu(D);
        for (int d = 0; d < D; ++d) {
            TapeTransform tr(t, spec, t.slice(out, d * P, P));
            Var width = tr.interval_width(lower[d], upper[d]);
            if (l + 1 == L) {
                log_p = t.add(log_p, t.log_(t.clamp_min(width, 1e-300)));
            } else {
                nl[d] = tr.forward(lower[d]);
                nu[d] = t.add(nl[d], width);
            }
        }
        if (l + 1 < L) {
            lower = std::move(nl);
            upper = std::move(nu);
        }
    }
    return log_p;
}

double SubsetFlowModel::exact_log_likelihood(std::span<const int> x) const {
    Tape t(false);
    std::vector<Var> bound = bind(t);
    return t.scalar(exact_log_likelihood_t(t, bound, x));
}

Var SubsetFlowModel::log_density_t(Tape& tape, const std::vector<Var>& bound,
                                   std::span<const double> y) const {
    std::vector<Var> point(y.size());
    for (size_t d = 0; d < y.size(); ++d) point[d] = tape.constant(y[d]);
    return log_density_t(tape, bound, point);
}

Var SubsetFlowModel::log_density_t(Tape& tape, const std::vector<Var>& bound,
                                   const std::vector<Var>& y) const {
    if (static_cast<int>(y.size()) != cfg_.D)
        throw ContractError("point dimensionality does not match model D");
    Tape& t = tape;
    int D = cfg_.D, L = layer_count();
    std::vector<Var> point = y;
    std::vector<Var> lower(D);
    for (int d = 0; d < D; ++d) {
        double v = t.scalar(y[d]);
        if (!(v >= 0.0 && v <= cfg_.K)) throw ContractError("point outside [0, K]^D");
        if (cfg_.bin_conditioning)
            lower[d] = t.constant(std::min(std::floor(v), static_cast<double>(cfg_.K - 1)));
    }
    Var log_p = t.constant(0.0);
    for (int l = 0; l < L; ++l) {
        TransformSpec spec = layer_spec(l);
        const std::vector<Var>& cond = cfg_.bin_conditioning ? lower : point;
        Var input = normalize_vec(t, t.pack(cond), spec.domain);
        Var out = nets_[l].forward(t, bound, input);
        int P = transform_param_count(spec);
        std::vector<Var> np(D), nl(D);
        for (int d = 0; d < D; ++d) {
            TapeTransform tr(t, spec, t.slice(out, d * P, P));
            log_p = t.add(log_p, tr.log_deriv(point[d]));
            np[d] = tr.forward(point[d]);
            if (cfg_.bin_conditioning) nl[d] = tr.forward(lower[d]);
        }
        point = std::move(np);
        if (cfg_.bin_conditioning) lower = std::move(nl);
    }
    return log_p;
}

// Plain-double twin of log_density_t; this is the hot path of the bound
// estimators, where building a tape per point would dominate.
double SubsetFlowModel::log_density(std::span<const double> y) const {
    if (static_cast<int>(y.size()) != cfg_.D)
        throw ContractError("point dimensionality does not match model D");
    int D = cfg_.D, L = layer_count();
    std::vector<double> point(y.begin(), y.end());
    std::vector<double> lower(D, 0.0);
    for (int d = 0; d < D; ++d) {
        double v = point[d];
        if (!(v >= 0.0 && v <= cfg_.K)) throw ContractError("point outside [0, K]^D");
        if (cfg_.bin_conditioning)
            lower[d] = std::min(std::floor(v), static_cast<double>(cfg_.K - 1));
    }
    double log_p = 0.0;
    std::vector<double> input(D);
    for (int l = 0; l < L; ++l) {
        TransformSpec spec = layer_spec(l);
        const std::vector<double>& cond = cfg_.bin_conditioning ? lower : point;
        for (int d = 0; d < D; ++d) input[d] = normalize_value(cond[d], spec.domain);
        std::vector<double> out = nets_[l].forward_plain(store_, input);
        int P = transform_param_count(spec);
        for (int d = 0; d < D; ++d) {
            Transform1D tr(spec, std::span<const double>(out).subspan(d * P, P));
            log_p += std::log(tr.deriv(point[d]));
            double np = tr.forward(point[d]);
            if (cfg_.bin_conditioning) lower[d] = tr.forward(lower[d]);
            point[d] = np;
        }
    }
    return log_p;
}

std::vector<Interval> SubsetFlowModel::latent_box(std::span<const int> x) const {
    if (!exact_capable())
        throw ConfigError(
            "latent boxes require bin conditioning and a shared autoregressive order");
    check_x(x);
    int D = cfg_.D, L = layer_count();
    std::vector<Interval> box(D);
    for (int d = 0; d < D; ++d)
        box[d] = {static_cast<double>(x[d]), static_cast<double>(x[d] + 1)};
    for (int l = 0; l < L; ++l) {
        TransformSpec spec = layer_spec(l);
        std::vector<double> input(D);
        for (int d = 0; d < D; ++d) input[d] = normalize_value(box[d].lower, spec.domain);
        std::vector<double> out = nets_[l].forward_plain(store_, input);
        int P = transform_param_count(spec);
        for (int d = 0; d < D; ++d) {
            Transform1D tr(spec, std::span<const double>(out).subspan(d * P, P));
            box[d] = tr.map(box[d]);
        }
    }
    return box;
}

std::vector<int> SubsetFlowModel::invert_latent(std::span<const double> z,
                                                std::vector<double>* y_out) const {
    if (static_cast<int>(z.size()) != cfg_.D)
        throw ContractError("latent dimensionality does not match model D");
    for (double v : z)
        if (!(v > 0.0 && v < 1.0)) throw ContractError("latent outside (0,1)^D");
    if (cfg_.bin_conditioning) {
        if (!exact_capable())
            throw ConfigError(
                "inversion of a bin-conditioned model requires a shared autoregressive order");
        return invert_shared_order(z, y_out);
    }
    return invert_layerwise(z, y_out);
}

// Per-dimension inversion in the shared autoregressive order; corners of
// already-finished dimensions condition the remaining ones.
std::vector<int> SubsetFlowModel::invert_shared_order(std::span<const double> z,
                                                      std::vector<double>* y_out) const {
    int D = cfg_.D, L = layer_count();
    std::vector<int> pos = layer_positions(0);
    std::vector<int> order(D);
    for (int d = 0; d < D; ++d) order[pos[d]] = d;

    // corners[l][d]: image of the bin lower corner after l layers.
    std::vector<std::vector<double>> corners(L + 1, std::vector<double>(D, 0.0));
    std::vector<bool> known(D, false);
    std::vector<int> x(D, 0);
    std::vector<double> y(D, 0.0);

    for (int p = 0; p < D; ++p) {
        int d = order[p];
        std::vector<Transform1D> chain;
        chain.reserve(L);
        double val = z[d];
        for (int l = L - 1; l >= 0; --l) {
            TransformSpec spec = layer_spec(l);
            std::vector<double> input(D);
            for (int j = 0; j < D; ++j)
                input[j] = normalize_value(known[j] ? corners[l][j] : 0.0, spec.domain);
            std::vector<double> out = nets_[l].forward_plain(store_, input);
            int P = transform_param_count(spec);
            chain.emplace_back(spec, std::span<const double>(out).subspan(d * P, P));
            val = chain.back().inverse(val);
        }
        y[d] = val;
        x[d] = std::min(std::max(static_cast<int>(std::floor(val)), 0), cfg_.K - 1);
        double c = static_cast<double>(x[d]);
        corners[0][d] = c;
        for (int l = 0; l < L; ++l) {
            c = chain[L - 1 - l].forward(c);
            corners[l + 1][d] = c;
        }
        known[d] = true;
    }
    if (y_out) *y_out = std::move(y);
    return x;
}

// Without bin conditioning the conditioner sees exact values, so each layer can
// be inverted completely (in its own order) before moving to the one below.
std::vector<int> SubsetFlowModel::invert_layerwise(std::span<const double> z,
                                                   std::vector<double>* y_out) const {
    int D = cfg_.D, L = layer_count();
    std::vector<double> cur(z.begin(), z.end());
    for (int l = L - 1; l >= 0; --l) {
        TransformSpec spec = layer_spec(l);
        std::vector<int> pos = layer_positions(l);
        std::vector<int> order(D);
        for (int d = 0; d < D; ++d) order[pos[d]] = d;
        std::vector<double> below(D, 0.0);
        std::vector<bool> known(D, false);
        int P = transform_param_count(spec);
        for (int p = 0; p < D; ++p) {
            int d = order[p];
            std::vector<double> input(D);
            for (int j = 0; j < D; ++j)
                input[j] = normalize_value(known[j] ? below[j] : 0.0, spec.domain);
            std::vector<double> out = nets_[l].forward_plain(store_, input);
            Transform1D tr(spec, std::span<const double>(out).subspan(d * P, P));
            below[d] = tr.inverse(cur[d]);
            known[d] = true;
        }
        cur = std::move(below);
    }
    std::vector<int> x(D);
    for (int d = 0; d < D; ++d)
        x[d] = std::min(std::max(static_cast<int>(std::floor(cur[d])), 0), cfg_.K - 1);
    if (y_out) *y_out = std::move(cur);
    return x;
}

std::vector<int> SubsetFlowModel::sample(Rng& rng, std::vector<double>* y_out) const {
    std::vector<double> z(cfg_.D);
    for (int d = 0; d < cfg_.D; ++d) z[d] = rng.uniform_open();
    return invert_latent(z, y_out);
}

std::vector<std::vector<int>> SubsetFlowModel::interpolate(std::span<const int> xa,
                                                           std::span<const int> xb, int steps,
                                                           Rng& rng) const {
    if (steps < 2) throw ContractError("interpolation needs at least 2 steps");
    std::vector<Interval> ba = latent_box(xa);
    std::vector<Interval> bb = latent_box(xb);
    int D = cfg_.D;
    Rng ra = rng.split(0), rb = rng.split(1);
    std::vector<double> ha(D), hb(D);
    for (int d = 0; d < D; ++d) {
        double za = ba[d].lower + ra.uniform_open() * (ba[d].upper - ba[d].lower);
        double zb = bb[d].lower + rb.uniform_open() * (bb[d].upper - bb[d].lower);
        ha[d] = inverse_normal_cdf(za);
        hb[d] = inverse_normal_cdf(zb);
    }
    std::vector<std::vector<int>> path;
    path.reserve(steps);
    for (int i = 0; i < steps; ++i) {
        double w = 1.0 - static_cast<double>(i) / (steps - 1);
        double norm = std::sqrt(w * w + (1.0 - w) * (1.0 - w));
        std::vector<double> z(D);
        for (int d = 0; d < D; ++d) {
            double h = (w * ha[d] + (1.0 - w) * hb[d]) / norm;
            z[d] = std::min(std::max(normal_cdf(h), 1e-15), 1.0 - 1e-15);
        }
        path.push_back(invert_latent(z));
    }
    return path;
}

}  // namespace subsetflow
