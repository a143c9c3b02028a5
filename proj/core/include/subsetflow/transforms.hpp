#pragma once

#include <span>
#include <vector>

#include "subsetflow/tape.hpp"
#include "subsetflow/tensor.hpp"

namespace subsetflow {

enum class TransformFamily { Linear, Quadratic, Mol };

// One monotone 1D transform [0, domain] -> [0, 1].
//
// `bins` is the bin count for splines and the mixture count for Mol.
// `absorb_tails` selects the discretized-mixture edge convention where the
// first and last bin absorb the full tails of the mixture CDF (the transform
// treats endpoint 0 as -inf and endpoint `domain` as +inf). With it off, a Mol
// transform is the mixture CDF rescaled so that f(0)=0 and f(domain)=1, which
// is the form usable in inner flow layers.
struct TransformSpec {
    TransformFamily family = TransformFamily::Linear;
    int bins = 0;
    double domain = 1.0;
    bool absorb_tails = false;
};

int transform_param_count(const TransformSpec& spec);

constexpr double kMolScaleFloor = 1e-3;
constexpr double kQuadLinearBinEps = 1e-8;

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
};

// Plain-double evaluation of one transform, with parameters derived from a raw
// network output block. Pure value type; safe to use concurrently.
class Transform1D {
public:
    Transform1D(const TransformSpec& spec, std::span<const double> raw);

    // Mixture of logistics from explicit fields (weights via softmax of
    // logits; scales floored at kMolScaleFloor).
    static Transform1D mol(double domain, bool absorb_tails, std::span<const double> pi_logits,
                           std::span<const double> mu, std::span<const double> scales);

    double forward(double y) const;
    double inverse(double z) const;
    double deriv(double y) const;  // dz/dy

    // Width f(upper) - f(lower), computed without subtracting nearby CDF
    // values where the family allows it.
    double interval_width(double lower, double upper) const;
    Interval map(const Interval& in) const;

    const TransformSpec& spec() const { return spec_; }
    // Linear family: bin probabilities.
    const std::vector<double>& probs() const { return pi_; }
    // Quadratic family: derived widths / vertex densities / knots / masses.
    const std::vector<double>& widths() const { return w_; }
    const std::vector<double>& vertices() const { return v_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& bin_masses() const { return masses_; }
    // Mol family.
    const std::vector<double>& mixture_weights() const { return pi_; }
    const std::vector<double>& locations() const { return mu_; }
    const std::vector<double>& scales() const { return s_; }

private:
    Transform1D() = default;
    void derive_linear(std::span<const double> logits);
    void derive_quadratic(std::span<const double> raw);
    void derive_mol_from_raw(std::span<const double> raw);
    void finish_mol();

    int bin_of_y(double y) const;
    int bin_of_z(double z) const;
    double mol_cdf(double y) const;      // unclamped mixture CDF
    double deriv_unclamped_pdf(double y) const;
    double mol_endpoint_term(double y, int m) const;
    void check_y(double y) const;

    TransformSpec spec_;
    // linear + mol
    std::vector<double> pi_;
    std::vector<double> cumz_;  // linear: cumulative probabilities
    // quadratic
    std::vector<double> w_, v_, knots_, masses_;
    // mol
    std::vector<double> mu_, s_;
    double trunc_lo_ = 0.0, trunc_hi_ = 1.0;  // F(0), F(domain) when rescaling
};

// The same transform recorded on a gradient tape. Parameters are derived once
// at construction; forward/width/log-deriv evaluations share them.
class TapeTransform {
public:
    TapeTransform(Tape& tape, const TransformSpec& spec, Var raw_block);

    Var forward(Var y) const;
    Var log_deriv(Var y) const;
    // f(upper) - f(lower), accumulated bin-by-bin rather than as a difference
    // of CDF values; endpoints are scalar vars.
    Var interval_width(Var lower, Var upper) const;

    Var probs() const { return pi_; }

private:
    int bin_of_y(double y) const;
    Var forward_cdf_raw(Var y) const;                 // mol: unrescaled mixture CDF
    Var quad_partial_from_lower(Var y, int k) const;  // mass in bin k from knot k to y
    Var quad_partial_to_upper(Var y, int k) const;    // mass in bin k from y to knot k+1
    Var mol_endpoint_terms(Var y) const;              // per-component sigmoid terms

    Tape* tape_;
    TransformSpec spec_;
    Var pi_;     // linear probs / mol weights
    Var cumz_;   // linear cumulative
    Var w_, v_, knots_, masses_, cum_masses_;  // quadratic
    Var mu_, s_;                               // mol
    Var trunc_lo_;                             // mol rescale: F(0)
    Var trunc_width_;                          // mol rescale: F(domain) - F(0)
};

}  // namespace subsetflow
