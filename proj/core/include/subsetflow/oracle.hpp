#pragma once

#include <functional>
#include <span>
#include <vector>

#include "subsetflow/flow.hpp"
#include "subsetflow/mv_dmol.hpp"

namespace subsetflow {

// Brute-force reference implementations used to validate the fast paths. They
// deliberately go through public APIs only and reimplement the math they check.

struct EnumerationBudget {
    double max_outcomes = 1048576.0;  // 2^20
};

bool enumeration_feasible(int D, int K, const EnumerationBudget& budget = {});

// Sum over all K^D outcomes of exp(exact_log_likelihood(x)), lexicographic
// order. Refuses infeasible spaces.
double enumerate_normalization(const SubsetFlowModel& model,
                               const EnumerationBudget& budget = {});

// Direct evaluation of the joint 3-channel discretized-logistic-mixture
// probability (shared mixture index, no autoregressive rewrite).
double joint_mv_dmol(const MvDmolParams& p, std::span<const int> x);

// Central finite differences of a scalar function.
std::vector<double> finite_diff_gradient(const std::function<double(std::span<const double>)>& fn,
                                         std::span<const double> point, double h = 1e-5);

// Midpoint-rule integral of exp(log_density) over B(x) with `grid` points per
// dimension. Refuses grids above 32^D points.
double quadrature_bin_mass(const SubsetFlowModel& model, std::span<const int> x, int grid);

}  // namespace subsetflow
