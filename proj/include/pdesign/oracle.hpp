#pragma once

// Independent ground truth for the test suites: exhaustive subset search,
// finite-difference gradients and summaries of exchange traces.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "pdesign/exchange.hpp"
#include "pdesign/instance.hpp"

namespace pdesign {

// Enumeration guard on C(n, size).
inline constexpr double kMaxEnumeration = 1e7;

struct BruteForceResult {
  std::vector<int> best_set;
  double best_objective = 0.0;  // +inf when no subset has a PD sum
  std::int64_t enumerated = 0;
};

// Exact minimizer of the relaxation-scale objective over subsets of exactly
// `size` vectors (instance.k when omitted). Subsets with singular sums are
// skipped; ties go to the lexicographically smallest subset.
BruteForceResult brute_force_best(const DesignInstance& instance);
BruteForceResult brute_force_best(const DesignInstance& instance, int size);

// Objective of the relaxation scale for a subset: (tr(Y^{-p}))^{1/p},
// det(Y)^{-1/d} for the zero exponent, +inf for singular Y.
double subset_objective(const DesignInstance& instance, const std::vector<int>& subset);

struct ProgressSummary {
  std::int64_t steps = 0;
  double cumulative_progress = 0.0;
  double mean_progress = 0.0;
  double variance_progress = 0.0;
  double max_abs_progress = 0.0;
  // max |Gamma_t| / (tr(X^{-p}) p / k).
  double max_increment_ratio = 0.0;
};

// Statistics over records with a positive definite Y_t (others carry no
// gain/loss). relaxation_trace is tr(X^{-p}).
ProgressSummary progress_statistics(const std::vector<SwapRecord>& trace, double relaxation_trace,
                                    double p, int k);

// Central differences of x -> relaxation objective with step h.
Eigen::VectorXd finite_difference_gradient(const DesignInstance& instance,
                                           const Eigen::VectorXd& x, double h);

// Richardson extrapolation (4 D(h/2) - D(h)) / 3 of the central differences.
Eigen::VectorXd richardson_gradient(const DesignInstance& instance, const Eigen::VectorXd& x,
                                    double h);

}  // namespace pdesign
