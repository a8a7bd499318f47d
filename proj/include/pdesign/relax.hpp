#pragma once

// Convex relaxation of the design problem:
//
//   minimize   (tr(X^{-p}))^{1/p},  X = sum_i x(i) u_i u_i^T
//   subject to 0 <= x <= 1, sum_i x(i) <= k
//
// plus the post-processing the rounding step needs: support sparsification,
// whitening, and the first-order optimality certificate.

#include <Eigen/Dense>

#include <vector>

#include "pdesign/instance.hpp"
#include "pdesign/spectra.hpp"

namespace pdesign {

// Entries with fraction_tolerance < x(i) < 1 - fraction_tolerance count as fractional.
inline constexpr double kFractionTolerance = 1e-9;

struct FractionalSolution {
  Eigen::VectorXd x;
  SymMatrix big_x = SymMatrix::identity(1);
  double objective = 0.0;
  std::vector<int> fractional_support;

  // Solver diagnostics; converged == false means the stationarity target was
  // not met within the iteration limit and x is the best iterate found.
  bool converged = true;
  double stationarity = 0.0;
  int iterations = 0;
};

struct NormalizedInstance {
  Eigen::MatrixXd v_vectors;  // row i = (X^{-1/2} u_i)^T
  SymMatrix whitener = SymMatrix::identity(1);
};

struct OptimalityCertificate {
  double threshold = 0.0;      // tr(X^{-p}) / k
  double tolerance = 0.0;      // allowed violation, 1e-4 * threshold
  double max_violation = 0.0;  // max over fractional i of <X^{-p-1}, u_i u_i^T> - threshold, floored at 0
  int worst_index = -1;
  int checked = 0;
  bool passed = true;
};

struct RelaxationOptions {
  int max_iters = 50000;
  double tol = 1e-8;
};

// Euclidean projection onto {0 <= x <= 1, sum x <= budget}.
Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& z, double budget);

std::vector<int> fractional_indices(const Eigen::VectorXd& x, double tolerance = kFractionTolerance);

// Recomputes big_x, objective and fractional support from x.
FractionalSolution make_solution(const DesignInstance& instance, Eigen::VectorXd x);

// Throws RankDeficient when the vectors do not span R^d.
void require_spanning(const DesignInstance& instance);

FractionalSolution solve_relaxation(const DesignInstance& instance,
                                    const RelaxationOptions& options = {});

// Moves weight along null directions of x -> (sum x(i) u_i u_i^T, sum x(i))
// until at most d(d+1)/2 + 1 entries are fractional.
FractionalSolution sparsify_support(const DesignInstance& instance, const FractionalSolution& sol);

NormalizedInstance normalize(const DesignInstance& instance, const FractionalSolution& sol);

OptimalityCertificate certify_optimality(const DesignInstance& instance,
                                         const FractionalSolution& sol);

// ||x - Proj(x - grad)||_inf.
double projected_stationarity(const DesignInstance& instance, const Eigen::VectorXd& x);

}  // namespace pdesign
