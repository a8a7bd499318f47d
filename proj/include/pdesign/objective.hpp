#pragma once

// The Phi_p family and the one-step swap quantities used by the rounding
// analysis: for Y + w w^T - v v^T the change in tr(Y^{-p}) is split into a
// gain from adding w and a loss from removing v.

#include <Eigen/Dense>

#include "pdesign/instance.hpp"
#include "pdesign/spectra.hpp"

namespace pdesign {

// Largest exponent accepted in integer mode; beyond it use Phi_infinity.
inline constexpr int kMaxIntegerExponent = 64;

// Phi_p(M) = ((1/d) tr(M^{-p}))^{1/p}; det(M)^{-1/d} for zero and
// 1/lambda_min(M) for infinity.
double phi_p(const SymMatrix& m, const PNormExponent& exponent);
double phi_p(const SpectralDecomposition& spectrum, const PNormExponent& exponent);

// Objective of the convex relaxation: (tr(X^{-p}))^{1/p} (no 1/d factor),
// det(X)^{-1/d} for the zero exponent. Infinity is not supported.
double relaxation_objective(const SymMatrix& big_x, const PNormExponent& exponent);
double relaxation_objective(const SpectralDecomposition& spectrum, const PNormExponent& exponent);

// Gradient of x -> relaxation_objective(sum_i x(i) u_i u_i^T).
Eigen::VectorXd phi_p_weight_gradient(const DesignInstance& instance, const Eigen::VectorXd& x);

struct SwapDelta {
  double gain = 0.0;
  double loss = 0.0;
  double progress = 0.0;         // gain - loss
  double upper_bound_rhs = 0.0;  // tr(Y^{-p}) - gain + loss
};

// Upper bound on tr((Y + w w^T - v v^T)^{-p}) written as the binomial
// expansion of the two rank-one updates. Integer p needs v^T Y^{-1} v < 1;
// non-integer p >= 1 uses the generalized binomial series and needs
// v^T Y^{-1} v <= 1/2.
double one_step_upper_bound(const SymMatrix& y, const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                            double p);

// Gain (closed form) and loss (binomial series) of adding u_add and removing
// u_remove from Y. A zero vector stands for "no addition" / "no removal".
SwapDelta swap_delta(const SymMatrix& y, const Eigen::VectorXd& u_add,
                     const Eigen::VectorXd& u_remove, double p);
SwapDelta swap_delta(const SpectralDecomposition& y_spectrum, const Eigen::VectorXd& u_add,
                     const Eigen::VectorXd& u_remove, double p);

// Scalar pieces, given a = u^T Y^{-1} u and b = u^T Y^{-p-1} u.
double gain_closed_form(double a, double b, double p);
double loss_series(double a, double b, double p);

}  // namespace pdesign
