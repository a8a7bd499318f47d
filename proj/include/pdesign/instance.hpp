#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pdesign/spectra.hpp"

namespace pdesign {

// The exponent p of Phi_p, including the p -> 0 (D-design) and
// p -> infinity (E-design) limits.
class PNormExponent {
 public:
  enum class Kind { Zero, Finite, Infinity };

  // Finite p >= 1. Pure evaluation may also use p in (0, 1) by setting
  // allow_below_one; rounding never does.
  static PNormExponent finite(double p, bool allow_below_one = false);
  static PNormExponent zero() { return PNormExponent(Kind::Zero, 0.0); }
  static PNormExponent infinity() { return PNormExponent(Kind::Infinity, 0.0); }

  Kind kind() const noexcept { return kind_; }
  bool is_finite() const noexcept { return kind_ == Kind::Finite; }
  // Only meaningful for finite exponents.
  double value() const noexcept { return p_; }
  bool integer_mode() const noexcept;

  std::string to_string() const;

  bool operator==(const PNormExponent&) const = default;

 private:
  PNormExponent(Kind kind, double p) : kind_(kind), p_(p) {}

  Kind kind_;
  double p_;
};

// Input of the design problem: rows of `vectors` are u_1..u_n in R^d.
struct DesignInstance {
  Eigen::MatrixXd vectors;
  int k = 0;
  PNormExponent exponent = PNormExponent::finite(1.0);
  double epsilon = 0.5;

  int n() const { return static_cast<int>(vectors.rows()); }
  int d() const { return static_cast<int>(vectors.cols()); }
  auto row(int i) const { return vectors.row(i).transpose(); }

  // Checks n >= k >= d >= 1, epsilon in (0, 1) and finite entries.
  // Spanning is checked by the relaxation (RankDeficient).
  void validate() const;
};

// X(x) = sum_i weights(i) u_i u_i^T.
SymMatrix weighted_gram(const Eigen::MatrixXd& vectors, const Eigen::VectorXd& weights);

// sum_{i in subset} u_i u_i^T.
SymMatrix subset_gram(const Eigen::MatrixXd& vectors, const std::vector<int>& subset);

}  // namespace pdesign
