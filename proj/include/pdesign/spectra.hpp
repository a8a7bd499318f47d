#pragma once

// Small dense symmetric linear algebra: eigendecomposition, spectral
// functions of positive definite matrices, and the scalar root that defines
// the action matrix of the exchange step.

#include <Eigen/Dense>

#include <functional>

namespace pdesign {

// Relative positive-definiteness threshold: lambda_min > kPdTolerance * lambda_max.
inline constexpr double kPdTolerance = 1e-12;

// Symmetric matrix value. Symmetry is enforced at construction by averaging
// the input with its transpose, so entries(i, j) == entries(j, i) bit for bit.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& m);

  static SymMatrix identity(int dim);
  static SymMatrix zero(int dim);
  static SymMatrix diagonal(const Eigen::VectorXd& diag);

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const noexcept { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  // this += weight * v v^T. The outer product is symmetric by construction,
  // so symmetry survives the update.
  void add_outer(const Eigen::Ref<const Eigen::VectorXd>& v, double weight = 1.0);

  double trace() const { return m_.trace(); }
  // <this, v v^T> = v^T M v.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& v) const;
  // Frobenius inner product <this, other>.
  double inner(const SymMatrix& other) const;

 private:
  struct Unchecked {};
  SymMatrix(Eigen::MatrixXd m, Unchecked) : m_(std::move(m)) {}

  Eigen::MatrixXd m_;
};

struct SpectralDecomposition {
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double lambda_min() const { return eigenvalues(0); }
  double lambda_max() const { return eigenvalues(eigenvalues.size() - 1); }
  bool positive_definite() const;

  // V f(Lambda) V^T.
  SymMatrix apply(const std::function<double(double)>& f) const;
  SymMatrix reconstruct() const;
};

SpectralDecomposition eig_sym(const SymMatrix& m);

// Throws SingularMatrix unless lambda_min > kPdTolerance * lambda_max.
void require_positive_definite(const SpectralDecomposition& decomposition);

// tr(M^{-p}) = sum_i lambda_i^{-p}; no 1/d normalization.
double trace_neg_power(const SymMatrix& m, double p);
double trace_neg_power(const SpectralDecomposition& decomposition, double p);

// M^power for positive definite M (any real power).
SymMatrix pd_power(const SymMatrix& m, double power);
SymMatrix pd_power(const SpectralDecomposition& decomposition, double power);

// A_t = (alpha Z - c I)^{-2} with c the unique scalar making A_t positive
// definite with unit trace. A_t^{1/2} = (alpha Z - c I)^{-1} is returned as
// well because the exchange step scores vectors against it.
struct ActionMatrix {
  double c = 0.0;
  SymMatrix a_matrix;
  SymMatrix a_sqrt;
  // alpha * lambda_min(Z) - c, lies in [1, sqrt(d)].
  double gap = 0.0;
};

ActionMatrix solve_action_scalar(const SymMatrix& z, double alpha);
ActionMatrix solve_action_scalar(const SpectralDecomposition& z_spectrum, double alpha);

}  // namespace pdesign
