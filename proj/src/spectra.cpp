#include "pdesign/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "pdesign/errors.hpp"

namespace pdesign {

SymMatrix::SymMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    throw Error(ErrorKind::InvalidMatrix, "symmetric matrix must be square with dim >= 1");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidMatrix, "dim must be >= 1");
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim), Unchecked{});
}

SymMatrix SymMatrix::zero(int dim) {
  if (dim < 1) throw Error(ErrorKind::InvalidMatrix, "dim must be >= 1");
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim), Unchecked{});
}

SymMatrix SymMatrix::diagonal(const Eigen::VectorXd& diag) {
  if (diag.size() < 1) throw Error(ErrorKind::InvalidMatrix, "dim must be >= 1");
  return SymMatrix(Eigen::MatrixXd(diag.asDiagonal()), Unchecked{});
}

void SymMatrix::add_outer(const Eigen::Ref<const Eigen::VectorXd>& v, double weight) {
  const int d = dim();
  for (int j = 0; j < d; ++j) {
    for (int i = j; i < d; ++i) {
      const double value = m_(i, j) + weight * (v(i) * v(j));
      m_(i, j) = value;
      m_(j, i) = value;
    }
  }
}

double SymMatrix::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& v) const {
  return v.dot(m_ * v);
}

double SymMatrix::inner(const SymMatrix& other) const {
  return m_.cwiseProduct(other.m_).sum();
}

bool SpectralDecomposition::positive_definite() const {
  const double top = lambda_max();
  return top > 0.0 && lambda_min() > kPdTolerance * top;
}

SymMatrix SpectralDecomposition::apply(const std::function<double(double)>& f) const {
  Eigen::VectorXd mapped(eigenvalues.size());
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) mapped(i) = f(eigenvalues(i));
  return SymMatrix(eigenvectors * mapped.asDiagonal() * eigenvectors.transpose());
}

SymMatrix SpectralDecomposition::reconstruct() const {
  return apply([](double lambda) { return lambda; });
}

SpectralDecomposition eig_sym(const SymMatrix& m) {
  if (!m.matrix().allFinite()) {
    throw Error(ErrorKind::InvalidMatrix, "matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.matrix());
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::InvalidMatrix, "eigensolver did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

void require_positive_definite(const SpectralDecomposition& decomposition) {
  if (!decomposition.positive_definite()) {
    throw Error(ErrorKind::SingularMatrix,
                "matrix is not positive definite (lambda_min = " +
                    std::to_string(decomposition.lambda_min()) + ")");
  }
}

double trace_neg_power(const SpectralDecomposition& decomposition, double p) {
  require_positive_definite(decomposition);
  double total = 0.0;
  for (Eigen::Index i = 0; i < decomposition.eigenvalues.size(); ++i) {
    total += std::pow(decomposition.eigenvalues(i), -p);
  }
  return total;
}

double trace_neg_power(const SymMatrix& m, double p) { return trace_neg_power(eig_sym(m), p); }

SymMatrix pd_power(const SpectralDecomposition& decomposition, double power) {
  require_positive_definite(decomposition);
  return decomposition.apply([power](double lambda) { return std::pow(lambda, power); });
}

SymMatrix pd_power(const SymMatrix& m, double power) { return pd_power(eig_sym(m), power); }

ActionMatrix solve_action_scalar(const SpectralDecomposition& z_spectrum, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorKind::InvalidArgument, "alpha must be a positive finite number");
  }
  const Eigen::Index d = z_spectrum.eigenvalues.size();
  const double lambda_min = z_spectrum.lambda_min();

  // Work with s = alpha * lambda_min - c > 0. With offsets
  // delta_j = alpha (lambda_j - lambda_min) >= 0 the trace condition reads
  // g(s) = sum_j (s + delta_j)^{-2} - 1 = 0, strictly decreasing and convex
  // in s, with g(1) >= 0 and g(sqrt d) <= 0.
  Eigen::VectorXd offsets(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    offsets(j) = alpha * (z_spectrum.eigenvalues(j) - lambda_min);
  }
  auto residual = [&](double s, double* slope) {
    double value = -1.0;
    double derivative = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double inv = 1.0 / (s + offsets(j));
      value += inv * inv;
      derivative -= 2.0 * inv * inv * inv;
    }
    if (slope != nullptr) *slope = derivative;
    return value;
  };

  double lo = 1.0;
  double hi = std::sqrt(static_cast<double>(d));
  double s = lo;
  for (int iter = 0; iter < 200; ++iter) {
    double slope = 0.0;
    const double g = residual(s, &slope);
    if (g == 0.0) break;
    if (g > 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    double next = s - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-16 * std::max(1.0, s)) {
      s = next;
      break;
    }
    s = next;
  }
  if (std::abs(residual(s, nullptr)) > 1e-10) {
    throw Error(ErrorKind::InvalidMatrix, "action scalar root finder failed to converge");
  }

  ActionMatrix result{alpha * lambda_min - s, SymMatrix::zero(static_cast<int>(d)),
                      SymMatrix::zero(static_cast<int>(d)), s};
  Eigen::VectorXd inv_gap(d);
  for (Eigen::Index j = 0; j < d; ++j) inv_gap(j) = 1.0 / (s + offsets(j));
  const Eigen::MatrixXd& v = z_spectrum.eigenvectors;
  result.a_sqrt = SymMatrix(v * inv_gap.asDiagonal() * v.transpose());
  result.a_matrix =
      SymMatrix(v * inv_gap.cwiseProduct(inv_gap).asDiagonal() * v.transpose());
  return result;
}

ActionMatrix solve_action_scalar(const SymMatrix& z, double alpha) {
  return solve_action_scalar(eig_sym(z), alpha);
}

}  // namespace pdesign
