#include "pdesign/objective.hpp"

#include <cmath>
#include <limits>

#include "pdesign/errors.hpp"

namespace pdesign {
namespace {

constexpr int kRealSeriesCap = 1 << 20;

enum class Mode { Integer, Real };

Mode exponent_mode(double p) {
  if (!std::isfinite(p) || p < 1.0) {
    throw Error(ErrorKind::InvalidArgument, "swap bounds need a finite exponent p >= 1");
  }
  if (p == std::floor(p)) {
    if (p > kMaxIntegerExponent) {
      throw Error(ErrorKind::InvalidArgument, "integer exponent above 64; use Phi_infinity");
    }
    return Mode::Integer;
  }
  return Mode::Real;
}

void check_removal(double leverage, Mode mode) {
  if (mode == Mode::Integer && !(leverage < 1.0)) {
    throw Error(ErrorKind::RemovalThresholdViolated,
                "need v^T Y^{-1} v < 1, got " + std::to_string(leverage));
  }
  if (mode == Mode::Real && !(leverage <= 0.5)) {
    throw Error(ErrorKind::RemovalThresholdViolated,
                "non-integer p needs v^T Y^{-1} v <= 1/2, got " + std::to_string(leverage));
  }
}

// sum_{i>=1} C(p, i) sign^i ratio^{i-1} first / denom with C(p, i) built by
// the multiplicative recurrence. For integer p the recurrence reaches zero at
// i = p + 1; otherwise the series is truncated once terms are negligible.
double binomial_series(double p, double lead, double ratio, double sign) {
  double term = p * lead;
  double sum = term;
  for (int i = 1; i < kRealSeriesCap; ++i) {
    term *= sign * ratio * (p - i) / (i + 1);
    if (term == 0.0) break;
    sum += term;
    if (std::abs(term) < 1e-14 * std::abs(sum)) break;
  }
  return sum;
}

struct QuadForms {
  double inv = 0.0;       // u^T Y^{-1} u
  double inv_pow = 0.0;   // u^T Y^{-p-1} u
};

QuadForms quad_forms(const SpectralDecomposition& y, const Eigen::VectorXd& u, double p) {
  const Eigen::VectorXd coords = y.eigenvectors.transpose() * u;
  QuadForms forms;
  for (Eigen::Index j = 0; j < coords.size(); ++j) {
    const double lambda = y.eigenvalues(j);
    const double c2 = coords(j) * coords(j);
    forms.inv += c2 / lambda;
    forms.inv_pow += c2 * std::pow(lambda, -p - 1.0);
  }
  return forms;
}

}  // namespace

double phi_p(const SpectralDecomposition& spectrum, const PNormExponent& exponent) {
  require_positive_definite(spectrum);
  const double d = spectrum.dim();
  const double lambda_min = spectrum.lambda_min();
  switch (exponent.kind()) {
    case PNormExponent::Kind::Zero: {
      double log_sum = 0.0;
      for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
        log_sum += std::log(spectrum.eigenvalues(i));
      }
      return std::exp(-log_sum / d);
    }
    case PNormExponent::Kind::Infinity:
      return 1.0 / lambda_min;
    case PNormExponent::Kind::Finite:
      break;
  }
  // Factor out lambda_min so large p cannot overflow.
  const double p = exponent.value();
  double scaled = 0.0;
  for (Eigen::Index i = 0; i < spectrum.eigenvalues.size(); ++i) {
    scaled += std::pow(lambda_min / spectrum.eigenvalues(i), p);
  }
  return std::pow(scaled / d, 1.0 / p) / lambda_min;
}

double phi_p(const SymMatrix& m, const PNormExponent& exponent) {
  return phi_p(eig_sym(m), exponent);
}

double relaxation_objective(const SpectralDecomposition& spectrum, const PNormExponent& exponent) {
  switch (exponent.kind()) {
    case PNormExponent::Kind::Zero:
      return phi_p(spectrum, exponent);
    case PNormExponent::Kind::Infinity:
      throw Error(ErrorKind::InvalidArgument,
                  "the relaxation objective is not defined for p = infinity");
    case PNormExponent::Kind::Finite:
      break;
  }
  const double p = exponent.value();
  return std::pow(trace_neg_power(spectrum, p), 1.0 / p);
}

double relaxation_objective(const SymMatrix& big_x, const PNormExponent& exponent) {
  return relaxation_objective(eig_sym(big_x), exponent);
}

Eigen::VectorXd phi_p_weight_gradient(const DesignInstance& instance, const Eigen::VectorXd& x) {
  if (x.size() != instance.n()) {
    throw Error(ErrorKind::InvalidArgument, "weight vector length must equal n");
  }
  const SpectralDecomposition spectrum = eig_sym(weighted_gram(instance.vectors, x));
  require_positive_definite(spectrum);

  // d/dx_i f = scale * u_i^T X^{power} u_i.
  double power = 0.0;
  double scale = 0.0;
  switch (instance.exponent.kind()) {
    case PNormExponent::Kind::Zero: {
      const double f = phi_p(spectrum, instance.exponent);
      power = -1.0;
      scale = -f / spectrum.dim();
      break;
    }
    case PNormExponent::Kind::Infinity:
      throw Error(ErrorKind::InvalidArgument, "no weight gradient for p = infinity");
    case PNormExponent::Kind::Finite: {
      const double p = instance.exponent.value();
      const double t = trace_neg_power(spectrum, p);
      power = -p - 1.0;
      scale = -std::pow(t, 1.0 / p - 1.0);
      break;
    }
  }
  const Eigen::MatrixXd projected = instance.vectors * spectrum.eigenvectors;  // n x d
  Eigen::VectorXd weights(spectrum.dim());
  for (int j = 0; j < spectrum.dim(); ++j) weights(j) = std::pow(spectrum.eigenvalues(j), power);
  return scale * (projected.array().square().matrix() * weights);
}

double gain_closed_form(double a, double b, double p) {
  if (a <= 0.0) return p * b;
  // (1 - (1 + a)^{-p}) / a, evaluated without cancellation for small a.
  return b * (-std::expm1(-p * std::log1p(a))) / a;
}

double loss_series(double a, double b, double p) {
  return binomial_series(p, b / (1.0 - a), a / (1.0 - a), 1.0);
}

double one_step_upper_bound(const SymMatrix& y, const Eigen::VectorXd& w, const Eigen::VectorXd& v,
                            double p) {
  const Mode mode = exponent_mode(p);
  const SpectralDecomposition spectrum = eig_sym(y);
  const double base = trace_neg_power(spectrum, p);
  const QuadForms add = quad_forms(spectrum, w, p);
  const QuadForms remove = quad_forms(spectrum, v, p);
  check_removal(remove.inv, mode);

  const double add_terms =
      -binomial_series(p, add.inv_pow / (1.0 + add.inv), add.inv / (1.0 + add.inv), -1.0);
  const double remove_terms = loss_series(remove.inv, remove.inv_pow, p);
  return base + add_terms + remove_terms;
}

SwapDelta swap_delta(const SpectralDecomposition& y_spectrum, const Eigen::VectorXd& u_add,
                     const Eigen::VectorXd& u_remove, double p) {
  const Mode mode = exponent_mode(p);
  const double base = trace_neg_power(y_spectrum, p);
  const QuadForms add = quad_forms(y_spectrum, u_add, p);
  const QuadForms remove = quad_forms(y_spectrum, u_remove, p);
  check_removal(remove.inv, mode);

  SwapDelta delta;
  delta.gain = gain_closed_form(add.inv, add.inv_pow, p);
  delta.loss = loss_series(remove.inv, remove.inv_pow, p);
  delta.progress = delta.gain - delta.loss;
  delta.upper_bound_rhs = base - delta.gain + delta.loss;
  return delta;
}

SwapDelta swap_delta(const SymMatrix& y, const Eigen::VectorXd& u_add,
                     const Eigen::VectorXd& u_remove, double p) {
  return swap_delta(eig_sym(y), u_add, u_remove, p);
}

}  // namespace pdesign
