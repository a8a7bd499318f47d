#include "pdesign/relax.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <utility>

#include "pdesign/errors.hpp"
#include "pdesign/objective.hpp"

namespace pdesign {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
  double value = kInf;
  Eigen::VectorXd gradient;
};

// Objective (and optionally gradient) at x; value is +inf when X(x) is not
// positive definite.
Evaluation evaluate(const DesignInstance& instance, const Eigen::VectorXd& x, bool with_gradient) {
  Evaluation out;
  const SpectralDecomposition spectrum = eig_sym(weighted_gram(instance.vectors, x));
  if (!spectrum.positive_definite()) return out;
  out.value = relaxation_objective(spectrum, instance.exponent);
  if (with_gradient) out.gradient = phi_p_weight_gradient(instance, x);
  return out;
}

double stationarity_of(const Eigen::VectorXd& x, const Eigen::VectorXd& gradient, double budget) {
  return (project_capped_simplex(x - gradient, budget) - x).lpNorm<Eigen::Infinity>();
}

int vech_size(int d) { return d * (d + 1) / 2; }

}  // namespace

Eigen::VectorXd project_capped_simplex(const Eigen::VectorXd& z, double budget) {
  Eigen::VectorXd clamped = z.cwiseMax(0.0).cwiseMin(1.0);
  double value = clamped.sum();
  if (value <= budget) return clamped;

  // s(theta) = sum_i clamp(z_i - theta, 0, 1) is piecewise linear and
  // decreasing; walk its breakpoints until it drops to the budget.
  std::vector<std::pair<double, int>> events;
  events.reserve(2 * static_cast<std::size_t>(z.size()));
  int slope = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) > 1.0) events.emplace_back(z(i) - 1.0, -1);
    if (z(i) > 0.0) events.emplace_back(z(i), +1);
    if (z(i) > 0.0 && z(i) <= 1.0) --slope;
  }
  std::sort(events.begin(), events.end());

  double theta = 0.0;
  double position = 0.0;
  for (const auto& [next, delta] : events) {
    const double next_value = value + slope * (next - position);
    if (next_value <= budget && slope < 0) {
      theta = position + (value - budget) / static_cast<double>(-slope);
      break;
    }
    value = next_value;
    position = next;
    slope += delta;
    theta = position;
  }
  Eigen::VectorXd projected = (z.array() - theta).cwiseMax(0.0).cwiseMin(1.0).matrix();
  return projected;
}

std::vector<int> fractional_indices(const Eigen::VectorXd& x, double tolerance) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x(i) > tolerance && x(i) < 1.0 - tolerance) support.push_back(static_cast<int>(i));
  }
  return support;
}

FractionalSolution make_solution(const DesignInstance& instance, Eigen::VectorXd x) {
  if (x.size() != instance.n()) {
    throw Error(ErrorKind::InvalidArgument, "weight vector length must equal n");
  }
  FractionalSolution sol;
  sol.x = x.cwiseMax(0.0).cwiseMin(1.0);
  sol.big_x = weighted_gram(instance.vectors, sol.x);
  sol.objective = relaxation_objective(sol.big_x, instance.exponent);
  sol.fractional_support = fractional_indices(sol.x);
  return sol;
}

void require_spanning(const DesignInstance& instance) {
  const SpectralDecomposition gram =
      eig_sym(SymMatrix(instance.vectors.transpose() * instance.vectors));
  if (!gram.positive_definite()) {
    throw Error(ErrorKind::RankDeficient, "vectors do not span R^d");
  }
}

double projected_stationarity(const DesignInstance& instance, const Eigen::VectorXd& x) {
  return stationarity_of(x, phi_p_weight_gradient(instance, x), instance.k);
}

FractionalSolution solve_relaxation(const DesignInstance& instance,
                                    const RelaxationOptions& options) {
  instance.validate();
  if (instance.exponent.kind() == PNormExponent::Kind::Infinity) {
    throw Error(ErrorKind::InvalidArgument, "relaxation needs a finite or zero exponent");
  }
  require_spanning(instance);

  const double budget = instance.k;
  constexpr double kArmijo = 1e-4;
  constexpr double kStepMin = 1e-10;
  constexpr double kStepMax = 1e10;
  constexpr std::size_t kWindow = 10;

  Eigen::VectorXd x = Eigen::VectorXd::Constant(instance.n(), budget / instance.n());
  Evaluation current = evaluate(instance, x, true);
  if (!std::isfinite(current.value)) {
    throw Error(ErrorKind::RankDeficient, "uniform start is singular");
  }

  Eigen::VectorXd best_x = x;
  double best_value = current.value;
  std::deque<double> recent{current.value};

  double step = 1.0 / std::max(stationarity_of(x, current.gradient, budget), 1e-12);
  step = std::clamp(step, kStepMin, kStepMax);

  double stationarity = stationarity_of(x, current.gradient, budget);
  int iter = 0;
  bool converged = stationarity <= options.tol;
  while (!converged && iter < options.max_iters) {
    ++iter;
    const Eigen::VectorXd direction =
        project_capped_simplex(x - step * current.gradient, budget) - x;
    const double slope = current.gradient.dot(direction);
    const double reference = *std::max_element(recent.begin(), recent.end());

    double t = 1.0;
    Evaluation trial;
    Eigen::VectorXd candidate;
    bool accepted = false;
    while (t > 1e-20) {
      candidate = x + t * direction;
      trial = evaluate(instance, candidate, false);
      if (std::isfinite(trial.value) && trial.value <= reference + kArmijo * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    trial.gradient = phi_p_weight_gradient(instance, candidate);
    const Eigen::VectorXd s = candidate - x;
    const Eigen::VectorXd y = trial.gradient - current.gradient;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, kStepMin, kStepMax) : kStepMax;

    x = std::move(candidate);
    current = std::move(trial);
    recent.push_back(current.value);
    if (recent.size() > kWindow) recent.pop_front();
    if (current.value < best_value) {
      best_value = current.value;
      best_x = x;
    }
    stationarity = stationarity_of(x, current.gradient, budget);
    converged = stationarity <= options.tol;
  }

  if (converged && current.value <= best_value) best_x = x;
  FractionalSolution sol = make_solution(instance, best_x);
  sol.iterations = iter;
  sol.stationarity = projected_stationarity(instance, sol.x);
  sol.converged = sol.stationarity <= options.tol;
  return sol;
}

FractionalSolution sparsify_support(const DesignInstance& instance, const FractionalSolution& sol) {
  const int d = instance.d();
  const int rows = vech_size(d) + 1;
  const std::size_t limit = static_cast<std::size_t>(rows);

  Eigen::VectorXd x = sol.x;
  std::vector<int> support = fractional_indices(x);
  if (support.size() <= limit) return sol;

  while (support.size() > limit) {
    // One more column than equations guarantees a nonzero null vector.
    const int cols = rows + 1;
    Eigen::MatrixXd system(rows, cols);
    for (int c = 0; c < cols; ++c) {
      const auto u = instance.row(support[c]);
      int r = 0;
      for (int a = 0; a < d; ++a) {
        for (int b = a; b < d; ++b) system(r++, c) = u(a) * u(b);
      }
      system(r, c) = 1.0;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(system, Eigen::ComputeFullV);
    const Eigen::VectorXd direction = svd.matrixV().col(cols - 1);

    // Largest step along +direction that stays inside the box.
    double t = std::numeric_limits<double>::infinity();
    int blocking = -1;
    double blocking_value = 0.0;
    for (int c = 0; c < cols; ++c) {
      const double xi = x(support[c]);
      const double di = direction(c);
      if (di > 0.0 && (1.0 - xi) / di < t) {
        t = (1.0 - xi) / di;
        blocking = c;
        blocking_value = 1.0;
      } else if (di < 0.0 && xi / (-di) < t) {
        t = xi / (-di);
        blocking = c;
        blocking_value = 0.0;
      }
    }
    for (int c = 0; c < cols; ++c) {
      x(support[c]) = std::clamp(x(support[c]) + t * direction(c), 0.0, 1.0);
    }
    x(support[blocking]) = blocking_value;
    support = fractional_indices(x);
  }

  FractionalSolution out = make_solution(instance, x);
  out.converged = sol.converged;
  out.iterations = sol.iterations;
  out.stationarity = sol.stationarity;
  return out;
}

NormalizedInstance normalize(const DesignInstance& instance, const FractionalSolution& sol) {
  NormalizedInstance out;
  out.whitener = pd_power(sol.big_x, -0.5);
  out.v_vectors = instance.vectors * out.whitener.matrix();
  return out;
}

OptimalityCertificate certify_optimality(const DesignInstance& instance,
                                         const FractionalSolution& sol) {
  const SpectralDecomposition spectrum = eig_sym(sol.big_x);
  require_positive_definite(spectrum);

  // Finite p: <X^{-p-1}, u u^T> <= tr(X^{-p}) / k. Zero: the p -> 0 limit
  // u^T X^{-1} u <= d / k.
  double power = -2.0;
  double total = 0.0;
  switch (instance.exponent.kind()) {
    case PNormExponent::Kind::Zero:
      power = -1.0;
      total = spectrum.dim();
      break;
    case PNormExponent::Kind::Finite:
      power = -instance.exponent.value() - 1.0;
      total = trace_neg_power(spectrum, instance.exponent.value());
      break;
    case PNormExponent::Kind::Infinity:
      throw Error(ErrorKind::InvalidArgument, "no optimality certificate for p = infinity");
  }
  const SymMatrix weight = pd_power(spectrum, power);

  OptimalityCertificate cert;
  cert.threshold = total / instance.k;
  cert.tolerance = 1e-4 * cert.threshold;
  for (int i : sol.fractional_support) {
    ++cert.checked;
    const double violation = weight.quadratic_form(instance.row(i)) - cert.threshold;
    if (violation > cert.max_violation) {
      cert.max_violation = violation;
      cert.worst_index = i;
    }
  }
  cert.passed = cert.max_violation <= cert.tolerance;
  return cert;
}

}  // namespace pdesign
