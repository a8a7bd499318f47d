#include "pdesign/oracle.hpp"

#include <cmath>
#include <limits>

#include "pdesign/errors.hpp"
#include "pdesign/objective.hpp"

namespace pdesign {
namespace {

double binomial(int n, int r) {
  double value = 1.0;
  for (int i = 1; i <= r; ++i) value = value * (n - r + i) / i;
  return value;
}

double gram_objective(const SymMatrix& gram, const PNormExponent& exponent) {
  const SpectralDecomposition spectrum = eig_sym(gram);
  if (!spectrum.positive_definite()) return std::numeric_limits<double>::infinity();
  return relaxation_objective(spectrum, exponent);
}

}  // namespace

double subset_objective(const DesignInstance& instance, const std::vector<int>& subset) {
  return gram_objective(subset_gram(instance.vectors, subset), instance.exponent);
}

BruteForceResult brute_force_best(const DesignInstance& instance) {
  return brute_force_best(instance, instance.k);
}

BruteForceResult brute_force_best(const DesignInstance& instance, int size) {
  const int n = instance.n();
  if (size < 0 || size > n) throw Error(ErrorKind::InvalidArgument, "subset size out of range");
  if (binomial(n, size) > kMaxEnumeration) {
    throw Error(ErrorKind::TooLarge, "C(n, k) exceeds the enumeration guard");
  }
  BruteForceResult result;
  result.best_objective = std::numeric_limits<double>::infinity();

  // Lexicographic enumeration of combinations; strict improvement keeps the
  // lexicographically first minimizer.
  std::vector<int> subset(size);
  for (int i = 0; i < size; ++i) subset[i] = i;
  while (true) {
    ++result.enumerated;
    const double value = subset_objective(instance, subset);
    if (value < result.best_objective) {
      result.best_objective = value;
      result.best_set = subset;
    }
    int pos = size - 1;
    while (pos >= 0 && subset[pos] == n - size + pos) --pos;
    if (pos < 0) break;
    ++subset[pos];
    for (int i = pos + 1; i < size; ++i) subset[i] = subset[i - 1] + 1;
  }
  return result;
}

ProgressSummary progress_statistics(const std::vector<SwapRecord>& trace, double relaxation_trace,
                                    double p, int k) {
  ProgressSummary summary;
  double sum_sq = 0.0;
  for (const SwapRecord& record : trace) {
    if (!record.y_pd) continue;
    ++summary.steps;
    summary.cumulative_progress += record.progress;
    sum_sq += record.progress * record.progress;
    summary.max_abs_progress = std::max(summary.max_abs_progress, std::abs(record.progress));
  }
  if (summary.steps > 0) {
    const double count = static_cast<double>(summary.steps);
    summary.mean_progress = summary.cumulative_progress / count;
    summary.variance_progress =
        std::max(0.0, sum_sq / count - summary.mean_progress * summary.mean_progress);
  }
  const double unit = relaxation_trace * p / k;
  summary.max_increment_ratio = unit > 0.0 ? summary.max_abs_progress / unit : 0.0;
  return summary;
}

Eigen::VectorXd finite_difference_gradient(const DesignInstance& instance,
                                           const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd gradient(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const SymMatrix plus = weighted_gram(instance.vectors, probe);
    probe(i) = x(i) - h;
    const SymMatrix minus = weighted_gram(instance.vectors, probe);
    probe(i) = x(i);
    gradient(i) = (relaxation_objective(plus, instance.exponent) -
                   relaxation_objective(minus, instance.exponent)) /
                  (2.0 * h);
  }
  return gradient;
}

Eigen::VectorXd richardson_gradient(const DesignInstance& instance, const Eigen::VectorXd& x,
                                    double h) {
  return (4.0 * finite_difference_gradient(instance, x, 0.5 * h) -
          finite_difference_gradient(instance, x, h)) /
         3.0;
}

}  // namespace pdesign
