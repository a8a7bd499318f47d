#include "pdesign/exchange.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "pdesign/errors.hpp"
#include "pdesign/objective.hpp"

namespace pdesign {
namespace {

constexpr double kProbabilityGuard = 1e-12;
constexpr double kDriftTolerance = 1e-8;

// Inverse-CDF draw over index order; -1 when the draw lands on "none".
int draw_index(const Eigen::VectorXd& probability, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probability.size(); ++i) {
    if (probability(i) <= 0.0) continue;
    cumulative += probability(i);
    if (u < cumulative) return static_cast<int>(i);
  }
  return -1;
}

double checked_probability(double value) {
  if (value < -kProbabilityGuard) {
    throw Error(ErrorKind::DistributionInvalid,
                "negative swap probability " + std::to_string(value));
  }
  return value < 0.0 ? 0.0 : value;
}

void check_total(double total, const char* which) {
  if (total > 1.0 + kProbabilityGuard) {
    throw Error(ErrorKind::DistributionInvalid,
                std::string(which) + " probabilities sum to " + std::to_string(total));
  }
}

void recompute_sums(ExchangeState& state, const ExchangeContext& ctx) {
  const std::vector<int> members = state.members();
  const SymMatrix y = subset_gram(ctx.instance.vectors, members);
  const SymMatrix z = subset_gram(ctx.normalized.v_vectors, members);
  const double y_drift = (y.matrix() - state.y.matrix()).norm();
  const double z_drift = (z.matrix() - state.z.matrix()).norm();
  if (y_drift > kDriftTolerance * std::max(1.0, y.matrix().norm()) ||
      z_drift > kDriftTolerance * std::max(1.0, z.matrix().norm())) {
    throw std::logic_error("running Y/Z sums drifted beyond 1e-8");
  }
  state.y = y;
  state.z = z;
}

}  // namespace

ExchangeParams make_params(int d, double p, double epsilon, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "d must be >= 1");
  if (!std::isfinite(p) || p < 1.0) {
    throw Error(ErrorKind::InvalidArgument, "rounding needs a finite exponent p >= 1");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "epsilon must lie in (0, 1)");
  }
  ExchangeParams params;
  params.p = p;
  params.epsilon = epsilon;
  params.gamma = std::max(epsilon / 6.0, 1.0 / (6.0 * p));
  params.kappa = std::max(epsilon / 2.0, 1.0 / (2.0 * p));
  const double dd = d;
  params.big_m = dd / params.gamma + dd * dd + 1.0;
  params.alpha = std::sqrt(dd) / params.gamma;
  params.iter_cap = static_cast<std::int64_t>(
      std::ceil(2.0 * params.big_m / params.gamma + 2.0 * params.big_m / (epsilon * p)));
  params.seed = seed;
  return params;
}

double size_bound(const ExchangeParams& params, int d, int k) {
  return (1.0 + params.epsilon) * k + 12.0 * d / params.gamma + 2.0 * d / params.kappa;
}

std::vector<int> ExchangeState::members() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < in_set.size(); ++i) {
    if (in_set[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

int ExchangeState::size() const {
  int count = 0;
  for (char flag : in_set) count += flag ? 1 : 0;
  return count;
}

const char* to_string(Termination cause) {
  switch (cause) {
    case Termination::ObjectiveMet: return "OBJECTIVE_MET";
    case Termination::IterCap: return "ITER_CAP";
  }
  return "UNKNOWN";
}

ExchangeState sample_initial(const ExchangeContext& ctx, std::uint64_t seed) {
  const int n = ctx.instance.n();
  const int d = ctx.instance.d();
  ExchangeState state;
  state.rng = Rng(seed);
  state.in_set.assign(n, 0);
  state.y = SymMatrix::zero(d);
  state.z = SymMatrix::zero(d);
  for (int i = 0; i < n; ++i) {
    if (state.rng.uniform() < ctx.solution.x(i)) {
      state.in_set[i] = 1;
      state.y.add_outer(ctx.instance.row(i));
      state.z.add_outer(ctx.normalized.v_vectors.row(i).transpose());
    }
  }
  state.t = 1;
  return state;
}

std::vector<int> restricted_set(const ExchangeState& state, const ActionMatrix& action,
                                const ExchangeContext& ctx) {
  const SpectralDecomposition z_spectrum = eig_sym(state.z);
  require_positive_definite(z_spectrum);
  const SymMatrix z_inv = pd_power(z_spectrum, -1.0);
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(state.in_set.size()); ++i) {
    if (!state.in_set[i]) continue;
    const auto v = ctx.normalized.v_vectors.row(i).transpose();
    const double score = ctx.params.alpha * action.a_sqrt.quadratic_form(v);
    const double leverage = z_inv.quadratic_form(v);
    if (score <= 0.5 && leverage <= ctx.params.kappa) out.push_back(i);
  }
  return out;
}

SwapDistribution swap_distribution(const ExchangeState& state, const ExchangeContext& ctx) {
  const int n = ctx.instance.n();
  const ExchangeParams& params = ctx.params;
  const Eigen::MatrixXd& v = ctx.normalized.v_vectors;
  const Eigen::VectorXd& x = ctx.solution.x;

  const SpectralDecomposition z_spectrum = eig_sym(state.z);
  SwapDistribution dist(solve_action_scalar(z_spectrum, params.alpha));
  dist.lambda_min_z = z_spectrum.lambda_min();
  dist.z_singular = !z_spectrum.positive_definite();

  dist.action_scores =
      params.alpha * (v * dist.action.a_sqrt.matrix()).cwiseProduct(v).rowwise().sum();
  dist.leverage = Eigen::VectorXd::Zero(n);
  if (!dist.z_singular) {
    const SymMatrix z_inv = pd_power(z_spectrum, -1.0);
    dist.leverage = (v * z_inv.matrix()).cwiseProduct(v).rowwise().sum();
    for (int i = 0; i < n; ++i) {
      if (state.in_set[i] && dist.action_scores(i) <= 0.5 && dist.leverage(i) <= params.kappa) {
        dist.restricted.push_back(i);
      }
    }
  }

  dist.add_probability = Eigen::VectorXd::Zero(n);
  dist.remove_probability = Eigen::VectorXd::Zero(n);
  double add_total = 0.0;
  for (int j = 0; j < n; ++j) {
    if (state.in_set[j]) continue;
    dist.add_probability(j) =
        checked_probability(x(j) * (1.0 + dist.action_scores(j)) / params.big_m);
    add_total += dist.add_probability(j);
  }
  double remove_total = 0.0;
  for (int i : dist.restricted) {
    dist.remove_probability(i) =
        checked_probability((1.0 - x(i)) * (1.0 - dist.action_scores(i)) / params.big_m);
    remove_total += dist.remove_probability(i);
  }
  check_total(add_total, "addition");
  check_total(remove_total, "removal");
  dist.add_none = 1.0 - add_total;
  dist.remove_none = 1.0 - remove_total;
  return dist;
}

double set_objective(const SymMatrix& y, double p) {
  const SpectralDecomposition spectrum = eig_sym(y);
  if (!spectrum.positive_definite()) return std::numeric_limits<double>::infinity();
  return std::pow(trace_neg_power(spectrum, p), 1.0 / p);
}

SwapRecord swap_step(ExchangeState& state, const ExchangeContext& ctx) {
  const SwapDistribution dist = swap_distribution(state, ctx);
  const int d = ctx.instance.d();
  const double p = ctx.params.p;

  SwapRecord record;
  record.t = state.t;
  record.c_t = dist.action.c;
  record.restricted_size = static_cast<int>(dist.restricted.size());
  record.lambda_min_z = dist.lambda_min_z;
  record.j_t = draw_index(dist.add_probability, state.rng);
  record.i_t = draw_index(dist.remove_probability, state.rng);

  const SpectralDecomposition y_spectrum = eig_sym(state.y);
  record.y_pd = y_spectrum.positive_definite();
  record.objective = record.y_pd ? std::pow(trace_neg_power(y_spectrum, p), 1.0 / p)
                                 : std::numeric_limits<double>::infinity();
  if (record.i_t >= 0) {
    record.removed_leverage = dist.leverage(record.i_t);
    record.removed_action_score = dist.action_scores(record.i_t);
  }
  if (record.y_pd) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    const Eigen::VectorXd added = record.j_t >= 0 ? Eigen::VectorXd(ctx.instance.row(record.j_t)) : zero;
    const Eigen::VectorXd removed =
        record.i_t >= 0 ? Eigen::VectorXd(ctx.instance.row(record.i_t)) : zero;
    const SwapDelta delta = swap_delta(y_spectrum, added, removed, p);
    record.gain = delta.gain;
    record.loss = delta.loss;
    record.progress = delta.progress;
  }

  if (record.j_t >= 0) {
    state.in_set[record.j_t] = 1;
    state.y.add_outer(ctx.instance.row(record.j_t), 1.0);
    state.z.add_outer(ctx.normalized.v_vectors.row(record.j_t).transpose(), 1.0);
  }
  if (record.i_t >= 0) {
    state.in_set[record.i_t] = 0;
    state.y.add_outer(ctx.instance.row(record.i_t), -1.0);
    state.z.add_outer(ctx.normalized.v_vectors.row(record.i_t).transpose(), -1.0);
  }
  ++state.t;
  if (state.t % kRecomputePeriod == 0) recompute_sums(state, ctx);
  return record;
}

RoundingReport run_exchange(const ExchangeContext& ctx, std::uint64_t seed,
                            const RunOptions& options) {
  const ExchangeParams& params = ctx.params;
  RoundingReport report;
  report.params = params;
  report.params.seed = seed;
  report.relaxation_objective = ctx.solution.objective;
  const double target = (1.0 + params.epsilon) * ctx.solution.objective;

  ExchangeState state = sample_initial(ctx, seed);
  while (true) {
    if (set_objective(state.y, params.p) <= target) {
      report.termination = Termination::ObjectiveMet;
      break;
    }
    // lambda_min(Z) >= 1 means Y >= X, so the objective target already holds.
    if (eig_sym(state.z).lambda_min() >= 1.0) {
      report.termination = Termination::ObjectiveMet;
      break;
    }
    if (state.t > params.iter_cap) {
      report.termination = Termination::IterCap;
      break;
    }
    const SwapRecord record = swap_step(state, ctx);
    if (options.keep_trace) report.trace.push_back(record);
    if (options.on_swap) options.on_swap(record, state);
  }

  report.final_set = state.members();
  report.size = static_cast<int>(report.final_set.size());
  report.iterations = state.t - 1;
  report.objective = set_objective(subset_gram(ctx.instance.vectors, report.final_set), params.p);
  report.ratio = report.objective / report.relaxation_objective;
  return report;
}

RoundingReport run(const DesignInstance& instance, std::uint64_t seed, const RunOptions& options) {
  instance.validate();
  if (!instance.exponent.is_finite()) {
    throw Error(ErrorKind::InvalidArgument, "rounding needs a finite exponent p >= 1");
  }
  const FractionalSolution solution = sparsify_support(instance, solve_relaxation(instance));
  const NormalizedInstance normalized = normalize(instance, solution);
  const ExchangeParams params =
      make_params(instance.d(), instance.exponent.value(), instance.epsilon, seed);
  return run_exchange({instance, solution, normalized, params}, seed, options);
}

StepExpectations step_expectations(const ExchangeState& state, const ExchangeContext& ctx) {
  const SwapDistribution dist = swap_distribution(state, ctx);
  const SpectralDecomposition y_spectrum = eig_sym(state.y);
  require_positive_definite(y_spectrum);
  const double p = ctx.params.p;
  const SymMatrix y_inv = pd_power(y_spectrum, -1.0);
  const SymMatrix y_pow = pd_power(y_spectrum, -p - 1.0);
  const Eigen::VectorXd& x = ctx.solution.x;

  StepExpectations out;
  out.trace_y = trace_neg_power(y_spectrum, p);
  out.trace_x = trace_neg_power(ctx.solution.big_x, p);
  for (int i = 0; i < ctx.instance.n(); ++i) {
    const auto u = ctx.instance.row(i);
    const double a = y_inv.quadratic_form(u);
    const double b = y_pow.quadratic_form(u);
    out.inner_x += x(i) * b;
    if (state.in_set[i]) out.inner_x_s += x(i) * b;
    if (dist.add_probability(i) > 0.0) {
      out.expected_gain += dist.add_probability(i) * gain_closed_form(a, b, p);
    }
    if (dist.remove_probability(i) > 0.0) {
      out.expected_loss += dist.remove_probability(i) * loss_series(a, b, p);
    }
  }
  const double big_m = ctx.params.big_m;
  out.loss_linear = p / big_m * (out.trace_y - out.inner_x_s);
  out.gain_linear = p / big_m * (out.inner_x - out.inner_x_s);
  out.higher_order_unit = p * p * ctx.instance.d() / (ctx.instance.k * big_m) * out.trace_x;
  out.loss_constant = std::max(0.0, (out.expected_loss - out.loss_linear) / out.higher_order_unit);
  out.gain_constant = std::max(0.0, (out.gain_linear - out.expected_gain) / out.higher_order_unit);
  return out;
}

}  // namespace pdesign
