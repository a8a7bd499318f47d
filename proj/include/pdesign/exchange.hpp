#pragma once

// Randomized exchange rounding. Starting from a Bernoulli(x) sample of the
// fractional solution, each iteration adds one vector and removes one (either
// may be skipped) with probabilities steered by the action matrix
// (alpha Z - c I)^{-2}, until (tr(Y^{-p}))^{1/p} <= (1 + eps)(tr(X^{-p}))^{1/p}
// or the iteration cap is reached.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pdesign/instance.hpp"
#include "pdesign/relax.hpp"
#include "pdesign/rng.hpp"
#include "pdesign/spectra.hpp"

namespace pdesign {

// Full recomputation period of the running Y and Z sums.
inline constexpr int kRecomputePeriod = 256;

struct ExchangeParams {
  double p = 1.0;
  double epsilon = 0.5;
  double gamma = 0.0;  // max(eps/6, 1/(6p))
  double kappa = 0.0;  // max(eps/2, 1/(2p))
  double big_m = 0.0;  // d/gamma + d^2 + 1
  double alpha = 0.0;  // sqrt(d)/gamma
  std::int64_t iter_cap = 0;  // ceil(2M/gamma + 2M/(eps p))
  std::uint64_t seed = 0;
};

ExchangeParams make_params(int d, double p, double epsilon, std::uint64_t seed = 0);

// |S| bound (1 + eps) k + 12 d / gamma + 2 d / kappa.
double size_bound(const ExchangeParams& params, int d, int k);

struct ExchangeState {
  std::vector<char> in_set;  // membership flags, length n
  SymMatrix y = SymMatrix::identity(1);  // sum_{i in S} u_i u_i^T
  SymMatrix z = SymMatrix::identity(1);  // sum_{i in S} v_i v_i^T
  std::int64_t t = 1;
  Rng rng{0};

  std::vector<int> members() const;
  int size() const;
};

// Everything the iterations read but never modify.
struct ExchangeContext {
  const DesignInstance& instance;
  const FractionalSolution& solution;
  const NormalizedInstance& normalized;
  const ExchangeParams& params;
};

enum class Termination { ObjectiveMet, IterCap };
const char* to_string(Termination cause);

struct SwapRecord {
  std::int64_t t = 0;
  double c_t = 0.0;
  int i_t = -1;  // removed index, -1 for none
  int j_t = -1;  // added index, -1 for none
  int restricted_size = 0;
  bool y_pd = false;
  double gain = 0.0;
  double loss = 0.0;
  double progress = 0.0;
  double lambda_min_z = 0.0;
  // (tr(Y_t^{-p}))^{1/p} before the swap; +inf when Y_t is singular.
  double objective = 0.0;
  // <v_i v_i^T, Z^{-1}> and alpha <v_i v_i^T, A^{1/2}> of the removed vector.
  double removed_leverage = 0.0;
  double removed_action_score = 0.0;
};

struct RoundingReport {
  std::vector<int> final_set;
  double objective = 0.0;             // (tr(Y^{-p}))^{1/p} of the final set
  double relaxation_objective = 0.0;  // (tr(X^{-p}))^{1/p}
  double ratio = 0.0;
  int size = 0;
  Termination termination = Termination::IterCap;
  std::int64_t iterations = 0;  // swap steps performed
  ExchangeParams params;
  std::vector<SwapRecord> trace;
};

// Probabilities of one exchange step, materialized for the current state.
struct SwapDistribution {
  explicit SwapDistribution(ActionMatrix a) : action(std::move(a)) {}

  ActionMatrix action;
  bool z_singular = false;
  double lambda_min_z = 0.0;
  Eigen::VectorXd action_scores;  // alpha <v_i v_i^T, A^{1/2}> for all i
  Eigen::VectorXd leverage;       // <v_i v_i^T, Z^{-1}>, zero when Z is singular
  std::vector<int> restricted;    // S'
  Eigen::VectorXd add_probability;     // zero on members
  Eigen::VectorXd remove_probability;  // zero outside S'
  double add_none = 1.0;
  double remove_none = 1.0;
};

ExchangeState sample_initial(const ExchangeContext& ctx, std::uint64_t seed);

// S' = {i in S : action_score(i) <= 1/2 and leverage(i) <= kappa}. Throws
// SingularMatrix when Z is singular.
std::vector<int> restricted_set(const ExchangeState& state, const ActionMatrix& action,
                                const ExchangeContext& ctx);

SwapDistribution swap_distribution(const ExchangeState& state, const ExchangeContext& ctx);

// One exchange step; mutates state (including its rng) and returns the record.
SwapRecord swap_step(ExchangeState& state, const ExchangeContext& ctx);

// (tr(Y^{-p}))^{1/p}, or +inf when Y is singular.
double set_objective(const SymMatrix& y, double p);

struct RunOptions {
  bool keep_trace = true;
  // Called after every swap with the record and the post-swap state.
  std::function<void(const SwapRecord&, const ExchangeState&)> on_swap;
};

RoundingReport run_exchange(const ExchangeContext& ctx, std::uint64_t seed,
                            const RunOptions& options = {});

// End to end: relaxation, sparsification, whitening and rounding.
RoundingReport run(const DesignInstance& instance, std::uint64_t seed,
                   const RunOptions& options = {});

// Exact conditional expectations of one step from a fixed state, with the
// first-order terms the expected loss/gain bounds are stated against.
struct StepExpectations {
  double expected_loss = 0.0;
  double expected_gain = 0.0;
  double trace_y = 0.0;            // tr(Y^{-p})
  double trace_x = 0.0;            // tr(X^{-p})
  double inner_x_s = 0.0;          // <X_S, Y^{-p-1}>, X_S = sum_{i in S} x(i) u_i u_i^T
  double inner_x = 0.0;            // <X, Y^{-p-1}>
  double loss_linear = 0.0;        // (p/M)(tr(Y^{-p}) - <X_S, Y^{-p-1}>)
  double gain_linear = 0.0;        // (p/M)(<X, Y^{-p-1}> - <X_S, Y^{-p-1}>)
  double higher_order_unit = 0.0;  // p^2 d / (k M) tr(X^{-p})
  // Smallest C with E[l] <= loss_linear + C unit, resp. E[g] >= gain_linear - C unit.
  double loss_constant = 0.0;
  double gain_constant = 0.0;
};

StepExpectations step_expectations(const ExchangeState& state, const ExchangeContext& ctx);

}  // namespace pdesign
