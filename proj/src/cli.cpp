#include "pdesign/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pdesign/errors.hpp"
#include "pdesign/exchange.hpp"
#include "pdesign/objective.hpp"
#include "pdesign/oracle.hpp"
#include "pdesign/relax.hpp"
#include "pdesign/rng.hpp"

namespace pdesign::cli {
namespace {

std::atomic<bool> g_interrupted{false};

extern "C" void handle_interrupt(int) { g_interrupted.store(true); }

constexpr double kRecomputeTolerance = 1e-8;

bool close_enough(double a, double b, double tol) {
  if (std::isinf(a) || std::isinf(b)) return a == b;
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

std::string format_double(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

struct PreparedRelaxation {
  DesignInstance instance;
  FractionalSolution solution;
  OptimalityCertificate certificate;
};

// Instance with the report/flag exponent and epsilon applied.
DesignInstance with_overrides(const DesignInstance& base, double p, double epsilon) {
  DesignInstance inst = base;
  inst.exponent = PNormExponent::finite(p);
  inst.epsilon = epsilon;
  return inst;
}

PreparedRelaxation prepare(const DesignInstance& instance, const SolveOptions& solve) {
  PreparedRelaxation out{instance, {}, {}};
  out.solution = sparsify_support(
      instance, solve_relaxation(instance, RelaxationOptions{solve.max_iters, solve.tol}));
  out.certificate = certify_optimality(instance, out.solution);
  return out;
}

class CheckList {
 public:
  void check(const std::string& name, bool ok, const std::string& detail = {}) {
    if (ok) {
      result_.lines.push_back("PASS " + name);
    } else {
      result_.passed = false;
      result_.lines.push_back("FAIL " + name + (detail.empty() ? "" : ": " + detail));
    }
  }
  VerifyResult take() { return std::move(result_); }

 private:
  VerifyResult result_;
};

}  // namespace

PNormExponent parse_exponent(const std::string& text) {
  if (text == "zero") return PNormExponent::zero();
  if (text == "infinity" || text == "inf") return PNormExponent::infinity();
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorKind::InvalidArgument, "cannot parse exponent \"" + text + "\"");
  }
  if (used != text.size()) {
    throw Error(ErrorKind::InvalidArgument, "cannot parse exponent \"" + text + "\"");
  }
  return PNormExponent::finite(value);
}

SeedRange parse_seed_range(const std::string& text) {
  auto parse_one = [&](const std::string& part) -> std::uint64_t {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorKind::InvalidArgument, "invalid seed range \"" + text + "\"");
    }
    return std::stoull(part);
  };
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const std::uint64_t seed = parse_one(text);
    return {seed, seed};
  }
  SeedRange range{parse_one(text.substr(0, dots)), parse_one(text.substr(dots + 2))};
  if (range.last < range.first) {
    throw Error(ErrorKind::InvalidArgument, "seed range must be ascending");
  }
  return range;
}

InstanceFile generate_instance(const GenerateOptions& options) {
  if (options.d < 1 || options.n < 1) {
    throw Error(ErrorKind::InvalidArgument, "generate needs d >= 1 and n >= 1");
  }
  InstanceFile file;
  DesignInstance& inst = file.instance;
  inst.vectors.resize(options.n, options.d);
  inst.k = options.k > 0 ? options.k : std::max(options.d, options.n / 2);
  inst.exponent = parse_exponent(options.p);
  inst.epsilon = options.epsilon;

  Rng rng(options.seed);
  if (options.distribution == "gaussian") {
    for (int i = 0; i < options.n; ++i) {
      for (int c = 0; c < options.d; ++c) inst.vectors(i, c) = rng.normal();
    }
  } else if (options.distribution == "heavy-tailed") {
    // Student t with 3 degrees of freedom.
    for (int i = 0; i < options.n; ++i) {
      for (int c = 0; c < options.d; ++c) {
        const double numerator = rng.normal();
        double chi2 = 0.0;
        for (int r = 0; r < 3; ++r) {
          const double g = rng.normal();
          chi2 += g * g;
        }
        inst.vectors(i, c) = numerator / std::sqrt(chi2 / 3.0);
      }
    }
  } else if (options.distribution == "identity") {
    inst.vectors.setZero();
    for (int i = 0; i < options.n; ++i) inst.vectors(i, i % options.d) = 1.0;
  } else {
    throw Error(ErrorKind::InvalidArgument,
                "unknown distribution \"" + options.distribution + "\"");
  }
  file.generator = GeneratorInfo{options.distribution, options.seed};
  inst.validate();
  return file;
}

RelaxationArtifact solve_instance(const InstanceFile& file, const SolveOptions& options) {
  const PreparedRelaxation prepared = prepare(file.instance, options);
  RelaxationArtifact artifact;
  artifact.instance_digest = instance_digest(file);
  artifact.exponent = file.instance.exponent.to_string();
  artifact.k = file.instance.k;
  artifact.tol = options.tol;
  artifact.max_iters = options.max_iters;
  artifact.solution = prepared.solution;
  artifact.certificate = prepared.certificate;
  return artifact;
}

int worker_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PNORM_DESIGN_THREADS")) {
    const int value = std::atoi(env);
    if (value > 0) return value;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

std::filesystem::path trace_path(const std::filesystem::path& dir, std::uint64_t seed) {
  return dir / ("trace_seed_" + std::to_string(seed) + ".jsonl");
}

ReportFile round_instance(const InstanceFile& file, const RoundOptions& options, std::ostream& log) {
  PNormExponent exponent = options.p ? parse_exponent(*options.p) : file.instance.exponent;
  if (exponent.kind() == PNormExponent::Kind::Infinity) {
    log << "warning: E-design rounding uses the finite proxy p = " << kEDesignProxyExponent
        << "\n";
    exponent = PNormExponent::finite(kEDesignProxyExponent);
  }
  if (exponent.kind() == PNormExponent::Kind::Zero) {
    throw Error(ErrorKind::InvalidArgument, "rounding needs a finite exponent p >= 1");
  }
  const double epsilon = options.epsilon.value_or(file.instance.epsilon);
  const DesignInstance instance = with_overrides(file.instance, exponent.value(), epsilon);
  instance.validate();
  const std::string digest = instance_digest(file);

  PreparedRelaxation prepared{instance, {}, {}};
  bool reused = false;
  if (options.relaxation) {
    const RelaxationArtifact artifact =
        parse_relaxation(read_text_file(*options.relaxation), instance);
    if (artifact.instance_digest == digest && artifact.k == instance.k &&
        artifact.exponent == instance.exponent.to_string() && artifact.tol == options.solve.tol &&
        artifact.max_iters == options.solve.max_iters) {
      prepared.solution = sparsify_support(instance, artifact.solution);
      prepared.certificate = certify_optimality(instance, prepared.solution);
      reused = true;
    } else {
      log << "warning: relaxation artifact does not match instance/flags; re-solving\n";
    }
  }
  if (!reused) prepared = prepare(instance, options.solve);
  if (!prepared.solution.converged) {
    log << "warning: relaxation did not reach the stationarity tolerance\n";
  }

  const NormalizedInstance normalized = normalize(instance, prepared.solution);
  const ExchangeParams params = make_params(instance.d(), exponent.value(), epsilon);
  const ExchangeContext ctx{instance, prepared.solution, normalized, params};

  if (options.trace_dir) std::filesystem::create_directories(*options.trace_dir);

  const std::uint64_t count = options.seeds.last - options.seeds.first + 1;
  std::vector<std::optional<RunOutcome>> outcomes(count);
  std::atomic<std::uint64_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    while (!g_interrupted.load()) {
      const std::uint64_t index = next.fetch_add(1);
      if (index >= count) return;
      const std::uint64_t seed = options.seeds.first + index;
      try {
        RunOptions run_options;
        run_options.keep_trace = false;
        std::ofstream trace_out;
        if (options.trace_dir) {
          trace_out.open(trace_path(*options.trace_dir, seed), std::ios::binary | std::ios::trunc);
          if (!trace_out) throw Error(ErrorKind::InvalidFile, "cannot write trace file");
          run_options.on_swap = [&trace_out](const SwapRecord& record, const ExchangeState&) {
            trace_out << serialize_trace_record(record) << '\n';
          };
        }
        const RoundingReport rounding = run_exchange(ctx, seed, run_options);
        outcomes[index] = RunOutcome{seed,          rounding.termination, rounding.iterations,
                                     rounding.size, rounding.objective,   rounding.ratio,
                                     rounding.final_set};
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!failure) failure = std::current_exception();
        g_interrupted.store(true);
      }
    }
  };

  const int threads = static_cast<int>(
      std::min<std::uint64_t>(count, static_cast<std::uint64_t>(worker_threads(options.threads))));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& thread : pool) thread.join();
  if (failure) std::rethrow_exception(failure);

  ReportFile report;
  report.instance_digest = digest;
  report.d = instance.d();
  report.n = instance.n();
  report.k = instance.k;
  report.p = exponent.value();
  report.epsilon = epsilon;
  report.params = params;
  report.size_bound = size_bound(params, instance.d(), instance.k);
  report.relaxation_objective = prepared.solution.objective;
  report.certificate_passed = prepared.certificate.passed;
  report.certificate_max_violation = prepared.certificate.max_violation;
  report.relax_tol = options.solve.tol;
  report.relax_max_iters = options.solve.max_iters;
  report.fractional_support_size = static_cast<int>(prepared.solution.fractional_support.size());
  for (auto& outcome : outcomes) {
    if (!outcome) {
      report.interrupted = true;
      continue;
    }
    if (run_succeeded(*outcome, params)) ++report.success_count;
    report.runs.push_back(std::move(*outcome));
  }
  report.success_rate =
      report.runs.empty() ? 0.0 : static_cast<double>(report.success_count) / report.runs.size();
  return report;
}

VerifyResult verify_report(const InstanceFile& file, const ReportFile& report,
                           const std::optional<std::filesystem::path>& trace_dir) {
  if (instance_digest(file) != report.instance_digest) {
    throw Error(ErrorKind::InvalidFile, "instance digest does not match the report");
  }
  CheckList checks;
  const DesignInstance instance = with_overrides(file.instance, report.p, report.epsilon);
  checks.check("dimensions",
               report.d == instance.d() && report.n == instance.n() && report.k == instance.k,
               "report (d, n, k) differs from the instance");

  const ExchangeParams params = make_params(instance.d(), report.p, report.epsilon);
  const bool params_ok = close_enough(report.params.gamma, params.gamma, 1e-12) &&
                         close_enough(report.params.kappa, params.kappa, 1e-12) &&
                         close_enough(report.params.big_m, params.big_m, 1e-12) &&
                         close_enough(report.params.alpha, params.alpha, 1e-12) &&
                         report.params.iter_cap == params.iter_cap;
  checks.check("parameters", params_ok, "gamma/kappa/M/alpha/iter_cap do not match");
  const double bound = size_bound(params, instance.d(), instance.k);
  checks.check("size-bound-value", close_enough(report.size_bound, bound, 1e-12),
               "reported size bound " + format_double(report.size_bound) + " expected " +
                   format_double(bound));

  const PreparedRelaxation prepared =
      prepare(instance, SolveOptions{report.relax_tol, report.relax_max_iters});
  const double relax_objective = prepared.solution.objective;
  checks.check("relaxation-objective",
               close_enough(report.relaxation_objective, relax_objective, kRecomputeTolerance),
               "reported " + format_double(report.relaxation_objective) + " recomputed " +
                   format_double(relax_objective));
  checks.check("certificate",
               report.certificate_passed == prepared.certificate.passed &&
                   prepared.certificate.passed,
               "optimality certificate max violation " +
                   format_double(prepared.certificate.max_violation));

  std::string set_issue, objective_issue, ratio_issue, size_issue, cap_issue, met_issue;
  int successes = 0;
  for (const RunOutcome& run : report.runs) {
    const std::string tag = "seed " + std::to_string(run.seed) + ": ";
    std::vector<int> sorted = run.final_set;
    std::sort(sorted.begin(), sorted.end());
    const bool valid_set =
        std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end() &&
        (sorted.empty() || (sorted.front() >= 0 && sorted.back() < instance.n())) &&
        static_cast<int>(sorted.size()) == run.size;
    if (!valid_set) {
      if (set_issue.empty()) set_issue = tag + "final set is malformed or size mismatch";
      continue;
    }
    const double objective = set_objective(subset_gram(instance.vectors, sorted), report.p);
    if (!close_enough(run.objective, objective, kRecomputeTolerance) && objective_issue.empty()) {
      objective_issue = tag + "reported " + format_double(run.objective) + " recomputed " +
                        format_double(objective);
    }
    const double ratio = objective / relax_objective;
    if (!close_enough(run.ratio, ratio, kRecomputeTolerance) && ratio_issue.empty()) {
      ratio_issue =
          tag + "reported " + format_double(run.ratio) + " recomputed " + format_double(ratio);
    }
    if (run.size > bound && size_issue.empty()) {
      size_issue = tag + "|S| = " + std::to_string(run.size) + " exceeds " + format_double(bound);
    }
    if (run.iterations > params.iter_cap + 0 && cap_issue.empty()) {
      cap_issue = tag + std::to_string(run.iterations) + " iterations exceed the cap";
    }
    if (run.termination == Termination::ObjectiveMet && ratio > 1.0 + report.epsilon + 1e-12 &&
        met_issue.empty()) {
      met_issue = tag + "OBJECTIVE_MET with ratio " + format_double(ratio);
    }
    RunOutcome recomputed = run;
    recomputed.ratio = ratio;
    if (run_succeeded(recomputed, params)) ++successes;
  }
  checks.check("final-sets", set_issue.empty(), set_issue);
  checks.check("objectives", objective_issue.empty(), objective_issue);
  checks.check("ratios", ratio_issue.empty(), ratio_issue);
  checks.check("size-bound", size_issue.empty(), size_issue);
  checks.check("iteration-cap", cap_issue.empty(), cap_issue);
  checks.check("objective-met", met_issue.empty(), met_issue);
  const double rate =
      report.runs.empty() ? 0.0 : static_cast<double>(successes) / report.runs.size();
  checks.check("success-rate",
               successes == report.success_count && close_enough(report.success_rate, rate, 1e-12),
               "reported " + std::to_string(report.success_count) + " recomputed " +
                   std::to_string(successes));

  if (trace_dir) {
    std::string trace_issue;
    for (const RunOutcome& run : report.runs) {
      std::ifstream in(trace_path(*trace_dir, run.seed));
      if (!in) {
        trace_issue = "missing trace for seed " + std::to_string(run.seed);
        break;
      }
      std::int64_t rows = 0;
      for (std::string line; std::getline(in, line);) {
        if (!line.empty()) ++rows;
      }
      if (rows != run.iterations) {
        trace_issue = "seed " + std::to_string(run.seed) + ": " + std::to_string(rows) +
                      " trace rows vs " + std::to_string(run.iterations) + " iterations";
        break;
      }
    }
    checks.check("traces", trace_issue.empty(), trace_issue);
  }
  return checks.take();
}

InstanceFile rescale_instance(const InstanceFile& file) {
  InstanceFile out = file;
  const int rescaled =
      static_cast<int>(std::floor((1.0 - file.instance.epsilon) * file.instance.k));
  if (rescaled < file.instance.d()) {
    throw Error(ErrorKind::InvalidArgument,
                "rescaled budget floor((1 - eps) k) = " + std::to_string(rescaled) +
                    " is below d");
  }
  out.instance.k = rescaled;
  return out;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Phi_p optimal experimental design: relaxation, rounding and verification"};
  app.require_subcommand(1);

  GenerateOptions gen;
  std::string gen_out;
  auto* generate = app.add_subcommand("generate", "write a random or structured instance file");
  generate->add_option("--distribution", gen.distribution, "gaussian | heavy-tailed | identity");
  generate->add_option("--d", gen.d, "dimension")->required();
  generate->add_option("--n", gen.n, "number of vectors")->required();
  generate->add_option("--k", gen.k, "budget (default max(d, n/2))");
  generate->add_option("--p", gen.p, "exponent: number >= 1, zero or infinity");
  generate->add_option("--epsilon", gen.epsilon, "accuracy in (0, 1)");
  generate->add_option("--seed", gen.seed, "generator seed");
  generate->add_option("--out", gen_out, "output path")->required();

  std::string instance_path;
  SolveOptions solve_opts;
  std::string solve_out;
  auto* solve = app.add_subcommand("solve", "solve and sparsify the convex relaxation");
  solve->add_option("instance", instance_path, "instance file")->required();
  solve->add_option("--tol", solve_opts.tol, "projected-gradient stationarity tolerance");
  solve->add_option("--max-iters", solve_opts.max_iters, "iteration limit");
  solve->add_option("--out", solve_out, "relaxation artifact path")->required();

  RoundOptions round_opts;
  std::string seeds_text = "0";
  std::string round_out;
  std::string relaxation_path, trace_dir, p_text;
  double epsilon_value = 0.0;
  auto add_round_flags = [&](CLI::App* cmd) {
    cmd->add_option("instance", instance_path, "instance file")->required();
    cmd->add_option("--seeds", seeds_text, "seed or inclusive range a..b");
    cmd->add_option("--p", p_text, "override the instance exponent");
    cmd->add_option("--epsilon", epsilon_value, "override the instance epsilon");
    cmd->add_option("--relaxation", relaxation_path, "relaxation artifact from `solve`");
    cmd->add_option("--trace-out", trace_dir, "directory for per-seed trace files");
    cmd->add_option("--tol", round_opts.solve.tol, "relaxation tolerance");
    cmd->add_option("--max-iters", round_opts.solve.max_iters, "relaxation iteration limit");
    cmd->add_option("--threads", round_opts.threads, "worker threads");
    cmd->add_option("--out", round_out, "report path")->required();
  };
  auto* round = app.add_subcommand("round", "randomized exchange rounding over a seed range");
  add_round_flags(round);

  std::string rescaled_instance_out;
  auto* rescale = app.add_subcommand(
      "rescale", "round with budget floor((1 - eps) k) so the bicriteria size fits k");
  add_round_flags(rescale);
  rescale->add_option("--instance-out", rescaled_instance_out, "rescaled instance path")
      ->required();

  std::string report_path, verify_trace_dir;
  auto* verify = app.add_subcommand("verify", "recompute and check a report");
  verify->add_option("instance", instance_path, "instance file")->required();
  verify->add_option("report", report_path, "report file")->required();
  verify->add_option("--trace-dir", verify_trace_dir, "check trace row counts");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (generate->parsed()) {
      write_text_file(gen_out, serialize_instance(generate_instance(gen)));
      return kExitOk;
    }
    const InstanceFile file = parse_instance(read_text_file(instance_path));
    if (solve->parsed()) {
      const RelaxationArtifact artifact = solve_instance(file, solve_opts);
      write_text_file(solve_out, serialize_relaxation(artifact));
      out << "objective " << format_double(artifact.solution.objective) << " certificate "
          << (artifact.certificate.passed ? "PASS" : "FAIL") << " fractional "
          << artifact.solution.fractional_support.size() << "\n";
      return kExitOk;
    }
    if (round->parsed() || rescale->parsed()) {
      round_opts.seeds = parse_seed_range(seeds_text);
      if (!p_text.empty()) round_opts.p = p_text;
      if (epsilon_value != 0.0) round_opts.epsilon = epsilon_value;
      if (!relaxation_path.empty()) round_opts.relaxation = relaxation_path;
      if (!trace_dir.empty()) round_opts.trace_dir = trace_dir;

      InstanceFile target = file;
      if (rescale->parsed()) {
        if (round_opts.epsilon) target.instance.epsilon = *round_opts.epsilon;
        target = rescale_instance(target);
        write_text_file(rescaled_instance_out, serialize_instance(target));
      }
      g_interrupted.store(false);
      auto previous = std::signal(SIGINT, handle_interrupt);
      ReportFile report;
      try {
        report = round_instance(target, round_opts, err);
      } catch (...) {
        std::signal(SIGINT, previous);
        throw;
      }
      std::signal(SIGINT, previous);
      if (rescale->parsed()) report.original_k = file.instance.k;
      write_text_file(round_out, serialize_report(report));
      out << "success " << report.success_count << "/" << report.runs.size() << "\n";
      if (report.original_k) {
        int fits = 0;
        for (const RunOutcome& run : report.runs) fits += run.size <= *report.original_k ? 1 : 0;
        out << "within original budget " << fits << "/" << report.runs.size() << "\n";
      }
      return report.interrupted ? kExitFailure : kExitOk;
    }
    if (verify->parsed()) {
      const ReportFile report = parse_report(read_text_file(report_path));
      std::optional<std::filesystem::path> traces;
      if (!verify_trace_dir.empty()) traces = verify_trace_dir;
      const VerifyResult result = verify_report(file, report, traces);
      for (const std::string& line : result.lines) out << line << "\n";
      out << (result.passed ? "PASS" : "FAIL") << "\n";
      return result.passed ? kExitOk : kExitFailure;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::DistributionInvalid ? kExitFailure : kExitInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitInvalid;
}

}  // namespace pdesign::cli
