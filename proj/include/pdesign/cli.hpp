#pragma once

// Command-line front end. Every verb is also callable as a function so the
// test suites can exercise the same code paths without spawning processes.
//
// Exit codes: 0 success, 1 verification/acceptance failure, 2 invalid input.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pdesign/io.hpp"

namespace pdesign::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;

// Finite exponent used when an E-design (p = infinity) rounding is requested.
inline constexpr double kEDesignProxyExponent = 32.0;

struct GenerateOptions {
  std::string distribution = "gaussian";  // gaussian | heavy-tailed | identity
  int d = 3;
  int n = 30;
  int k = 0;  // 0 picks max(d, n / 2)
  std::string p = "1";
  double epsilon = 0.25;
  std::uint64_t seed = 0;
};

InstanceFile generate_instance(const GenerateOptions& options);

PNormExponent parse_exponent(const std::string& text);

struct SeedRange {
  std::uint64_t first = 0;
  std::uint64_t last = 0;
};
// "a..b" (inclusive) or a single seed "a".
SeedRange parse_seed_range(const std::string& text);

struct SolveOptions {
  double tol = 1e-8;
  int max_iters = 50000;
};

RelaxationArtifact solve_instance(const InstanceFile& file, const SolveOptions& options);

struct RoundOptions {
  SeedRange seeds;
  std::optional<std::string> p;
  std::optional<double> epsilon;
  std::optional<std::filesystem::path> relaxation;
  std::optional<std::filesystem::path> trace_dir;
  SolveOptions solve;
  int threads = 0;  // 0: PNORM_DESIGN_THREADS or hardware concurrency
};

// Runs exchange rounding for every seed in the range. Warnings go to `log`.
ReportFile round_instance(const InstanceFile& file, const RoundOptions& options, std::ostream& log);

std::filesystem::path trace_path(const std::filesystem::path& dir, std::uint64_t seed);

struct VerifyResult {
  bool passed = true;
  std::vector<std::string> lines;  // "PASS name" / "FAIL name: detail"
};

// Independent recomputation of a report. Throws InvalidFile on a digest
// mismatch.
VerifyResult verify_report(const InstanceFile& file, const ReportFile& report,
                           const std::optional<std::filesystem::path>& trace_dir = std::nullopt);

// Budget floor((1 - eps) k) for turning the bicriteria guarantee into a
// size-k solution.
InstanceFile rescale_instance(const InstanceFile& file);

int worker_threads(int requested);

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdesign::cli
