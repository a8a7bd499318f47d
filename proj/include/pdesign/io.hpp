#pragma once

// On-disk artifacts: instance files, relaxation artifacts, rounding reports
// and per-iteration trace records. All are JSON text with numbers written as
// shortest round-trip decimals; non-finite objectives are written as null.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pdesign/exchange.hpp"
#include "pdesign/instance.hpp"
#include "pdesign/relax.hpp"

namespace pdesign {

inline constexpr int kSchemaVersion = 1;

struct GeneratorInfo {
  std::string distribution;
  std::uint64_t seed = 0;
};

struct InstanceFile {
  int schema_version = kSchemaVersion;
  DesignInstance instance;
  std::optional<GeneratorInfo> generator;
};

// Canonical serialization; parse(serialize(f)) reproduces f and
// serialize(parse(text)) == text for canonical text.
std::string serialize_instance(const InstanceFile& file);
InstanceFile parse_instance(std::string_view text);

// FNV-1a 64-bit over the bytes, as 16 lowercase hex digits.
std::string digest_hex(std::string_view bytes);
std::string instance_digest(const InstanceFile& file);

struct RelaxationArtifact {
  std::string instance_digest;
  std::string exponent;
  int k = 0;
  double tol = 0.0;
  int max_iters = 0;
  FractionalSolution solution;
  OptimalityCertificate certificate;
};

std::string serialize_relaxation(const RelaxationArtifact& artifact);
// Only x is taken from the file; big_x, objective and support are recomputed.
RelaxationArtifact parse_relaxation(std::string_view text, const DesignInstance& instance);

struct RunOutcome {
  std::uint64_t seed = 0;
  Termination termination = Termination::IterCap;
  std::int64_t iterations = 0;
  int size = 0;
  double objective = 0.0;
  double ratio = 0.0;
  std::vector<int> final_set;
};

struct ReportFile {
  int schema_version = kSchemaVersion;
  std::string instance_digest;
  int d = 0;
  int n = 0;
  int k = 0;
  double p = 1.0;
  double epsilon = 0.5;
  ExchangeParams params;
  double size_bound = 0.0;
  // Relaxation summary.
  double relaxation_objective = 0.0;
  bool certificate_passed = false;
  double certificate_max_violation = 0.0;
  double relax_tol = 1e-8;
  int relax_max_iters = 50000;
  int fractional_support_size = 0;
  std::vector<RunOutcome> runs;
  int success_count = 0;
  double success_rate = 0.0;
  bool interrupted = false;
  // Present for budget-rescaled runs.
  std::optional<int> original_k;
};

// A run counts as a success when it met the objective with ratio <= 1 + eps
// inside the iteration cap.
bool run_succeeded(const RunOutcome& run, const ExchangeParams& params);

std::string serialize_report(const ReportFile& report);
ReportFile parse_report(std::string_view text);

// One JSON object per line.
std::string serialize_trace_record(const SwapRecord& record);
SwapRecord parse_trace_record(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace pdesign
