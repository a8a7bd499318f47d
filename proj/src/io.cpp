#include "pdesign/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pdesign/errors.hpp"

namespace pdesign {
namespace {

using Json = nlohmann::ordered_json;

// Arrays of scalars stay on one line; objects and nested arrays are indented.
void pretty(const Json& value, int indent, std::string& out) {
  const std::string pad(indent, ' ');
  const std::string inner(indent + 2, ' ');
  if (value.is_object()) {
    if (value.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    std::size_t i = 0;
    for (auto it = value.begin(); it != value.end(); ++it, ++i) {
      out += inner;
      out += Json(it.key()).dump();
      out += ": ";
      pretty(it.value(), indent + 2, out);
      if (i + 1 < value.size()) out += ',';
      out += '\n';
    }
    out += pad + "}";
    return;
  }
  if (value.is_array()) {
    bool flat = true;
    for (const auto& element : value) flat = flat && !element.is_structured();
    if (flat) {
      out += value.dump();
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < value.size(); ++i) {
      out += inner;
      pretty(value[i], indent + 2, out);
      if (i + 1 < value.size()) out += ',';
      out += '\n';
    }
    out += pad + "]";
    return;
  }
  out += value.dump();
}

std::string to_text(const Json& value) {
  std::string out;
  pretty(value, 0, out);
  out += '\n';
  return out;
}

Json number_or_null(double value) {
  if (!std::isfinite(value)) return Json(nullptr);
  return Json(value);
}

double number_or_inf(const Json& value) {
  if (value.is_null()) return std::numeric_limits<double>::infinity();
  return value.get<double>();
}

Json parse_json(std::string_view text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidFile, std::string(what) + ": " + e.what());
  }
}

template <typename Fn>
auto with_file_errors(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidFile, std::string(what) + ": " + e.what());
  }
}

Json exponent_to_json(const PNormExponent& exponent) {
  if (exponent.is_finite()) return Json(exponent.value());
  return Json(exponent.to_string());
}

PNormExponent exponent_from_json(const Json& value) {
  if (value.is_string()) {
    const auto text = value.get<std::string>();
    if (text == "zero") return PNormExponent::zero();
    if (text == "infinity") return PNormExponent::infinity();
    throw Error(ErrorKind::InvalidFile, "unknown exponent \"" + text + "\"");
  }
  return PNormExponent::finite(value.get<double>());
}

Termination termination_from_string(const std::string& text) {
  if (text == to_string(Termination::ObjectiveMet)) return Termination::ObjectiveMet;
  if (text == to_string(Termination::IterCap)) return Termination::IterCap;
  throw Error(ErrorKind::InvalidFile, "unknown termination cause \"" + text + "\"");
}

}  // namespace

std::string serialize_instance(const InstanceFile& file) {
  const DesignInstance& inst = file.instance;
  Json j;
  j["schema_version"] = file.schema_version;
  j["d"] = inst.d();
  j["n"] = inst.n();
  j["k"] = inst.k;
  j["p"] = exponent_to_json(inst.exponent);
  j["epsilon"] = inst.epsilon;
  Json rows = Json::array();
  for (int i = 0; i < inst.n(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < inst.d(); ++c) row.push_back(inst.vectors(i, c));
    rows.push_back(std::move(row));
  }
  j["vectors"] = std::move(rows);
  if (file.generator) {
    j["generator"] = {{"distribution", file.generator->distribution},
                      {"seed", file.generator->seed}};
  }
  return to_text(j);
}

InstanceFile parse_instance(std::string_view text) {
  const Json j = parse_json(text, "instance file");
  return with_file_errors("instance file", [&] {
    InstanceFile file;
    file.schema_version = j.at("schema_version").get<int>();
    if (file.schema_version != kSchemaVersion) {
      throw Error(ErrorKind::InvalidFile,
                  "unsupported schema_version " + std::to_string(file.schema_version));
    }
    const int d = j.at("d").get<int>();
    const int n = j.at("n").get<int>();
    const Json& rows = j.at("vectors");
    if (d < 1 || n < 1 || static_cast<int>(rows.size()) != n) {
      throw Error(ErrorKind::InvalidFile, "vectors must hold n rows with d >= 1");
    }
    file.instance.vectors.resize(n, d);
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rows[i].size()) != d) {
        throw Error(ErrorKind::InvalidFile, "row " + std::to_string(i) + " does not have d entries");
      }
      for (int c = 0; c < d; ++c) file.instance.vectors(i, c) = rows[i][c].get<double>();
    }
    file.instance.k = j.at("k").get<int>();
    file.instance.exponent = exponent_from_json(j.at("p"));
    file.instance.epsilon = j.at("epsilon").get<double>();
    if (j.contains("generator")) {
      const Json& g = j.at("generator");
      file.generator = GeneratorInfo{g.at("distribution").get<std::string>(),
                                     g.at("seed").get<std::uint64_t>()};
    }
    return file;
  });
}

std::string digest_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

std::string instance_digest(const InstanceFile& file) {
  return digest_hex(serialize_instance(file));
}

std::string serialize_relaxation(const RelaxationArtifact& artifact) {
  const FractionalSolution& sol = artifact.solution;
  const OptimalityCertificate& cert = artifact.certificate;
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["instance_digest"] = artifact.instance_digest;
  j["p"] = artifact.exponent;
  j["k"] = artifact.k;
  j["tol"] = artifact.tol;
  j["max_iters"] = artifact.max_iters;
  j["objective"] = number_or_null(sol.objective);
  j["converged"] = sol.converged;
  j["stationarity"] = sol.stationarity;
  j["iterations"] = sol.iterations;
  j["fractional_support_size"] = sol.fractional_support.size();
  j["certificate"] = {{"passed", cert.passed},
                      {"max_violation", cert.max_violation},
                      {"threshold", cert.threshold},
                      {"tolerance", cert.tolerance},
                      {"worst_index", cert.worst_index},
                      {"checked", cert.checked}};
  Json x = Json::array();
  for (Eigen::Index i = 0; i < sol.x.size(); ++i) x.push_back(sol.x(i));
  j["x"] = std::move(x);
  return to_text(j);
}

RelaxationArtifact parse_relaxation(std::string_view text, const DesignInstance& instance) {
  const Json j = parse_json(text, "relaxation file");
  return with_file_errors("relaxation file", [&] {
    RelaxationArtifact artifact;
    artifact.instance_digest = j.at("instance_digest").get<std::string>();
    artifact.exponent = j.at("p").get<std::string>();
    artifact.k = j.at("k").get<int>();
    artifact.tol = j.at("tol").get<double>();
    artifact.max_iters = j.at("max_iters").get<int>();
    const Json& x = j.at("x");
    if (static_cast<int>(x.size()) != instance.n()) {
      throw Error(ErrorKind::InvalidFile, "relaxation x length does not match the instance");
    }
    Eigen::VectorXd weights(instance.n());
    for (int i = 0; i < instance.n(); ++i) weights(i) = x[i].get<double>();
    artifact.solution = make_solution(instance, weights);
    artifact.solution.converged = j.at("converged").get<bool>();
    artifact.solution.stationarity = j.at("stationarity").get<double>();
    artifact.solution.iterations = j.at("iterations").get<int>();
    artifact.certificate = certify_optimality(instance, artifact.solution);
    return artifact;
  });
}

bool run_succeeded(const RunOutcome& run, const ExchangeParams& params) {
  return run.termination == Termination::ObjectiveMet && run.ratio <= 1.0 + params.epsilon &&
         run.iterations <= params.iter_cap;
}

std::string serialize_report(const ReportFile& report) {
  Json j;
  j["schema_version"] = report.schema_version;
  j["instance_digest"] = report.instance_digest;
  j["d"] = report.d;
  j["n"] = report.n;
  j["k"] = report.k;
  if (report.original_k) j["original_k"] = *report.original_k;
  j["p"] = report.p;
  j["epsilon"] = report.epsilon;
  j["parameters"] = {{"gamma", report.params.gamma},     {"kappa", report.params.kappa},
                     {"M", report.params.big_m},         {"alpha", report.params.alpha},
                     {"iter_cap", report.params.iter_cap}};
  j["size_bound"] = report.size_bound;
  j["relaxation"] = {{"objective", number_or_null(report.relaxation_objective)},
                     {"certificate_passed", report.certificate_passed},
                     {"certificate_max_violation", report.certificate_max_violation},
                     {"tol", report.relax_tol},
                     {"max_iters", report.relax_max_iters},
                     {"fractional_support_size", report.fractional_support_size}};
  Json runs = Json::array();
  for (const RunOutcome& run : report.runs) {
    Json r;
    r["seed"] = run.seed;
    r["termination"] = to_string(run.termination);
    r["iterations"] = run.iterations;
    r["size"] = run.size;
    r["objective"] = number_or_null(run.objective);
    r["ratio"] = number_or_null(run.ratio);
    r["final_set"] = run.final_set;
    runs.push_back(std::move(r));
  }
  j["runs"] = std::move(runs);
  j["success_count"] = report.success_count;
  j["success_rate"] = report.success_rate;
  j["interrupted"] = report.interrupted;
  return to_text(j);
}

ReportFile parse_report(std::string_view text) {
  const Json j = parse_json(text, "report file");
  return with_file_errors("report file", [&] {
    ReportFile report;
    report.schema_version = j.at("schema_version").get<int>();
    report.instance_digest = j.at("instance_digest").get<std::string>();
    report.d = j.at("d").get<int>();
    report.n = j.at("n").get<int>();
    report.k = j.at("k").get<int>();
    if (j.contains("original_k")) report.original_k = j.at("original_k").get<int>();
    report.p = j.at("p").get<double>();
    report.epsilon = j.at("epsilon").get<double>();
    const Json& params = j.at("parameters");
    report.params.p = report.p;
    report.params.epsilon = report.epsilon;
    report.params.gamma = params.at("gamma").get<double>();
    report.params.kappa = params.at("kappa").get<double>();
    report.params.big_m = params.at("M").get<double>();
    report.params.alpha = params.at("alpha").get<double>();
    report.params.iter_cap = params.at("iter_cap").get<std::int64_t>();
    report.size_bound = j.at("size_bound").get<double>();
    const Json& relax = j.at("relaxation");
    report.relaxation_objective = number_or_inf(relax.at("objective"));
    report.certificate_passed = relax.at("certificate_passed").get<bool>();
    report.certificate_max_violation = relax.at("certificate_max_violation").get<double>();
    report.relax_tol = relax.at("tol").get<double>();
    report.relax_max_iters = relax.at("max_iters").get<int>();
    report.fractional_support_size = relax.at("fractional_support_size").get<int>();
    for (const Json& r : j.at("runs")) {
      RunOutcome run;
      run.seed = r.at("seed").get<std::uint64_t>();
      run.termination = termination_from_string(r.at("termination").get<std::string>());
      run.iterations = r.at("iterations").get<std::int64_t>();
      run.size = r.at("size").get<int>();
      run.objective = number_or_inf(r.at("objective"));
      run.ratio = number_or_inf(r.at("ratio"));
      run.final_set = r.at("final_set").get<std::vector<int>>();
      report.runs.push_back(std::move(run));
    }
    report.success_count = j.at("success_count").get<int>();
    report.success_rate = j.at("success_rate").get<double>();
    report.interrupted = j.at("interrupted").get<bool>();
    return report;
  });
}

std::string serialize_trace_record(const SwapRecord& record) {
  Json j;
  j["t"] = record.t;
  j["c_t"] = record.c_t;
  j["i_t"] = record.i_t >= 0 ? Json(record.i_t) : Json(nullptr);
  j["j_t"] = record.j_t >= 0 ? Json(record.j_t) : Json(nullptr);
  j["restricted_size"] = record.restricted_size;
  j["y_pd"] = record.y_pd;
  j["gain"] = record.gain;
  j["loss"] = record.loss;
  j["progress"] = record.progress;
  j["lambda_min_z"] = record.lambda_min_z;
  j["objective"] = number_or_null(record.objective);
  j["removed_leverage"] = record.removed_leverage;
  j["removed_action_score"] = record.removed_action_score;
  return j.dump();
}

SwapRecord parse_trace_record(std::string_view line) {
  const Json j = parse_json(line, "trace record");
  return with_file_errors("trace record", [&] {
    SwapRecord record;
    record.t = j.at("t").get<std::int64_t>();
    record.c_t = j.at("c_t").get<double>();
    record.i_t = j.at("i_t").is_null() ? -1 : j.at("i_t").get<int>();
    record.j_t = j.at("j_t").is_null() ? -1 : j.at("j_t").get<int>();
    record.restricted_size = j.at("restricted_size").get<int>();
    record.y_pd = j.at("y_pd").get<bool>();
    record.gain = j.at("gain").get<double>();
    record.loss = j.at("loss").get<double>();
    record.progress = j.at("progress").get<double>();
    record.lambda_min_z = j.at("lambda_min_z").get<double>();
    record.objective = number_or_inf(j.at("objective"));
    record.removed_leverage = j.at("removed_leverage").get<double>();
    record.removed_action_score = j.at("removed_action_score").get<double>();
    return record;
  });
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidFile, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::InvalidFile, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::InvalidFile, "write failed for " + path.string());
}

}  // namespace pdesign
