#pragma once

// Reproducible Monte Carlo experiments: flat key=value configs, a deterministic parallel
// trial runner with batch checkpoints, and CSV / JSON / SVG outputs.
//
// Work item i of a run is (n_list[i / trials], trial i % trials). Trial t of size n draws
// its pencil from the Philox stream (master_seed, t), so every statistic is recomputable
// from the config alone and does not depend on the worker count or on resumption.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcross/crossings.hpp"
#include "lcross/ensembles.hpp"
#include "lcross/error.hpp"
#include "lcross/geometry.hpp"
#include "lcross/laws.hpp"
#include "lcross/parallel.hpp"
#include "lcross/pencil_core.hpp"
#include "lcross/stats.hpp"
#include "lcross/svg.hpp"

namespace lcross {

inline constexpr const char* kSoftwareVersion = "1.0.0";
inline constexpr int kDefaultMaxN = 25;
inline constexpr double kMaxDeficitRate = 0.005;
inline constexpr const char* kOutputDirEnv = "LCROSS_OUTPUT_DIR";

using json = nlohmann::json;

enum class ExperimentKind {
  Uniformity,
  Gue2Law,
  GoeHq,
  SrScan,
  LtScan,
  UclCheck,
  NearReal,
  EnergyTable,
  PsiProfile,
  AbsYProfile
};

inline const std::vector<std::pair<ExperimentKind, std::string_view>>& experiment_names() {
  static const std::vector<std::pair<ExperimentKind, std::string_view>> names = {
      {ExperimentKind::Uniformity, "uniformity"},   {ExperimentKind::Gue2Law, "gue2-law"},
      {ExperimentKind::GoeHq, "goe-hq"},            {ExperimentKind::SrScan, "sr-scan"},
      {ExperimentKind::LtScan, "lt-scan"},          {ExperimentKind::UclCheck, "ucl-check"},
      {ExperimentKind::NearReal, "near-real"},      {ExperimentKind::EnergyTable, "energy-table"},
      {ExperimentKind::PsiProfile, "psi-profile"},  {ExperimentKind::AbsYProfile, "absY-profile"}};
  return names;
}

inline std::string_view to_string(ExperimentKind k) {
  for (const auto& [kind, name] : experiment_names())
    if (kind == k) return name;
  return "?";
}

inline ExperimentKind parse_experiment_kind(std::string_view s) {
  for (const auto& [kind, name] : experiment_names())
    if (name == s) return kind;
  throw InvalidArgument("unknown experiment '" + std::string(s) + "'");
}

inline bool needs_crossings(ExperimentKind k) {
  return k == ExperimentKind::Uniformity || k == ExperimentKind::Gue2Law || k == ExperimentKind::NearReal ||
         k == ExperimentKind::PsiProfile || k == ExperimentKind::AbsYProfile;
}

// ---------------------------------------------------------------------------
// Configuration.

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::Uniformity;
  EnsembleSpec ensemble;
  std::vector<int> n_list{2};
  std::size_t trials = 100;
  std::uint64_t master_seed = 1;
  SolverOptions solver;
  std::string solver_method = "aberth";
  std::string output_dir;
  unsigned threads = 0;
  std::size_t batch_size = 256;
  bool allow_large_n = false;
  bool write_crossings = true;
  std::map<std::string, std::string> params;  // experiment-specific keys
};

struct ParamSpec {
  std::string key;
  std::string default_value;
};

/// Experiment-specific keys and their defaults. Keys outside this list are rejected.
inline std::vector<ParamSpec> param_schema(ExperimentKind k) {
  const std::vector<ParamSpec> chart = {{"lambda_re", "0"}, {"lambda_im", "0"}, {"sigma", "1"}};
  auto with_chart = [&](std::vector<ParamSpec> v) {
    v.insert(v.end(), chart.begin(), chart.end());
    return v;
  };
  switch (k) {
    case ExperimentKind::Uniformity: return {{"ks_threshold", "0.01"}};
    case ExperimentKind::Gue2Law:
      return {{"ks_threshold", "0.02"}, {"low_band", "0.02"}, {"low_mass_max", "0.002"}, {"cdf_nodes", "2049"}};
    case ExperimentKind::GoeHq: return {{"q_grid", "0.2,0.5,0.8"}, {"max_se", "2"}};
    case ExperimentKind::SrScan:
      return with_chart({{"r_list", "0.05,0.1"},
                         {"big_r", "2"},
                         {"eps", "0.05"},
                         {"ratio_min", "2.8"},
                         {"ratio_max", "5.7"},
                         {"sr_factor", "3"}});
    case ExperimentKind::LtScan: return with_chart({{"big_r", "3"}, {"lt_max", "0.001"}});
    case ExperimentKind::UclCheck: return with_chart({{"ucl_max", "0.02"}});
    case ExperimentKind::NearReal: return {{"eps", "0.05"}, {"real_tol", "1e-8"}};
    case ExperimentKind::EnergyTable:
      return {{"q_eps", "0.05"},   {"q_points", "20"},     {"tol", "1e-5"},       {"fine_factor", "10"},
              {"agree_tol", "1e-3"}, {"g0_target", "-0.25"}, {"g0_tol", "1e-3"}};
    case ExperimentKind::PsiProfile:
      return {{"energy_table", ""}, {"q_eps", "0.03"}, {"q_points", "20"}, {"tol", "1e-5"},
              {"y_min", "0.2"},     {"y_max", "0.9"},  {"bins", "10"},     {"max_se", "3"}};
    case ExperimentKind::AbsYProfile: return {{"curve_points", "101"}};
  }
  return {};
}

namespace detail {

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = s.find(',', start);
    std::string item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected a number, got '" + v + "'");
}

inline long long to_integer(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used, 0);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected an integer, got '" + v + "'");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw InvalidArgument("negative");
    const unsigned long long d = std::stoull(v, &used, 0);
    if (trim(v.substr(used)).empty()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "': expected an unsigned 64-bit integer, got '" + v + "'");
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidArgument("config key '" + key + "': expected true/false, got '" + v + "'");
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

inline std::string param_string(const ExperimentConfig& c, const std::string& key) {
  for (const auto& p : param_schema(c.experiment))
    if (p.key == key) {
      const auto it = c.params.find(key);
      return it == c.params.end() ? p.default_value : it->second;
    }
  throw InvalidArgument("experiment " + std::string(to_string(c.experiment)) + " has no parameter '" + key + "'");
}

inline double param_double(const ExperimentConfig& c, const std::string& key) {
  return detail::to_double(key, param_string(c, key));
}

inline int param_int(const ExperimentConfig& c, const std::string& key) {
  return static_cast<int>(detail::to_integer(key, param_string(c, key)));
}

inline std::vector<double> param_list(const ExperimentConfig& c, const std::string& key) {
  std::vector<double> out;
  for (const auto& s : detail::split_list(param_string(c, key))) out.push_back(detail::to_double(key, s));
  return out;
}

inline void set_config_key(ExperimentConfig& c, const std::string& key, const std::string& value,
                           std::map<std::string, std::string>& extra) {
  using detail::to_double;
  using detail::to_integer;
  if (key == "experiment") c.experiment = parse_experiment_kind(value);
  else if (key == "ensemble") c.ensemble.kind = parse_ensemble_kind(value);
  else if (key == "n_list" || key == "n") {
    c.n_list.clear();
    for (const auto& s : detail::split_list(value)) c.n_list.push_back(static_cast<int>(to_integer(key, s)));
  } else if (key == "trials") {
    const long long t = to_integer(key, value);
    if (t < 1) throw InvalidArgument("trials must be >= 1");
    c.trials = static_cast<std::size_t>(t);
  } else if (key == "master_seed") c.master_seed = detail::to_u64(key, value);
  else if (key == "threads") c.threads = static_cast<unsigned>(std::max(0LL, to_integer(key, value)));
  else if (key == "output_dir") c.output_dir = value;
  else if (key == "batch_size") c.batch_size = static_cast<std::size_t>(std::max(1LL, to_integer(key, value)));
  else if (key == "allow_large_n") c.allow_large_n = detail::to_bool(key, value);
  else if (key == "write_crossings") c.write_crossings = detail::to_bool(key, value);
  else if (key == "diag_variance") c.ensemble.diag_variance = to_double(key, value);
  else if (key == "scale") c.ensemble.scale = to_double(key, value);
  else if (key == "mu") c.ensemble.mu = parse_entry_law(value);
  else if (key == "nu") c.ensemble.nu = parse_entry_law(value);
  else if (key == "entry_law") c.ensemble.entry_law = parse_entry_law(value);
  else if (key == "subspace") c.ensemble.subspace = parse_subspace_kind(value);
  else if (key == "band") c.ensemble.band = static_cast<int>(to_integer(key, value));
  else if (key == "solver.method") c.solver_method = value;
  else if (key == "solver.max_iters") c.solver.max_iters = static_cast<int>(to_integer(key, value));
  else if (key == "solver.step_tol") c.solver.step_tol = to_double(key, value);
  else if (key == "solver.accept_tol") c.solver.accept_tol = to_double(key, value);
  else if (key == "solver.restarts") c.solver.restarts = static_cast<int>(to_integer(key, value));
  else if (key == "solver.infinity_radius") c.solver.infinity_radius = to_double(key, value);
  else if (key == "solver.infinity_steps") c.solver.infinity_steps = static_cast<int>(to_integer(key, value));
  else if (key == "solver.merge_tol") c.solver.merge_tol = to_double(key, value);
  else extra[key] = value;
}

/// Parses the flat format: one `key = value` per line, `#` starts a comment, lists are
/// comma separated. Experiment-specific keys are checked against param_schema.
inline ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig c;
  std::map<std::string, std::string> extra;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw InvalidArgument("config line " + std::to_string(lineno) + ": empty key");
    set_config_key(c, key, value, extra);
  }
  const auto schema = param_schema(c.experiment);
  for (const auto& [k, v] : extra) {
    bool known = false;
    for (const auto& p : schema) known = known || p.key == k;
    if (!known)
      throw InvalidArgument("unknown config key '" + k + "' for experiment " + std::string(to_string(c.experiment)));
    c.params[k] = v;
  }
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config file " + path);
  return parse_config(f);
}

/// Canonical text of everything that determines results (worker count, batch size and
/// output location excluded). Parsing it back yields an equivalent config.
inline std::string canonical_config_text(const ExperimentConfig& c) {
  using detail::fmt;
  std::ostringstream os;
  os << "experiment = " << to_string(c.experiment) << '\n';
  os << "ensemble = " << to_string(c.ensemble.kind) << '\n';
  os << "n_list = ";
  for (std::size_t i = 0; i < c.n_list.size(); ++i) os << (i ? "," : "") << c.n_list[i];
  os << '\n';
  os << "trials = " << c.trials << '\n';
  os << "master_seed = " << c.master_seed << '\n';
  os << "diag_variance = " << fmt(c.ensemble.diag_variance) << '\n';
  os << "scale = " << fmt(c.ensemble.scale) << '\n';
  os << "mu = " << to_string(c.ensemble.mu) << '\n';
  os << "nu = " << to_string(c.ensemble.nu) << '\n';
  os << "entry_law = " << to_string(c.ensemble.entry_law) << '\n';
  os << "subspace = " << to_string(c.ensemble.subspace) << '\n';
  os << "band = " << c.ensemble.band << '\n';
  os << "allow_large_n = " << (c.allow_large_n ? "true" : "false") << '\n';
  os << "solver.method = " << c.solver_method << '\n';
  os << "solver.max_iters = " << c.solver.max_iters << '\n';
  os << "solver.step_tol = " << fmt(c.solver.step_tol) << '\n';
  os << "solver.accept_tol = " << fmt(c.solver.accept_tol) << '\n';
  os << "solver.restarts = " << c.solver.restarts << '\n';
  os << "solver.infinity_radius = " << fmt(c.solver.infinity_radius) << '\n';
  os << "solver.infinity_steps = " << c.solver.infinity_steps << '\n';
  os << "solver.merge_tol = " << fmt(c.solver.merge_tol) << '\n';
  for (const auto& p : param_schema(c.experiment)) os << p.key << " = " << param_string(c, p.key) << '\n';
  return os.str();
}

/// Full config text including the run-local keys.
inline std::string config_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << canonical_config_text(c);
  os << "threads = " << c.threads << '\n';
  os << "batch_size = " << c.batch_size << '\n';
  os << "write_crossings = " << (c.write_crossings ? "true" : "false") << '\n';
  if (!c.output_dir.empty()) os << "output_dir = " << c.output_dir << '\n';
  return os.str();
}

inline std::string config_hash(const ExperimentConfig& c) { return detail::hex64(detail::fnv1a(canonical_config_text(c))); }

/// Checks every parameter before any sampling happens.
inline void validate_config(const ExperimentConfig& c) {
  if (c.trials < 1) throw InvalidArgument("trials must be >= 1");
  if (c.n_list.empty()) throw InvalidArgument("n_list must be nonempty");
  const bool crossings = needs_crossings(c.experiment);
  for (int n : c.n_list) {
    if (n < 2) throw InvalidArgument("every n must be >= 2 for pencil experiments");
    if (crossings && n > kDefaultMaxN && !c.allow_large_n)
      throw InvalidArgument("n=" + std::to_string(n) + " exceeds the desk-scale cap of " +
                            std::to_string(kDefaultMaxN) + " (set allow_large_n = true to override)");
    EnsembleSpec s = c.ensemble;
    s.n = n;
    validate(s);
  }
  if (c.solver_method != "aberth" && c.solver_method != "interp")
    throw InvalidArgument("solver.method must be aberth or interp");
  if (c.solver_method == "interp")
    for (int n : c.n_list)
      if (n > 12) throw InvalidArgument("solver.method = interp is limited to n <= 12");
  if (c.solver.max_iters < 1 || c.solver.restarts < 0 || !(c.solver.step_tol > 0.0) || !(c.solver.accept_tol > 0.0))
    throw InvalidArgument("invalid solver options");
  for (const auto& p : param_schema(c.experiment)) {
    const std::string v = param_string(c, p.key);
    if (p.key == "energy_table") continue;
    if (p.key == "q_grid" || p.key == "r_list") {
      if (param_list(c, p.key).empty()) throw InvalidArgument(p.key + " must be nonempty");
    } else {
      detail::to_double(p.key, v);
    }
  }
  switch (c.experiment) {
    case ExperimentKind::GoeHq:
      for (double q : param_list(c, "q_grid")) generic_representative(q);
      break;
    case ExperimentKind::SrScan:
      for (double r : param_list(c, "r_list"))
        if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("r_list entries must lie in (0,1)");
      if (!(param_double(c, "big_r") > 1.0)) throw InvalidArgument("big_r must exceed 1");
      if (!(param_double(c, "eps") > 0.0 && param_double(c, "eps") < 1.0)) throw InvalidArgument("eps must lie in (0,1)");
      break;
    case ExperimentKind::LtScan:
      if (!(param_double(c, "big_r") > 1.0)) throw InvalidArgument("big_r must exceed 1");
      break;
    case ExperimentKind::NearReal:
      if (!(param_double(c, "eps") > 0.0)) throw InvalidArgument("eps must be positive");
      for (std::size_t i = 1; i < c.n_list.size(); ++i)
        if (c.n_list[i] <= c.n_list[i - 1]) throw InvalidArgument("near-real needs an increasing n_list");
      break;
    case ExperimentKind::EnergyTable:
    case ExperimentKind::PsiProfile: {
      const double eps = param_double(c, "q_eps");
      if (!(eps > 0.0 && eps < 1.0) || param_int(c, "q_points") < 2 || !(param_double(c, "tol") > 0.0))
        throw InvalidArgument("invalid energy table grid parameters");
      if (c.experiment == ExperimentKind::PsiProfile) {
        const double lo = param_double(c, "y_min"), hi = param_double(c, "y_max");
        if (!(lo > 0.0 && hi > lo && hi <= 1.0) || param_int(c, "bins") < 1)
          throw InvalidArgument("psi-profile needs 0 < y_min < y_max <= 1 and bins >= 1");
        if (param_string(c, "energy_table").empty() && 1.0 - lo * lo > 1.0 - eps)
          throw InvalidArgument("psi-profile: y_min lies outside the energy table coverage (raise y_min or lower q_eps)");
      }
      break;
    }
    case ExperimentKind::Gue2Law:
      if (param_int(c, "cdf_nodes") < 2) throw InvalidArgument("cdf_nodes must be >= 2");
      break;
    case ExperimentKind::AbsYProfile:
      if (param_int(c, "curve_points") < 2) throw InvalidArgument("curve_points must be >= 2");
      break;
    default: break;
  }
}

// ---------------------------------------------------------------------------
// Per-trial results and checkpoints.

struct TrialResult {
  std::vector<CrossingPoint> points;
  std::vector<double> values;  // NaN marks a discarded sample
  bool deficit = false;
  std::string error;
};

inline json to_json(const TrialResult& r) {
  json pts = json::array();
  for (const auto& p : r.points)
    pts.push_back({p.lambda.at_infinity ? 0.0 : p.lambda.value.real(), p.lambda.at_infinity ? 0.0 : p.lambda.value.imag(),
                   p.lambda.at_infinity ? 1 : 0, p.multiplicity, p.residual, p.iterations});
  json vals = json::array();
  for (double v : r.values) vals.push_back(std::isfinite(v) ? json(v) : json(nullptr));
  json j = {{"p", pts}, {"v", vals}, {"d", r.deficit}};
  if (!r.error.empty()) j["e"] = r.error;
  return j;
}

inline TrialResult trial_from_json(const json& j) {
  TrialResult r;
  for (const auto& p : j.at("p")) {
    CrossingPoint c;
    const bool inf = p.at(2).get<int>() != 0;
    c.lambda = inf ? ProjectivePoint::infinity() : ProjectivePoint{Complex{p.at(0).get<double>(), p.at(1).get<double>()}};
    c.multiplicity = p.at(3).get<int>();
    c.residual = p.at(4).get<double>();
    c.iterations = p.at(5).get<int>();
    r.points.push_back(c);
  }
  for (const auto& v : j.at("v")) r.values.push_back(v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>());
  r.deficit = j.at("d").get<bool>();
  if (j.contains("e")) r.error = j.at("e").get<std::string>();
  return r;
}

/// Appends completed trials as JSON lines; a truncated final line (crash mid-write) is
/// ignored on load, so the affected trials are simply recomputed.
class Checkpoint {
 public:
  explicit Checkpoint(std::filesystem::path path) : path_(std::move(path)) {}

  const std::filesystem::path& path() const { return path_; }

  std::map<std::size_t, TrialResult> load() const {
    std::map<std::size_t, TrialResult> out;
    std::ifstream f(path_);
    if (!f) return out;
    std::string line;
    while (std::getline(f, line)) {
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        out[j.at("i").get<std::size_t>()] = trial_from_json(j.at("r"));
      } catch (const std::exception&) {
        continue;
      }
    }
    return out;
  }

  void append(const std::vector<std::pair<std::size_t, const TrialResult*>>& batch) {
    std::ofstream f(path_, std::ios::app);
    if (!f) throw IoError("cannot open checkpoint " + path_.string());
    for (const auto& [i, r] : batch) f << json{{"i", i}, {"r", to_json(*r)}}.dump() << '\n';
    f.flush();
    if (!f) throw IoError("checkpoint write failed: " + path_.string());
  }

  void remove() const {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Records.

struct Verdict {
  std::string name;
  bool asserted = true;  // false: reported observation only
  bool passed = true;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct TrialSummary {
  int n = 0;
  std::size_t trial = 0;
  int crossing_count = 0;
  double max_residual = 0.0;
  bool deficit = false;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
    return os.str();
  }
};

struct RunRecord {
  ExperimentConfig config;
  std::string config_hash;
  std::string version = kSoftwareVersion;
  double wall_seconds = 0.0;
  std::size_t resumed_items = 0;
  std::size_t deficits = 0;
  std::vector<TrialSummary> trials;
  CsvTable statistics;
  json aggregates = json::object();  // named statistics and figure data
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;

  bool all_passed() const {
    for (const auto& v : verdicts)
      if (v.asserted && !v.passed) return false;
    return true;
  }
};

inline json to_json(const Verdict& v) {
  return {{"name", v.name},
          {"asserted", v.asserted},
          {"passed", v.passed},
          {"value", std::isfinite(v.value) ? json(v.value) : json(nullptr)},
          {"threshold", v.threshold},
          {"detail", v.detail}};
}

inline json verdict_json(const RunRecord& r) {
  json vs = json::array();
  for (const auto& v : r.verdicts) vs.push_back(to_json(v));
  return {{"experiment", std::string(to_string(r.config.experiment))},
          {"config_hash", r.config_hash},
          {"version", r.version},
          {"master_seed", r.config.master_seed},
          {"all_passed", r.all_passed()},
          {"deficits", r.deficits},
          {"verdicts", vs}};
}

inline json record_json(const RunRecord& r) {
  json j = verdict_json(r);
  j["config"] = canonical_config_text(r.config);
  j["resumed_items"] = r.resumed_items;
  j["wall_seconds"] = r.wall_seconds;
  json ts = json::array();
  for (const auto& t : r.trials)
    ts.push_back({{"n", t.n}, {"trial", t.trial}, {"count", t.crossing_count}, {"max_residual", t.max_residual},
                  {"deficit", t.deficit}});
  j["trials"] = ts;
  j["aggregates"] = r.aggregates;
  return j;
}

// ---------------------------------------------------------------------------
// Trial evaluation.

namespace detail {

struct RunContext {
  const ExperimentConfig& config;
  std::vector<TestFunction> ucl_dictionary;
  std::vector<double> r_list, q_grid;
  std::vector<Complex> axis_reps, generic_reps;
  Complex lambda{0.0, 0.0};
  double sigma = 1.0;
};

inline EnsembleSpec spec_for(const ExperimentConfig& c, int n) {
  EnsembleSpec s = c.ensemble;
  s.n = n;
  return s;
}

inline TrialResult evaluate_item(const RunContext& ctx, std::size_t item) {
  const ExperimentConfig& c = ctx.config;
  const int n = c.n_list[item / c.trials];
  const EnsembleSpec spec = spec_for(c, n);
  // Streams are indexed by the global item so blocks for different n are independent.
  const std::size_t items = c.n_list.size() * c.trials;
  TrialResult r;
  if (needs_crossings(c.experiment)) {
    const Pencil p = sample_pencil(spec, c.master_seed, item);
    try {
      CrossingSet cs;
      if (c.solver_method == "interp") {
        InterpOptions io;
        io.polish = true;
        cs = solve_crossings_interp(p, 1.0, io);
      } else {
        cs = solve_crossings(p, c.solver);
      }
      r.points = std::move(cs.points);
    } catch (const NumericalError& e) {
      r.deficit = true;
      r.error = e.what();
    }
    return r;
  }
  switch (c.experiment) {
    case ExperimentKind::GoeHq: {
      const double pairs = pair_count(static_cast<std::size_t>(n));
      for (std::size_t qi = 0; qi < ctx.q_grid.size(); ++qi) {
        for (int side = 0; side < 2; ++side) {
          const Complex l = side == 0 ? ctx.axis_reps[qi] : ctx.generic_reps[qi];
          const std::uint64_t idx = (2 * qi + static_cast<std::size_t>(side)) * items + item;
          const LogDisc ld = log_discriminant(sample_pencil(spec, c.master_seed, idx), l);
          r.values.push_back(ld.finite ? ld.log_abs / pairs : std::numeric_limits<double>::quiet_NaN());
        }
      }
      break;
    }
    case ExperimentKind::SrScan: {
      const auto z = normalized_eigenvalues(sample_pencil(spec, c.master_seed, item), ctx.lambda, ctx.sigma);
      const double big_r = param_double(c, "big_r"), eps = param_double(c, "eps");
      for (double rr : ctx.r_list) {
        r.values.push_back(small_gap_count(z, rr, big_r));
        r.values.push_back(small_gap_count(z, rr / 2.0, big_r));
      }
      r.values.push_back(sr_functional(z, eps));
      r.values.push_back(sr_functional(z, eps / 2.0));
      break;
    }
    case ExperimentKind::LtScan: {
      const auto z = normalized_eigenvalues(sample_pencil(spec, c.master_seed, item), ctx.lambda, ctx.sigma);
      r.values.push_back(lt_functional(z, param_double(c, "big_r")));
      break;
    }
    case ExperimentKind::UclCheck: {
      const auto z = normalized_eigenvalues(sample_pencil(spec, c.master_seed, item), ctx.lambda, ctx.sigma);
      r.values.push_back(ucl_discrepancy(z, ctx.ucl_dictionary));
      for (const auto& f : ctx.ucl_dictionary) {
        double s = 0.0;
        for (const auto& p : z) s += f.f(p);
        r.values.push_back(s / static_cast<double>(z.size()) - f.circular_integral);
      }
      break;
    }
    default: break;
  }
  return r;
}

inline CrossingSet as_set(const TrialResult& r, int n) {
  CrossingSet s;
  s.n = n;
  s.points = r.points;
  for (const auto& p : r.points) s.total_count += p.multiplicity;
  return s;
}

inline std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return g;
}

/// Empirical CDF of `sorted` at t.
inline double ecdf(const std::vector<double>& sorted, double t) {
  return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) /
         static_cast<double>(sorted.size());
}

inline Verdict verdict_below(std::string name, double value, double threshold, bool asserted = true) {
  Verdict v;
  v.name = std::move(name);
  v.asserted = asserted;
  v.value = value;
  v.threshold = threshold;
  v.passed = value < threshold;
  return v;
}

// ---------------------------------------------------------------------------
// Aggregation, one function per experiment.

struct Aggregation {
  RunRecord& rec;
  const RunContext& ctx;
  const std::vector<TrialResult>& results;

  const ExperimentConfig& c() const { return ctx.config; }

  /// Crossing measure of all trials of n_list[ni].
  EmpiricalMeasure measure(std::size_t ni) const {
    EmpiricalMeasure m;
    for (std::size_t t = 0; t < c().trials; ++t) {
      const auto& r = results[ni * c().trials + t];
      for (const auto& p : r.points) m.add(to_sphere(p.lambda), p.multiplicity);
    }
    return m;
  }

  std::size_t deficits_for(std::size_t ni) const {
    std::size_t d = 0;
    for (std::size_t t = 0; t < c().trials; ++t) d += results[ni * c().trials + t].deficit ? 1 : 0;
    return d;
  }

  double max_residual_for(std::size_t ni) const {
    double m = 0.0;
    for (std::size_t t = 0; t < c().trials; ++t)
      for (const auto& p : results[ni * c().trials + t].points)
        if (!p.lambda.at_infinity) m = std::max(m, p.residual);
    return m;
  }

  void uniformity() {
    const double thr = param_double(c(), "ks_threshold");
    rec.statistics.header = {"n", "trials", "crossings", "deficits", "ks_z", "ks_phi", "max_residual"};
    json figs = json::array();
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      const auto m = measure(ni);
      const auto zs = m.heights();
      const double ks_z = ks_statistic(zs, [](double x) { return uniform_cdf(x, -1.0, 1.0); });
      const double ks_phi = ks_statistic(m.azimuth_fractions(), [](double x) { return uniform_cdf(x, 0.0, 1.0); });
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), std::to_string(m.total_weight),
                          std::to_string(deficits_for(ni)), fmt(ks_z), fmt(ks_phi), fmt(max_residual_for(ni))});
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " KS(Z) vs Uniform[-1,1]", ks_z, thr));
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " KS(phi/2pi) vs Uniform[0,1]", ks_phi, thr));
      json scatter = {{"x", json::array()}, {"y", json::array()}, {"z", json::array()}};
      for (std::size_t i = 0; i < m.samples.size() && i < 4000; ++i) {
        scatter["x"].push_back(m.samples[i].x);
        scatter["y"].push_back(m.samples[i].y);
        scatter["z"].push_back(m.samples[i].z);
      }
      const int bins = 20;
      const auto h = histogram_fractions(zs, -1.0, 1.0 + 1e-12, bins, static_cast<double>(zs.size()) * (2.0 / bins));
      json centers = json::array();
      for (int b = 0; b < bins; ++b) centers.push_back(-1.0 + (b + 0.5) * 2.0 / bins);
      figs.push_back({{"n", n}, {"ks_z", ks_z}, {"ks_phi", ks_phi}, {"scatter", scatter},
                      {"z_hist", {{"center", centers}, {"density", h}}}});
    }
    rec.aggregates["uniformity"] = figs;
  }

  void gue2_law() {
    const double thr = param_double(c(), "ks_threshold"), band = param_double(c(), "low_band"),
                 band_max = param_double(c(), "low_mass_max");
    const TabulatedCdf cdf(checked(lcross::gue2_law()), param_int(c(), "cdf_nodes"));
    rec.statistics.header = {"n", "trials", "crossings", "deficits", "ks_absY", "mass_low_band", "max_residual"};
    json figs = json::array();
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      auto ys = measure(ni).abs_y();
      const double ks = ks_statistic(ys, [&](double t) { return cdf(t); });
      std::sort(ys.begin(), ys.end());
      const double low = static_cast<double>(std::lower_bound(ys.begin(), ys.end(), band) - ys.begin()) /
                         static_cast<double>(ys.size());
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), std::to_string(ys.size()),
                          std::to_string(deficits_for(ni)), fmt(ks), fmt(low), fmt(max_residual_for(ni))});
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " KS(|Y|) vs GUE2 law", ks, thr));
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " mass of |Y| < " + fmt_short(band), low, band_max));
      json curve = {{"t", json::array()}, {"empirical", json::array()}, {"theory", json::array()}};
      for (double t : grid(0.0, 1.0, 101)) {
        curve["t"].push_back(t);
        curve["empirical"].push_back(ecdf(ys, t));
        curve["theory"].push_back(cdf(t));
      }
      figs.push_back({{"n", n}, {"ks", ks}, {"low_mass", low}, {"cdf", curve}});
    }
    rec.aggregates["gue2"] = figs;
  }

  void goe_hq() {
    const double max_se = param_double(c(), "max_se");
    rec.statistics.header = {"n",        "q",       "lambda_axis_im", "lambda_generic_re", "lambda_generic_im",
                             "H_axis",   "se_axis", "H_generic",      "se_generic",        "discrepancy",
                             "combined_se", "discarded"};
    json figs = json::array();
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      json rows = {{"q", json::array()}, {"H_axis", json::array()}, {"se_axis", json::array()},
                   {"H_generic", json::array()}, {"se_generic", json::array()}};
      double h_min = std::numeric_limits<double>::infinity(), h_max = -h_min, se_max = 0.0;
      for (std::size_t qi = 0; qi < ctx.q_grid.size(); ++qi) {
        MeanAccumulator acc[2];
        std::size_t discarded = 0;
        for (std::size_t t = 0; t < c().trials; ++t)
          for (int side = 0; side < 2; ++side) {
            const double v = results[ni * c().trials + t].values[2 * qi + static_cast<std::size_t>(side)];
            if (std::isfinite(v))
              acc[side].add(v);
            else
              ++discarded;
          }
        if (static_cast<double>(discarded) > 0.01 * 2.0 * static_cast<double>(c().trials))
          throw NumericalError("goe-hq: more than 1% of log-discriminant samples were degenerate");
        const Complex la = ctx.axis_reps[qi], lg = ctx.generic_reps[qi];
        const double ha = acc[0].mean() - 0.5 * std::log1p(std::norm(la));
        const double hg = acc[1].mean() - 0.5 * std::log1p(std::norm(lg));
        const double sa = acc[0].stderr_of_mean(), sg = acc[1].stderr_of_mean();
        const double disc = std::abs(ha - hg), comb = std::hypot(sa, sg);
        rec.statistics.add({std::to_string(n), fmt(ctx.q_grid[qi]), fmt(la.imag()), fmt(lg.real()), fmt(lg.imag()),
                            fmt(ha), fmt(sa), fmt(hg), fmt(sg), fmt(disc), fmt(comb), std::to_string(discarded)});
        Verdict v = verdict_below("n=" + std::to_string(n) + " q=" + fmt_short(ctx.q_grid[qi]) +
                                      " matched-q discrepancy / combined SE",
                                  comb > 0.0 ? disc / comb : 0.0, max_se);
        v.passed = disc <= max_se * comb;
        rec.verdicts.push_back(v);
        rows["q"].push_back(ctx.q_grid[qi]);
        rows["H_axis"].push_back(ha);
        rows["se_axis"].push_back(sa);
        rows["H_generic"].push_back(hg);
        rows["se_generic"].push_back(sg);
        h_min = std::min({h_min, ha, hg});
        h_max = std::max({h_max, ha, hg});
        se_max = std::max({se_max, sa, sg});
      }
      Verdict flat = verdict_below("n=" + std::to_string(n) + " spread of H_n(q) over the grid (reported)",
                                   h_max - h_min, 4.0 * se_max, false);
      flat.detail = "flatness in q is reported with error bars, not asserted";
      rec.verdicts.push_back(flat);
      figs.push_back({{"n", n}, {"rows", rows}});
    }
    rec.aggregates["hn"] = figs;
  }

  /// Mean and SE of column k of the per-trial values of n_list[ni].
  MeanAccumulator column(std::size_t ni, std::size_t k) const {
    MeanAccumulator acc;
    for (std::size_t t = 0; t < c().trials; ++t) acc.add(results[ni * c().trials + t].values[k]);
    return acc;
  }

  void sr_scan() {
    const double eps = param_double(c(), "eps"), lo = param_double(c(), "ratio_min"),
                 hi = param_double(c(), "ratio_max"), factor = param_double(c(), "sr_factor");
    rec.statistics.header = {"n", "trials", "quantity", "param", "mean", "stderr"};
    json figs = json::array();
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      const std::string tag = "n=" + std::to_string(n);
      json fig = {{"n", n}, {"r", json::array()}, {"count", json::array()}, {"se", json::array()}};
      for (std::size_t ri = 0; ri < ctx.r_list.size(); ++ri) {
        const double r = ctx.r_list[ri];
        const auto full = column(ni, 2 * ri), half = column(ni, 2 * ri + 1);
        for (const auto& [param, acc] : {std::pair{r, full}, std::pair{r / 2.0, half}}) {
          rec.statistics.add({std::to_string(n), std::to_string(c().trials), "small_gap_count", fmt(param),
                              fmt(acc.mean()), fmt(acc.stderr_of_mean())});
          fig["r"].push_back(param);
          fig["count"].push_back(acc.mean());
          fig["se"].push_back(acc.stderr_of_mean());
        }
        const double ratio = half.mean() > 0.0 ? full.mean() / half.mean() : std::numeric_limits<double>::infinity();
        Verdict v;
        v.name = tag + " small_gap_count(" + fmt_short(r) + ")/small_gap_count(" + fmt_short(r / 2.0) + ")";
        v.value = ratio;
        v.threshold = hi;
        v.passed = ratio >= lo && ratio <= hi;
        v.detail = "window [" + fmt_short(lo) + ", " + fmt_short(hi) + "]";
        rec.verdicts.push_back(v);
      }
      const std::size_t k = 2 * ctx.r_list.size();
      const auto sr = column(ni, k), sr_half = column(ni, k + 1);
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), "sr_functional", fmt(eps), fmt(sr.mean()),
                          fmt(sr.stderr_of_mean())});
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), "sr_functional", fmt(eps / 2.0),
                          fmt(sr_half.mean()), fmt(sr_half.stderr_of_mean())});
      const double prediction = eps * eps * std::abs(std::log(eps));
      rec.verdicts.push_back(verdict_below(tag + " sr_functional(" + fmt_short(eps) + ")", sr.mean(), factor * prediction));
      const double half_pred = (eps / 2.0) * (eps / 2.0) * std::abs(std::log(eps / 2.0));
      Verdict scaling = verdict_below(tag + " sr ratio (eps vs eps/2) relative to eps^2|log eps| (reported)",
                                      sr_half.mean() > 0.0 ? (sr.mean() / sr_half.mean()) / (prediction / half_pred) : 0.0,
                                      2.0, false);
      scaling.passed = scaling.value >= 0.5 && scaling.value <= 2.0;
      rec.verdicts.push_back(scaling);
      fig["sr"] = {sr.mean(), sr_half.mean()};
      figs.push_back(fig);
    }
    rec.aggregates["sr"] = figs;
  }

  void lt_scan() {
    const double big_r = param_double(c(), "big_r"), lt_max = param_double(c(), "lt_max");
    rec.statistics.header = {"n", "trials", "R", "mean", "stderr"};
    json figs = {{"n", json::array()}, {"mean", json::array()}, {"se", json::array()}};
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      const auto acc = column(ni, 0);
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), fmt(big_r), fmt(acc.mean()),
                          fmt(acc.stderr_of_mean())});
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " mean lt_functional(R=" + fmt_short(big_r) + ")",
                                           acc.mean(), lt_max));
      figs["n"].push_back(n);
      figs["mean"].push_back(acc.mean());
      figs["se"].push_back(acc.stderr_of_mean());
    }
    rec.aggregates["lt"] = figs;
  }

  void ucl_check() {
    const double ucl_max = param_double(c(), "ucl_max");
    rec.statistics.header = {"n", "trials", "function", "mean_deviation", "stderr"};
    json figs = {{"n", json::array()}, {"mean", json::array()}, {"se", json::array()}};
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      const auto disc = column(ni, 0);
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), "max", fmt(disc.mean()),
                          fmt(disc.stderr_of_mean())});
      for (std::size_t f = 0; f < ctx.ucl_dictionary.size(); ++f) {
        const auto acc = column(ni, f + 1);
        rec.statistics.add({std::to_string(n), std::to_string(c().trials), ctx.ucl_dictionary[f].name,
                            fmt(acc.mean()), fmt(acc.stderr_of_mean())});
      }
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " mean ucl_discrepancy", disc.mean(), ucl_max));
      figs["n"].push_back(n);
      figs["mean"].push_back(disc.mean());
      figs["se"].push_back(disc.stderr_of_mean());
    }
    rec.aggregates["ucl"] = figs;
  }

  void near_real() {
    const double eps = param_double(c(), "eps"), tol = param_double(c(), "real_tol");
    rec.statistics.header = {"n", "trials", "crossings", "deficits", "exactly_real_per_pair", "se_exactly",
                             "near_real_per_pair", "se_near"};
    std::vector<double> exact_means, near_means;
    json figs = {{"n", json::array()}, {"exactly", json::array()}, {"exactly_se", json::array()},
                 {"near", json::array()}, {"near_se", json::array()}};
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      const double pairs = pair_count(static_cast<std::size_t>(n));
      MeanAccumulator exact, near;
      long long total = 0;
      for (std::size_t t = 0; t < c().trials; ++t) {
        const auto& r = results[ni * c().trials + t];
        if (r.deficit) continue;
        const CrossingSet s = as_set(r, n);
        total += s.total_count;
        exact.add(static_cast<double>(exactly_real_count(s, tol)) / pairs);
        near.add(static_cast<double>(near_real_count(s, eps)) / pairs);
      }
      rec.statistics.add({std::to_string(n), std::to_string(c().trials), std::to_string(total),
                          std::to_string(deficits_for(ni)), fmt(exact.mean()), fmt(exact.stderr_of_mean()),
                          fmt(near.mean()), fmt(near.stderr_of_mean())});
      exact_means.push_back(exact.mean());
      near_means.push_back(near.mean());
      figs["n"].push_back(n);
      figs["exactly"].push_back(exact.mean());
      figs["exactly_se"].push_back(exact.stderr_of_mean());
      figs["near"].push_back(near.mean());
      figs["near_se"].push_back(near.stderr_of_mean());
    }
    auto monotone = [&](const std::vector<double>& m, const std::string& what) {
      double worst = 0.0;
      for (std::size_t i = 1; i < m.size(); ++i) worst = std::max(worst, m[i] - m[i - 1]);
      Verdict v;
      v.name = what + "/n(n-1) non-increasing in n";
      v.value = worst;
      v.threshold = 0.0;
      v.passed = worst <= 0.0;
      v.detail = "value is the largest increase between consecutive n";
      rec.verdicts.push_back(v);
    };
    monotone(exact_means, "exactly_real_count");
    monotone(near_means, "near_real_count(" + fmt_short(eps) + ")");
    rec.aggregates["near_real"] = figs;
  }

  void energy_table() {
    const auto q = default_q_grid(param_double(c(), "q_eps"), param_int(c(), "q_points"));
    const double tol = param_double(c(), "tol");
    const EnergyTable coarse = build_energy_table(q, tol, c().threads);
    const EnergyTable fine = build_energy_table(q, tol / param_double(c(), "fine_factor"), c().threads);
    rec.statistics.header = {"q", "G", "G_fine", "diff"};
    double worst = 0.0;
    json figs = {{"q", q}, {"G", coarse.g_values}, {"G_fine", fine.g_values}};
    for (std::size_t i = 0; i < q.size(); ++i) {
      const double d = std::abs(coarse.g_values[i] - fine.g_values[i]);
      worst = std::max(worst, d);
      rec.statistics.add({fmt(q[i]), fmt(coarse.g_values[i]), fmt(fine.g_values[i]), fmt(d)});
    }
    Verdict agree = verdict_below("energy table: two quadrature meshes agree", worst, param_double(c(), "agree_tol"));
    agree.passed = worst <= agree.threshold;
    rec.verdicts.push_back(agree);
    const double g0 = coarse.g_values.front();
    Verdict v0 = verdict_below("G(0) equals the circular-law energy", std::abs(g0 - param_double(c(), "g0_target")),
                               param_double(c(), "g0_tol"));
    v0.passed = v0.value <= v0.threshold;
    v0.detail = "G(0) = " + fmt(g0);
    rec.verdicts.push_back(v0);
    const auto [mn, mx] = std::minmax_element(coarse.g_values.begin(), coarse.g_values.end());
    Verdict flat = verdict_below("spread of G over the bulk grid (reported)", *mx - *mn, param_double(c(), "agree_tol"), false);
    flat.detail = "a spread below quadrature accuracy means G is constant and Psi reduces to the uniform law";
    rec.verdicts.push_back(flat);
    rec.aggregates["energy_table"] = figs;
    std::ostringstream csv;
    write_energy_table_csv(coarse, csv);
    rec.aggregates["energy_table_csv"] = csv.str();
  }

  void psi_profile() {
    std::shared_ptr<const EnergyTable> table;
    const std::string path = param_string(c(), "energy_table");
    if (!path.empty()) {
      std::ifstream f(path);
      if (!f) throw IoError("cannot open energy table " + path);
      table = std::make_shared<const EnergyTable>(read_energy_table_csv(f));
    } else {
      table = std::make_shared<const EnergyTable>(build_energy_table(
          default_q_grid(param_double(c(), "q_eps"), param_int(c(), "q_points")), param_double(c(), "tol"), c().threads));
    }
    const LawSpec law = psi_law(table);
    const double y0 = param_double(c(), "y_min"), y1 = param_double(c(), "y_max"), max_se = param_double(c(), "max_se");
    if (1.0 - y0 * y0 > table->q_max() || 1.0 - y1 * y1 < table->q_min())
      throw InvalidArgument("psi-profile: |Y| range exceeds the energy table coverage");
    const int bins = param_int(c(), "bins");
    const double w = (y1 - y0) / bins;
    std::vector<double> predicted(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b)
      predicted[static_cast<std::size_t>(b)] =
          quad::integrate([&](double t) { return absY_density(law, t, 1e-8); }, y0 + b * w, y0 + (b + 1) * w, 1e-8, 8) / w;
    rec.statistics.header = {"n", "bin_lo", "bin_hi", "empirical", "stderr", "predicted", "z"};
    json figs = json::array();
    double psi_min = std::numeric_limits<double>::infinity();
    json curve = {{"t", json::array()}, {"density", json::array()}};
    for (double t : grid(y0, 1.0, 41)) {
      const double d = absY_density(law, t, 1e-8);
      curve["t"].push_back(t);
      curve["density"].push_back(d);
    }
    for (double y : grid(y0, 0.99, 12))
      for (double a : grid(0.05, 2.0 * std::numbers::pi - 0.05, 12)) {
        const double rho = std::sqrt(1.0 - y * y);
        const auto p = from_sphere(make_sphere_point(rho * std::cos(a), y, rho * std::sin(a)));
        if (!p.at_infinity) psi_min = std::min(psi_min, psi_density(p.value, *table));
      }
    Verdict nonneg = verdict_below("min Psi over bulk grid points (reported)", -psi_min, 0.0, false);
    nonneg.passed = psi_min >= 0.0;
    nonneg.detail = "nonnegativity is a necessary condition for the Hermitian potential, reported only";
    rec.verdicts.push_back(nonneg);
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      std::vector<MeanAccumulator> acc(static_cast<std::size_t>(bins));
      for (std::size_t t = 0; t < c().trials; ++t) {
        const auto& r = results[ni * c().trials + t];
        if (r.deficit) continue;
        std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
        double total = 0.0;
        for (const auto& p : r.points) {
          const double ay = std::abs(to_sphere(p.lambda).y);
          total += p.multiplicity;
          if (ay >= y0 && ay < y1) counts[std::min(static_cast<std::size_t>((ay - y0) / w), counts.size() - 1)] += p.multiplicity;
        }
        for (int b = 0; b < bins; ++b) acc[static_cast<std::size_t>(b)].add(counts[static_cast<std::size_t>(b)] / (total * w));
      }
      json fig = {{"n", n}, {"center", json::array()}, {"empirical", json::array()}, {"stderr", json::array()},
                  {"predicted", predicted}, {"curve", curve}};
      for (int b = 0; b < bins; ++b) {
        const auto& a = acc[static_cast<std::size_t>(b)];
        const double pred = predicted[static_cast<std::size_t>(b)];
        const double z = a.stderr_of_mean() > 0.0 ? (a.mean() - pred) / a.stderr_of_mean() : 0.0;
        const double lo = y0 + b * w, hi = lo + w;
        rec.statistics.add({std::to_string(n), fmt(lo), fmt(hi), fmt(a.mean()), fmt(a.stderr_of_mean()), fmt(pred), fmt(z)});
        Verdict v = verdict_below("n=" + std::to_string(n) + " |Y| bin [" + fmt_short(lo) + ", " + fmt_short(hi) +
                                      ") |empirical - Psi| / SE",
                                  std::abs(z), max_se);
        v.passed = std::abs(a.mean() - pred) <= max_se * a.stderr_of_mean();
        rec.verdicts.push_back(v);
        fig["center"].push_back(0.5 * (lo + hi));
        fig["empirical"].push_back(a.mean());
        fig["stderr"].push_back(a.stderr_of_mean());
      }
      figs.push_back(fig);
    }
    rec.aggregates["psi"] = figs;
  }

  void absy_profile() {
    const auto ts = grid(0.0, 1.0, param_int(c(), "curve_points"));
    rec.statistics.header = {"n", "t", "cdf"};
    json figs = json::array();
    std::vector<std::vector<double>> curves;
    for (std::size_t ni = 0; ni < c().n_list.size(); ++ni) {
      const int n = c().n_list[ni];
      auto ys = measure(ni).abs_y();
      const double ks = ks_statistic(ys, [](double t) { return uniform_cdf(t, 0.0, 1.0); });
      std::sort(ys.begin(), ys.end());
      std::vector<double> cdf;
      for (double t : ts) {
        cdf.push_back(ecdf(ys, t));
        rec.statistics.add({std::to_string(n), fmt(t), fmt(cdf.back())});
      }
      rec.verdicts.push_back(verdict_below("n=" + std::to_string(n) + " KS(|Y|) vs uniform (reported)", ks, 0.02, false));
      curves.push_back(cdf);
      figs.push_back({{"n", n}, {"t", ts}, {"cdf", cdf}, {"ks_uniform", ks}});
    }
    double worst = 0.0;
    for (std::size_t k = 1; k < curves.size(); ++k)
      for (std::size_t i = 0; i < ts.size(); ++i) worst = std::max(worst, curves[k][i] - curves[k - 1][i]);
    Verdict order = verdict_below("empirical |Y| CDFs lie one below the other as n grows (reported)", worst, 0.0, false);
    order.passed = worst <= 0.0;
    order.detail = "value is the largest rise of a CDF over the previous n";
    rec.verdicts.push_back(order);
    rec.aggregates["absY"] = figs;
  }
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Figures.

/// Writes the SVG figures for a record produced by run(); `record` is record_json output.
inline std::vector<std::string> emit_figures(const json& record, const std::string& dir) {
  namespace fs = std::filesystem;
  using svg::Chart;
  using svg::Series;
  if (!record.contains("aggregates") || !record.contains("experiment"))
    throw InvalidArgument("record has no aggregates to plot");
  const json& a = record.at("aggregates");
  const std::string kind = record.at("experiment").get<std::string>();
  fs::create_directories(dir);
  std::vector<std::string> files;
  auto save = [&](const std::string& name, const std::string& content) {
    const std::string path = (fs::path(dir) / name).string();
    svg::write_file(path, content);
    files.push_back(path);
  };
  auto need = [&](const char* key) -> const json& {
    if (!a.contains(key)) throw InvalidArgument(std::string("record is missing aggregate '") + key + "'");
    return a.at(key);
  };
  auto vec = [](const json& j) { return j.get<std::vector<double>>(); };
  if (kind == "uniformity") {
    for (const auto& f : need("uniformity")) {
      const std::string n = std::to_string(f.at("n").get<int>());
      const auto& s = f.at("scatter");
      save("crossings_scatter_n" + n + ".svg",
           svg::sphere_scatter("Level crossings on CP^1, n=" + n + " (color: |Y|)", vec(s.at("x")), vec(s.at("y")),
                               vec(s.at("z"))));
      const auto centers = vec(f.at("z_hist").at("center"));
      Chart ch("Histogram of Z, n=" + n, "Z", "density");
      ch.add({"empirical", centers, vec(f.at("z_hist").at("density")), {}, Series::Bars});
      ch.add({"uniform 1/2", {-1.0, 1.0}, {0.5, 0.5}, {}, Series::Line, true});
      ch.x_range(-1.0, 1.0).y_range(0.0, 0.75);
      save("z_histogram_n" + n + ".svg", ch.render());
    }
  } else if (kind == "gue2-law") {
    for (const auto& f : need("gue2")) {
      const std::string n = std::to_string(f.at("n").get<int>());
      const auto& c = f.at("cdf");
      Chart ch("|Y| CDF, GUE n=" + n, "|Y|", "P(|Y| <= t)");
      ch.add({"empirical", vec(c.at("t")), vec(c.at("empirical"))});
      ch.add({"GUE2 law", vec(c.at("t")), vec(c.at("theory")), {}, Series::Line, true});
      ch.x_range(0.0, 1.0).y_range(0.0, 1.0);
      save("absY_cdf_n" + n + ".svg", ch.render());
    }
  } else if (kind == "goe-hq") {
    for (const auto& f : need("hn")) {
      const std::string n = std::to_string(f.at("n").get<int>());
      const auto& r = f.at("rows");
      Chart ch("H_n(q), GOE n=" + n, "q", "H_n(q)");
      ch.add({"axis representative", vec(r.at("q")), vec(r.at("H_axis")), vec(r.at("se_axis")), Series::Points});
      ch.add({"generic representative", vec(r.at("q")), vec(r.at("H_generic")), vec(r.at("se_generic")), Series::Points});
      save("hn_profile_n" + n + ".svg", ch.render());
    }
  } else if (kind == "absY-profile") {
    Chart ch("Empirical |Y| CDFs", "|Y|", "P(|Y| <= t)");
    for (const auto& f : need("absY"))
      ch.add({"n=" + std::to_string(f.at("n").get<int>()), vec(f.at("t")), vec(f.at("cdf"))});
    ch.add({"uniform", {0.0, 1.0}, {0.0, 1.0}, {}, Series::Line, true});
    ch.x_range(0.0, 1.0).y_range(0.0, 1.0);
    save("absY_cdf_overlay.svg", ch.render());
  } else if (kind == "psi-profile") {
    for (const auto& f : need("psi")) {
      const std::string n = std::to_string(f.at("n").get<int>());
      Chart ch("|Y| density: Psi prediction vs GUE n=" + n, "|Y|", "density");
      ch.add({"empirical", vec(f.at("center")), vec(f.at("empirical")), vec(f.at("stderr")), Series::Points});
      ch.add({"Psi", vec(f.at("curve").at("t")), vec(f.at("curve").at("density"))});
      save("psi_profile_n" + n + ".svg", ch.render());
    }
  } else if (kind == "near-real") {
    const auto& f = need("near_real");
    Chart ch("Crossings near RP^1 per n(n-1)", "n", "fraction");
    ch.add({"exactly real", vec(f.at("n")), vec(f.at("exactly")), vec(f.at("exactly_se")), Series::Points});
    ch.add({"near real", vec(f.at("n")), vec(f.at("near")), vec(f.at("near_se")), Series::Points});
    save("near_real.svg", ch.render());
  } else if (kind == "energy-table") {
    const auto& f = need("energy_table");
    Chart ch("Elliptic-law log energy G(q)", "q", "G(q)");
    ch.add({"G", vec(f.at("q")), vec(f.at("G")), {}, Series::Points});
    ch.add({"G fine mesh", vec(f.at("q")), vec(f.at("G_fine"))});
    ch.y_range(-0.26, -0.24);
    save("energy_table.svg", ch.render());
  } else if (kind == "sr-scan") {
    for (const auto& f : need("sr")) {
      const std::string n = std::to_string(f.at("n").get<int>());
      Chart ch("small_gap_count(r), n=" + n, "r", "count / n(n-1)");
      ch.add({"empirical", vec(f.at("r")), vec(f.at("count")), vec(f.at("se")), Series::Points});
      save("small_gap_n" + n + ".svg", ch.render());
    }
  } else if (kind == "lt-scan" || kind == "ucl-check") {
    const auto& f = need(kind == "lt-scan" ? "lt" : "ucl");
    Chart ch(kind == "lt-scan" ? "Mean lt_functional" : "Mean ucl_discrepancy", "n", "mean");
    ch.add({"empirical", vec(f.at("n")), vec(f.at("mean")), vec(f.at("se")), Series::Points});
    save(kind == "lt-scan" ? "lt_functional.svg" : "ucl_discrepancy.svg", ch.render());
  } else {
    throw InvalidArgument("unknown experiment in record: " + kind);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Runner.

struct RunOptions {
  bool write_files = true;  // ignored when config.output_dir is empty
  bool resume = true;
  std::function<void(std::size_t done, std::size_t total)> progress;
};

namespace detail {

inline void write_text(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f << content;
  if (!f) throw IoError("write failed for " + p.string());
}

inline void write_crossings_csv(const std::filesystem::path& p, const std::vector<TrialResult>& results,
                                std::size_t first, std::size_t trials) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot open " + p.string() + " for writing");
  f << "trial,re_lambda,im_lambda,x,y,z,residual,multiplicity\n";
  for (std::size_t t = 0; t < trials; ++t)
    for (const auto& c : results[first + t].points) {
      const SpherePoint s = to_sphere(c.lambda);
      f << t << ',';
      if (c.lambda.at_infinity)
        f << "inf,0,";
      else
        f << fmt(c.lambda.value.real()) << ',' << fmt(c.lambda.value.imag()) << ',';
      f << fmt(s.x) << ',' << fmt(s.y) << ',' << fmt(s.z) << ',' << fmt(c.residual) << ',' << c.multiplicity << '\n';
    }
  if (!f) throw IoError("write failed for " + p.string());
}

}  // namespace detail

/// Executes an experiment. Outputs (when output_dir is set): crossings_n<N>.csv,
/// statistics.csv, verdict.json, record.json and SVG figures. Completed trial batches are
/// checkpointed to partial-<hash>.jsonl and reused by a rerun with the same config.
inline RunRecord run(const ExperimentConfig& config, const RunOptions& opts = {}) {
  namespace fs = std::filesystem;
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.config = config;
  rec.config_hash = config_hash(config);

  detail::RunContext ctx{config};
  switch (config.experiment) {
    case ExperimentKind::GoeHq:
      ctx.q_grid = param_list(config, "q_grid");
      for (double q : ctx.q_grid) {
        ctx.axis_reps.push_back(axis_representative(q));
        ctx.generic_reps.push_back(generic_representative(q));
      }
      break;
    case ExperimentKind::SrScan:
    case ExperimentKind::LtScan:
    case ExperimentKind::UclCheck:
      ctx.lambda = {param_double(config, "lambda_re"), param_double(config, "lambda_im")};
      ctx.sigma = param_double(config, "sigma");
      if (!(ctx.sigma > 0.0)) throw InvalidArgument("sigma must be positive");
      if (config.experiment == ExperimentKind::SrScan) ctx.r_list = param_list(config, "r_list");
      if (config.experiment == ExperimentKind::UclCheck) ctx.ucl_dictionary = default_ucl_dictionary();
      break;
    default: break;
  }

  const bool files = opts.write_files && !config.output_dir.empty();
  const fs::path out(config.output_dir);
  if (files) fs::create_directories(out);

  const std::size_t items = config.experiment == ExperimentKind::EnergyTable ? 0 : config.n_list.size() * config.trials;
  std::vector<TrialResult> results(items);
  std::vector<char> done(items, 0);
  std::optional<Checkpoint> checkpoint;
  if (files && items > 0) {
    checkpoint.emplace(out / ("partial-" + rec.config_hash + ".jsonl"));
    if (opts.resume) {
      for (auto& [i, r] : checkpoint->load())
        if (i < items) {
          results[i] = std::move(r);
          done[i] = 1;
          ++rec.resumed_items;
        }
    } else {
      checkpoint->remove();
    }
  }

  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < items; ++i)
    if (!done[i]) todo.push_back(i);
  std::size_t deficits = 0;
  for (std::size_t i = 0; i < items; ++i) deficits += done[i] && results[i].deficit ? 1 : 0;
  const double deficit_limit = kMaxDeficitRate * static_cast<double>(items);
  auto abort_on_deficits = [&] {
    if (static_cast<double>(deficits) <= deficit_limit) return;
    std::ostringstream os;
    os << "solver count deficit in " << deficits << " of " << items << " trials exceeds "
       << kMaxDeficitRate * 100.0 << "%; first failures:";
    int shown = 0;
    for (std::size_t i = 0; i < items && shown < 5; ++i)
      if (results[i].deficit) {
        os << "\n  n=" << config.n_list[i / config.trials] << " trial=" << i % config.trials << ": "
           << results[i].error;
        ++shown;
      }
    throw NumericalError(os.str());
  };
  abort_on_deficits();
  for (std::size_t begin = 0; begin < todo.size(); begin += config.batch_size) {
    const std::size_t end = std::min(todo.size(), begin + config.batch_size);
    parallel_for(end - begin, config.threads,
                 [&](std::size_t k) { results[todo[begin + k]] = detail::evaluate_item(ctx, todo[begin + k]); });
    std::vector<std::pair<std::size_t, const TrialResult*>> batch;
    for (std::size_t k = begin; k < end; ++k) {
      done[todo[k]] = 1;
      deficits += results[todo[k]].deficit ? 1 : 0;
      batch.emplace_back(todo[k], &results[todo[k]]);
    }
    if (checkpoint) checkpoint->append(batch);
    if (opts.progress) opts.progress(rec.resumed_items + end, items);
    abort_on_deficits();
  }
  rec.deficits = deficits;

  for (std::size_t i = 0; i < items; ++i) {
    TrialSummary s;
    s.n = config.n_list[i / config.trials];
    s.trial = i % config.trials;
    s.deficit = results[i].deficit;
    for (const auto& p : results[i].points) {
      s.crossing_count += p.multiplicity;
      if (!p.lambda.at_infinity) s.max_residual = std::max(s.max_residual, p.residual);
    }
    if (needs_crossings(config.experiment)) rec.trials.push_back(s);
  }

  detail::Aggregation agg{rec, ctx, results};
  switch (config.experiment) {
    case ExperimentKind::Uniformity: agg.uniformity(); break;
    case ExperimentKind::Gue2Law: agg.gue2_law(); break;
    case ExperimentKind::GoeHq: agg.goe_hq(); break;
    case ExperimentKind::SrScan: agg.sr_scan(); break;
    case ExperimentKind::LtScan: agg.lt_scan(); break;
    case ExperimentKind::UclCheck: agg.ucl_check(); break;
    case ExperimentKind::NearReal: agg.near_real(); break;
    case ExperimentKind::EnergyTable: agg.energy_table(); break;
    case ExperimentKind::PsiProfile: agg.psi_profile(); break;
    case ExperimentKind::AbsYProfile: agg.absy_profile(); break;
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (files) {
    if (needs_crossings(config.experiment) && config.write_crossings)
      for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const fs::path p = out / ("crossings_n" + std::to_string(config.n_list[ni]) + ".csv");
        detail::write_crossings_csv(p, results, ni * config.trials, config.trials);
        rec.files.push_back(p.string());
      }
    if (rec.aggregates.contains("energy_table_csv")) {
      detail::write_text(out / "energy_table.csv", rec.aggregates["energy_table_csv"].get<std::string>());
      rec.files.push_back((out / "energy_table.csv").string());
    }
    detail::write_text(out / "statistics.csv", rec.statistics.str());
    detail::write_text(out / "config.txt", config_text(config));
    rec.files.push_back((out / "statistics.csv").string());
    const json record = record_json(rec);
    for (auto& f : emit_figures(record, out.string())) rec.files.push_back(f);
    detail::write_text(out / "verdict.json", verdict_json(rec).dump(2) + "\n");
    detail::write_text(out / "record.json", record_json(rec).dump() + "\n");
    rec.files.push_back((out / "verdict.json").string());
    rec.files.push_back((out / "record.json").string());
    if (checkpoint) checkpoint->remove();
  }
  return rec;
}

inline json load_record(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open record " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw IoError("malformed record " + path + ": " + e.what());
  }
}

}  // namespace lcross
