#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "emrm/ensembles.hpp"
#include "emrm/estimator.hpp"
#include "emrm/exact_oracle.hpp"
#include "emrm/io.hpp"
#include "emrm/limit_calculus.hpp"
#include "emrm/moment_model.hpp"
#include "emrm/report.hpp"

namespace emrm {

enum class Command { limits, covariance, simulate, verify, oracle, weaver };
enum class Format { csv, json };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::limits: return "limits";
    case Command::covariance: return "covariance";
    case Command::simulate: return "simulate";
    case Command::verify: return "verify";
    case Command::oracle: return "oracle";
    case Command::weaver: return "weaver";
  }
  return "?";
}

inline std::optional<Command> parse_command(std::string_view s) {
  for (Command c : {Command::limits, Command::covariance, Command::simulate, Command::verify, Command::oracle, Command::weaver})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

// Bad command line or config document; exit status 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitUsage = 2;

struct ExperimentConfig {
  Command command = Command::limits;
  Model model = Model::elliptic;
  std::vector<int> n_list{1000};
  int kmax = 4;
  int replicas = 200;
  std::uint64_t seed = 1;
  std::string law = "sign";  // sign | skewed | gaussian | path to a law document
  std::string profile;       // empty: from the law | light | wigner | path to a profile document
  std::string rho = "0";
  std::string output;        // empty: stdout
  bool paper_formula = false;
  double z_threshold = kDefaultZThreshold;
  Format format = Format::csv;
  Storage storage = Storage::sparse_coo;
  int oracle_n = 5;
  int bootstrap = kDefaultBootstrap;
  std::vector<std::pair<int, int>> pairs;  // covariance rows; empty: all k <= l <= min(kmax, 3)
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["command"] = std::string(to_string(c.command));
  j["model"] = std::string(to_string(c.model));
  j["n"] = c.n_list;
  j["kmax"] = c.kmax;
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["law"] = c.law;
  j["profile"] = c.profile;
  j["rho"] = c.rho;
  j["output"] = c.output;
  j["paper_formula"] = c.paper_formula;
  j["z_threshold"] = c.z_threshold;
  j["format"] = c.format == Format::json ? "json" : "csv";
  j["storage"] = std::string(to_string(c.storage));
  j["oracle_n"] = c.oracle_n;
  j["bootstrap"] = c.bootstrap;
  j["pairs"] = nlohmann::json::array();
  for (const auto& [k, l] : c.pairs) j["pairs"].push_back({k, l});
  return j;
}

namespace detail {

inline Model parse_model_or_throw(const std::string& s) {
  if (auto m = parse_model(s)) return *m;
  throw UsageError("unknown model '" + s + "' (elliptic, iid, block, centrosymmetric, circulant)");
}

inline Format parse_format_or_throw(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw UsageError("unknown format '" + s + "' (csv, json)");
}

inline Storage parse_storage_or_throw(const std::string& s) {
  if (s == "sparse" || s == "sparse_coo") return Storage::sparse_coo;
  if (s == "dense") return Storage::dense;
  throw UsageError("unknown storage '" + s + "' (sparse, dense)");
}

inline std::pair<int, int> parse_pair_or_throw(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    return {std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
  } catch (const std::exception&) {
    throw UsageError("covariance pair '" + s + "' is not of the form k:l");
  }
}

template <typename T>
T field_as(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace detail

// Reads a config document; a report document is accepted through its "config".
inline ExperimentConfig config_from_json(const nlohmann::json& doc) {
  const nlohmann::json& j = doc.contains("schema") && doc.contains("config") ? doc.at("config") : doc;
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    static const std::vector<std::string> known{"command", "model", "n", "kmax", "replicas", "seed", "law", "profile", "rho",
                                                "output", "paper_formula", "z_threshold", "format", "storage", "oracle_n",
                                                "bootstrap", "pairs", "law_resolved", "profile_resolved"};
    if (std::find(known.begin(), known.end(), key) == known.end()) throw UsageError("unknown config field '" + key + "'");
  }
  if (j.contains("command")) {
    const auto s = detail::field_as<std::string>(j, "command");
    auto cmd = parse_command(s);
    if (!cmd) throw UsageError("config field 'command': unknown command '" + s + "'");
    c.command = *cmd;
  }
  if (j.contains("model")) c.model = detail::parse_model_or_throw(detail::field_as<std::string>(j, "model"));
  if (j.contains("n")) {
    if (j.at("n").is_array()) c.n_list = detail::field_as<std::vector<int>>(j, "n");
    else c.n_list = {detail::field_as<int>(j, "n")};
  }
  if (j.contains("kmax")) c.kmax = detail::field_as<int>(j, "kmax");
  if (j.contains("replicas")) c.replicas = detail::field_as<int>(j, "replicas");
  if (j.contains("seed")) c.seed = detail::field_as<std::uint64_t>(j, "seed");
  if (j.contains("law")) c.law = detail::field_as<std::string>(j, "law");
  if (j.contains("profile")) c.profile = detail::field_as<std::string>(j, "profile");
  if (j.contains("rho")) c.rho = j.at("rho").is_string() ? j.at("rho").get<std::string>() : j.at("rho").dump();
  if (j.contains("output")) c.output = detail::field_as<std::string>(j, "output");
  if (j.contains("paper_formula")) c.paper_formula = detail::field_as<bool>(j, "paper_formula");
  if (j.contains("z_threshold")) c.z_threshold = detail::field_as<double>(j, "z_threshold");
  if (j.contains("format")) c.format = detail::parse_format_or_throw(detail::field_as<std::string>(j, "format"));
  if (j.contains("storage")) c.storage = detail::parse_storage_or_throw(detail::field_as<std::string>(j, "storage"));
  if (j.contains("oracle_n")) c.oracle_n = detail::field_as<int>(j, "oracle_n");
  if (j.contains("bootstrap")) c.bootstrap = detail::field_as<int>(j, "bootstrap");
  if (j.contains("pairs")) {
    for (const auto& p : j.at("pairs")) {
      if (!p.is_array() || p.size() != 2) throw UsageError("config field 'pairs': expected [[k, l], ...]");
      c.pairs.emplace_back(p[0].get<int>(), p[1].get<int>());
    }
  }
  return c;
}

inline Rational parse_rho(const std::string& s) {
  try {
    return detail::json_rational(nlohmann::json(s), "rho");
  } catch (const Error&) {
  }
  // decimal such as 0.5
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) {
      const auto dot = s.find('.');
      if (dot == std::string::npos) return Rational(static_cast<long long>(v));
      const std::string digits = s.substr(0, dot) + s.substr(dot + 1);
      Integer den{1};
      for (std::size_t i = dot + 1; i < s.size(); ++i) den *= 10;
      return Rational(Integer(digits), den);
    }
  } catch (const std::exception&) {
  }
  throw UsageError("rho '" + s + "' is not a rational number");
}

// Guards of the downstream modules, checked before any work starts.
inline void validate_config(const ExperimentConfig& c) {
  if (c.n_list.empty()) throw UsageError("at least one N is required");
  for (int n : c.n_list)
    if (n < 1) throw UsageError("N must be positive");
  if (c.kmax < 1 || c.kmax > kMaxLimitMoment) throw UsageError("kmax must lie in [1, " + std::to_string(kMaxLimitMoment) + "]");
  if ((c.command == Command::simulate || c.command == Command::verify) && c.replicas < 2)
    throw UsageError("replicas must be at least 2");
  if (c.z_threshold <= 0) throw UsageError("z-threshold must be positive");
  if (c.bootstrap < 2) throw UsageError("bootstrap must be at least 2");
  if (c.oracle_n < 1 || c.oracle_n > kMaxCovarianceOracleN)
    throw UsageError("oracle-n must lie in [1, " + std::to_string(kMaxCovarianceOracleN) + "]");
  for (const auto& [k, l] : c.pairs)
    if (k < 1 || l < 1 || k > c.kmax || l > c.kmax || k > kMaxCovarianceOrder || l > kMaxCovarianceOrder)
      throw UsageError("covariance pair " + std::to_string(k) + ":" + std::to_string(l) + " outside [1, min(kmax, 6)]");
  const Rational rho = parse_rho(c.rho);
  if (rho < -1 || rho > 1) throw UsageError("rho must lie in [-1, 1]");
}

inline EntryLaw resolve_law(const ExperimentConfig& c) {
  const bool pair = c.model == Model::elliptic || c.model == Model::block;
  if (c.law == "sign") {
    if (pair) return design_correlated_sign_law(parse_rho(c.rho));
    return sign_scalar_law();
  }
  if (c.law == "skewed") {
    if (pair) throw UsageError("the skewed law is scalar; the " + std::string(to_string(c.model)) + " model needs a pair law");
    return skewed_scalar_law();
  }
  if (c.law == "gaussian" || c.law == "light") return GaussianLaw{to_double(parse_rho(c.rho))};
  EntryLaw law = law_from_json(read_json_file(c.law));
  if (std::holds_alternative<SparsePairLaw>(law) != pair && !std::holds_alternative<GaussianLaw>(law))
    throw UsageError("law file '" + c.law + "' has the wrong arity for the " + std::string(to_string(c.model)) + " model");
  return law;
}

// Light profile: only the variance-scale constants survive.
inline MomentProfile light_profile_for(Model model, const Rational& rho) {
  if (model == Model::elliptic || model == Model::block) {
    MomentProfile p = wigner_profile();
    p.pair_table[{1, 1}] = rho;
    p.scalar_table = light_scalar_profile().scalar_table;
    return p;
  }
  return light_scalar_profile();
}

inline MomentProfile resolve_profile(const ExperimentConfig& c, const EntryLaw& law) {
  if (c.profile == "light") return light_profile_for(c.model, parse_rho(c.rho));
  if (c.profile == "wigner") return wigner_profile();
  if (!c.profile.empty()) return profile_from_json(read_json_file(c.profile));
  if (const auto* pl = std::get_if<SparsePairLaw>(&law)) {
    MomentProfile p = profile_of_sparse_law(*pl);
    if (c.model == Model::block) p.scalar_table = profile_of_sparse_law(marginal_law(*pl, false)).scalar_table;
    return p;
  }
  if (const auto* sl = std::get_if<SparseScalarLaw>(&law)) return profile_of_sparse_law(*sl);
  return light_profile_for(c.model, parse_rho(c.rho));
}

namespace detail {

inline bool is_light(const MomentProfile& p) {
  for (const auto& [k, v] : p.scalar_table)
    if (k >= 3 && v != 0) return false;
  for (const auto& [key, v] : p.pair_table)
    if (key.first + key.second >= 3 && v != 0) return false;
  return true;
}

inline std::vector<std::pair<int, int>> covariance_pairs(const ExperimentConfig& c) {
  if (!c.pairs.empty()) return c.pairs;
  std::vector<std::pair<int, int>> out;
  const int top = std::min(c.kmax, 3);
  for (int k = 1; k <= top; ++k)
    for (int l = k; l <= top; ++l) out.emplace_back(k, l);
  return out;
}

inline std::optional<SurdValue> oracle_mean(const ExperimentConfig& c, const EntryLaw& law, int n, int k) {
  if (k > kMaxExactTraceOrder) return std::nullopt;
  try {
    if (const auto* pl = std::get_if<SparsePairLaw>(&law)) {
      if (c.model == Model::elliptic || c.model == Model::block) return exact_trace_mean(c.model, *pl, n, k);
    } else if (const auto* sl = std::get_if<SparseScalarLaw>(&law)) {
      if (c.model == Model::iid) return exact_trace_mean(c.model, *sl, n, k);
      if (c.model == Model::circulant && n <= kMaxCirculantOracleN) return exact_trace_mean(c.model, *sl, n, k);
    }
  } catch (const GuardError&) {
  }
  return std::nullopt;
}

inline std::optional<SurdValue> oracle_covariance(const ExperimentConfig& c, const EntryLaw& law, int n, int k, int l) {
  if (n > kMaxCovarianceOracleN || k > kMaxCovarianceOracleOrder || l > kMaxCovarianceOracleOrder) return std::nullopt;
  if (const auto* pl = std::get_if<SparsePairLaw>(&law)) {
    if (c.model == Model::elliptic || c.model == Model::block) return exact_fluct_covariance_small(c.model, *pl, n, k, l);
  } else if (const auto* sl = std::get_if<SparseScalarLaw>(&law)) {
    if (c.model == Model::iid || c.model == Model::circulant) return exact_fluct_covariance_small(c.model, *sl, n, k, l);
  }
  return std::nullopt;
}

inline Rational predicted_mean(const ExperimentConfig& c, int k, const MomentProfile& p) {
  if (c.model == Model::circulant)
    return circulant_limit_moment(k, p, c.paper_formula ? CirculantFormula::uncorrected : CirculantFormula::corrected);
  return limit_trace_moment(c.model, k, p);
}

class Output {
 public:
  Output(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw UsageError("cannot write output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

inline nlohmann::json resolved_config(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p) {
  nlohmann::json j = config_to_json(c);
  j["law_resolved"] = law_to_json(law);
  j["profile_resolved"] = profile_to_json(p);
  return j;
}

inline int run_limits(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p, std::ostream& out) {
  if (auto d = validate_profile(p, c.model); !d.ok()) throw UsageError("profile rejected: " + d.to_string());
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::pair<int, Rational>> table;
  for (int k = 1; k <= c.kmax; ++k) table.emplace_back(k, predicted_mean(c, k, p));
  if (c.format == Format::csv) {
    out << "k,limit\n";
    for (const auto& [k, v] : table) out << k << ',' << to_string(v) << '\n';
  } else {
    for (const auto& [k, v] : table) rows.push_back({{"k", k}, {"limit", to_string(v)}, {"value", to_double(v)}});
    out << nlohmann::json{{"schema", 1}, {"config", resolved_config(c, law, p)}, {"limits", rows}}.dump(2) << '\n';
  }
  return kExitPass;
}

inline int run_covariance(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p, std::ostream& out) {
  if (auto d = validate_profile(p, c.model); !d.ok()) throw UsageError("profile rejected: " + d.to_string());
  const int top = std::min(c.kmax, kMaxCovarianceOrder);
  std::vector<std::tuple<int, int, Rational>> table;
  if (!c.pairs.empty()) {
    for (const auto& [k, l] : c.pairs) table.emplace_back(k, l, covariance_trace(k, l, c.model, p));
  } else {
    for (int k = 1; k <= top; ++k)
      for (int l = k; l <= top; ++l) table.emplace_back(k, l, covariance_trace(k, l, c.model, p));
  }
  if (c.format == Format::csv) {
    out << "k,l,covariance\n";
    for (const auto& [k, l, v] : table) out << k << ',' << l << ',' << to_string(v) << '\n';
  } else {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& [k, l, v] : table) rows.push_back({{"k", k}, {"l", l}, {"covariance", to_string(v)}, {"value", to_double(v)}});
    out << nlohmann::json{{"schema", 1}, {"config", resolved_config(c, law, p)}, {"covariance", rows}}.dump(2) << '\n';
  }
  return kExitPass;
}

inline EnsembleSpec spec_for(const ExperimentConfig& c, const EntryLaw& law, int n) {
  EnsembleSpec s;
  s.kind = ensemble_of(c.model);
  s.n = n;
  s.law = law;
  s.seed = c.seed;
  s.storage = std::holds_alternative<GaussianLaw>(law) && c.model != Model::circulant ? Storage::dense : c.storage;
  return s;
}

inline int run_simulate(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p, std::ostream& out) {
  nlohmann::json runs = nlohmann::json::array();
  if (c.format == Format::csv) out << "n,stat,k,l,value,stderr\n";
  for (int n : c.n_list) {
    ExperimentOptions opt;
    opt.bootstrap = c.bootstrap;
    const SampleStats st = run_experiment(spec_for(c, law, n), c.kmax, c.replicas, opt);
    nlohmann::json run{{"n", n}, {"mean", nlohmann::json::array()}, {"covariance", nlohmann::json::array()}};
    for (int k = 1; k <= c.kmax; ++k) {
      if (c.format == Format::csv)
        out << n << ",mean," << k << ",0," << detail::format_double(st.mean(k - 1)) << ',' << detail::format_double(st.mean_se(k - 1)) << '\n';
      run["mean"].push_back({{"k", k}, {"value", st.mean(k - 1)}, {"stderr", st.mean_se(k - 1)}});
    }
    for (int k = 1; k <= c.kmax; ++k)
      for (int l = k; l <= c.kmax; ++l) {
        if (c.format == Format::csv)
          out << n << ",covariance," << k << ',' << l << ',' << detail::format_double(st.covariance(k - 1, l - 1)) << ','
              << detail::format_double(st.covariance_se(k - 1, l - 1)) << '\n';
        run["covariance"].push_back(
            {{"k", k}, {"l", l}, {"value", st.covariance(k - 1, l - 1)}, {"stderr", st.covariance_se(k - 1, l - 1)}});
      }
    runs.push_back(run);
  }
  if (c.format == Format::json)
    out << nlohmann::json{{"schema", 1}, {"config", resolved_config(c, law, p)}, {"runs", runs}}.dump(2) << '\n';
  return kExitPass;
}

}  // namespace detail

// Predictions, oracle values and Monte Carlo estimates side by side.
inline Report build_verify_report(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p) {
  if (auto d = validate_profile(p, c.model); !d.ok()) throw UsageError("profile rejected: " + d.to_string());
  Report report;
  report.config = detail::resolved_config(c, law, p);
  const bool circulant = c.model == Model::circulant;
  const bool light = detail::is_light(p);
  for (int n : c.n_list) {
    std::vector<Prediction> predictions;
    for (int k = 1; k <= c.kmax; ++k) {
      Prediction pr;
      pr.quantity = Quantity::mean;
      pr.n = n;
      pr.k = k;
      pr.predicted = detail::predicted_mean(c, k, p);
      pr.oracle = detail::oracle_mean(c, law, n, k);
      if (circulant) {
        pr.scale = n;  // E[Tr C^k] rather than E[Tr C^k]/N
        if (n % 2 == 0) {
          pr.informational = true;
          pr.note = "circulant limit taken along odd N";
        }
      }
      predictions.push_back(pr);
    }
    for (const auto& [k, l] : detail::covariance_pairs(c)) {
      Prediction pr;
      pr.quantity = Quantity::covariance;
      pr.n = n;
      pr.k = k;
      pr.l = l;
      pr.predicted = covariance_trace(k, l, c.model, p);
      pr.oracle = detail::oracle_covariance(c, law, n, k, l);
      if (circulant && !light) {
        pr.informational = true;
        pr.note = "circulant kernel stated for light profiles";
      }
      predictions.push_back(pr);
    }
    ExperimentOptions opt;
    opt.bootstrap = c.bootstrap;
    const SampleStats st = run_experiment(detail::spec_for(c, law, n), c.kmax, c.replicas, opt);
    for (auto& row : compare_report(st, predictions, c.z_threshold)) report.rows.push_back(std::move(row));
  }
  if (circulant) {
    // kernel against the exact finite-N covariance of the sign law
    const SparseScalarLaw sign = sign_scalar_law();
    for (int k = 1; k <= std::min(c.kmax, kMaxCovarianceOracleOrder); ++k) {
      Prediction pr;
      pr.quantity = Quantity::exact;
      pr.n = c.oracle_n;
      pr.k = k;
      pr.l = k;
      pr.predicted = circulant_covariance(k, k);
      pr.oracle = exact_fluct_covariance_small(Model::circulant, sign, c.oracle_n, k, k);
      pr.informational = true;
      pr.note = "sign law at N = " + std::to_string(c.oracle_n) + "; the j = 0 term adds (E[x^4]-1)/N, the paired terms give 2(N-1)/N";
      report.rows.push_back(make_exact_row(pr));
    }
  }
  return report;
}

namespace detail {

inline int run_verify(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p, std::ostream& out) {
  const Report report = build_verify_report(c, law, p);
  if (c.format == Format::csv) write_csv(out, report.rows);
  else out << report_to_json(report).dump(2) << '\n';
  return report.passed() ? kExitPass : kExitFail;
}

inline int run_oracle(const ExperimentConfig& c, const EntryLaw& law, const MomentProfile& p, std::ostream& out) {
  if (std::holds_alternative<GaussianLaw>(law)) throw UsageError("the exact oracle needs a sparse atomic law");
  nlohmann::json rows = nlohmann::json::array();
  if (c.format == Format::csv) out << "n,quantity,k,l,exact,value\n";
  auto emit = [&](int n, const char* what, int k, int l, const SurdValue& v) {
    if (c.format == Format::csv)
      out << n << ',' << what << ',' << k << ',' << l << ',' << v.to_string() << ',' << detail::format_double(v.to_double()) << '\n';
    rows.push_back({{"n", n}, {"quantity", what}, {"k", k}, {"l", l}, {"exact", v.to_string()}, {"value", v.to_double()}});
  };
  for (int n : c.n_list) {
    const std::size_t before = rows.size();
    for (int k = 1; k <= std::min(c.kmax, kMaxExactTraceOrder); ++k)
      if (auto v = oracle_mean(c, law, n, k)) emit(n, c.model == Model::circulant ? "trace" : "mean", k, 0, *v);
    for (int k = 1; k <= std::min(c.kmax, kMaxCovarianceOracleOrder); ++k)
      for (int l = k; l <= std::min(c.kmax, kMaxCovarianceOracleOrder); ++l)
        if (auto v = oracle_covariance(c, law, n, k, l)) emit(n, "covariance", k, l, *v);
    if (rows.size() == before) throw GuardError("no exact values for the " + std::string(to_string(c.model)) + " model at N = " + std::to_string(n));
  }
  if (c.format == Format::json)
    out << nlohmann::json{{"schema", 1}, {"config", resolved_config(c, law, p)}, {"oracle", rows}}.dump(2) << '\n';
  return kExitPass;
}

}  // namespace detail

struct WeaverCheck {
  int n = 0;
  std::uint64_t seed = 0;
  double off_block = 0.0;      // largest |entry| of Q^T M Q outside the blocks
  double block_mismatch = 0.0; // diagonal blocks of Q^T M Q against A + JC, A - JC
  double orthogonality = 0.0;  // max |Q^T Q - I|
  double spectrum = 0.0;       // characteristic polynomial coefficients, relative
};

// Coefficients of prod (x - lambda) from a spectrum, highest degree first.
inline std::vector<std::complex<double>> polynomial_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  return c;
}

inline std::vector<std::complex<double>> spectrum_of(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
  std::vector<std::complex<double>> out;
  for (long i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i));
  return out;
}

inline WeaverCheck check_weaver(const Eigen::MatrixXd& m) {
  WeaverCheck w;
  w.n = static_cast<int>(m.rows());
  const WeaverReduction r = weaver_reduce(m);
  const long b1 = r.block1.rows();
  const long n = m.rows();
  const Eigen::MatrixXd& t = r.transformed;
  w.off_block = std::max(t.topRightCorner(b1, n - b1).cwiseAbs().maxCoeff(), t.bottomLeftCorner(n - b1, b1).cwiseAbs().maxCoeff());
  w.block_mismatch = std::max((t.topLeftCorner(b1, b1) - r.block1).cwiseAbs().maxCoeff(),
                              (t.bottomRightCorner(n - b1, n - b1) - r.block2).cwiseAbs().maxCoeff());
  w.orthogonality = (r.q.transpose() * r.q - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  auto roots = spectrum_of(r.block1);
  const auto roots2 = spectrum_of(r.block2);
  roots.insert(roots.end(), roots2.begin(), roots2.end());
  const auto pm = polynomial_from_roots(spectrum_of(m));
  const auto pb = polynomial_from_roots(roots);
  double scale = 1.0;
  for (const auto& v : pm) scale = std::max(scale, std::abs(v));
  for (std::size_t i = 0; i < pm.size(); ++i) w.spectrum = std::max(w.spectrum, std::abs(pm[i] - pb[i]) / scale);
  return w;
}

namespace detail {

inline int run_weaver(const ExperimentConfig& c, const EntryLaw& law, std::ostream& out) {
  nlohmann::json rows = nlohmann::json::array();
  if (c.format == Format::csv) out << "n,seed,off_block,block_mismatch,orthogonality,spectrum\n";
  for (int n : c.n_list) {
    if (n > kDenseSizeLimit) throw UsageError("weaver demonstration limited to N <= " + std::to_string(kDenseSizeLimit));
    ExperimentConfig cc = c;
    cc.model = Model::centrosymmetric;
    EnsembleSpec s = spec_for(cc, law, n);
    s.storage = Storage::dense;
    WeaverCheck w = check_weaver(sample(s).to_dense());
    w.seed = c.seed;
    if (c.format == Format::csv)
      out << n << ',' << c.seed << ',' << detail::format_double(w.off_block) << ',' << detail::format_double(w.block_mismatch) << ','
          << detail::format_double(w.orthogonality) << ',' << detail::format_double(w.spectrum) << '\n';
    rows.push_back({{"n", n}, {"seed", c.seed}, {"off_block", w.off_block}, {"block_mismatch", w.block_mismatch},
                    {"orthogonality", w.orthogonality}, {"spectrum", w.spectrum}});
  }
  if (c.format == Format::json) out << nlohmann::json{{"schema", 1}, {"config", config_to_json(c)}, {"weaver", rows}}.dump(2) << '\n';
  return kExitPass;
}

}  // namespace detail

inline int dispatch(const ExperimentConfig& c, std::ostream& out) {
  validate_config(c);
  ExperimentConfig resolved = c;
  if (c.command == Command::weaver) resolved.model = Model::centrosymmetric;
  const EntryLaw law = resolve_law(resolved);
  detail::Output sink(c.output, out);
  std::ostream& o = sink.stream();
  switch (c.command) {
    case Command::limits: return detail::run_limits(resolved, law, resolve_profile(resolved, law), o);
    case Command::covariance: return detail::run_covariance(resolved, law, resolve_profile(resolved, law), o);
    case Command::simulate: return detail::run_simulate(resolved, law, resolve_profile(resolved, law), o);
    case Command::verify: return detail::run_verify(resolved, law, resolve_profile(resolved, law), o);
    case Command::oracle: return detail::run_oracle(resolved, law, resolve_profile(resolved, law), o);
    case Command::weaver: return detail::run_weaver(resolved, law, o);
  }
  return kExitUsage;
}

// Parses argv (flags override a --config document) and runs the command.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exploding-moment random matrices: limits, exact oracle and Monte Carlo verification"};
  app.require_subcommand(1);

  std::string config_path, model, law, profile, rho, output, format, storage, n_text, pairs_text;
  int kmax = 0, replicas = 0, oracle_n = 0, bootstrap = 0;
  std::uint64_t seed = 0;
  double z = 0;
  bool uncorrected = false;
  std::vector<int> n_list;

  struct Bound {
    CLI::Option* config;
    CLI::Option* model;
    CLI::Option* n;
    CLI::Option* kmax;
    CLI::Option* reps;
    CLI::Option* seed;
    CLI::Option* law;
    CLI::Option* profile;
    CLI::Option* rho;
    CLI::Option* output;
    CLI::Option* uncorrected;
    CLI::Option* z;
    CLI::Option* format;
    CLI::Option* storage;
    CLI::Option* oracle_n;
    CLI::Option* bootstrap;
    CLI::Option* pairs;
  };
  std::vector<std::pair<CLI::App*, Bound>> subs;
  for (Command cmd : {Command::limits, Command::covariance, Command::simulate, Command::verify, Command::oracle, Command::weaver}) {
    CLI::App* sub = app.add_subcommand(std::string(to_string(cmd)));
    Bound b{};
    b.config = sub->add_option("--config", config_path, "JSON config (or a previous JSON report)");
    b.model = sub->add_option("--model", model, "elliptic | iid | block | centrosymmetric | circulant");
    b.n = sub->add_option("--n", n_list, "matrix size(s)")->delimiter(',');
    b.kmax = sub->add_option("--kmax", kmax, "largest trace power");
    b.reps = sub->add_option("--reps,--replicas", replicas, "Monte Carlo replicas");
    b.seed = sub->add_option("--seed", seed, "base seed");
    b.law = sub->add_option("--law", law, "sign | skewed | gaussian | law JSON file");
    b.profile = sub->add_option("--profile", profile, "light | wigner | profile JSON file");
    b.rho = sub->add_option("--rho", rho, "pair correlation, rational");
    b.output = sub->add_option("--output,-o", output, "output file");
    b.uncorrected = sub->add_flag("--paper-formula", uncorrected, "circulant limits without the symmetry factor");
    b.z = sub->add_option("--z-threshold", z, "pass band in standard errors");
    b.format = sub->add_option("--format", format, "csv | json");
    b.storage = sub->add_option("--storage", storage, "sparse | dense");
    b.oracle_n = sub->add_option("--oracle-n", oracle_n, "size of the exact covariance rows");
    b.bootstrap = sub->add_option("--bootstrap", bootstrap, "bootstrap resamples");
    b.pairs = sub->add_option("--pairs", pairs_text, "covariance rows, e.g. 1:2,2:2");
    subs.emplace_back(sub, b);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitPass;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    for (const auto& [sub, b] : subs) {
      if (!sub->parsed()) continue;
      ExperimentConfig c;
      if (b.config->count()) c = config_from_json(read_json_file(config_path));
      c.command = *parse_command(sub->get_name());
      if (b.model->count()) c.model = detail::parse_model_or_throw(model);
      if (b.n->count()) c.n_list = n_list;
      if (b.kmax->count()) c.kmax = kmax;
      if (b.reps->count()) c.replicas = replicas;
      if (b.seed->count()) c.seed = seed;
      if (b.law->count()) c.law = law;
      if (b.profile->count()) {
        c.profile = profile;
        if (profile == "light" && !b.law->count()) c.law = "gaussian";
      }
      if (b.rho->count()) c.rho = rho;
      if (b.output->count()) c.output = output;
      if (b.uncorrected->count()) c.paper_formula = uncorrected;
      if (b.z->count()) c.z_threshold = z;
      if (b.format->count()) c.format = detail::parse_format_or_throw(format);
      if (b.storage->count()) c.storage = detail::parse_storage_or_throw(storage);
      if (b.oracle_n->count()) c.oracle_n = oracle_n;
      if (b.bootstrap->count()) c.bootstrap = bootstrap;
      if (b.pairs->count()) {
        c.pairs.clear();
        std::stringstream ss(pairs_text);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) c.pairs.push_back(detail::parse_pair_or_throw(item));
      }
      return dispatch(c, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error at " << e.field() << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const ProfileParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GuardError& e) {
    err << "guard: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidLawError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed document: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace emrm
