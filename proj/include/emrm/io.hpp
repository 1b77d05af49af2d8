#pragma once

#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <variant>

#include "json.hpp"

#include "emrm/ensembles.hpp"
#include "emrm/moment_model.hpp"

namespace emrm {

// Malformed document; `field` is a JSON-pointer-like path.
class ParseError : public Error {
 public:
  ParseError(std::string field, const std::string& message)
      : Error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Structured failure of a profile document: the violations found while parsing.
class ProfileParseError : public Error {
 public:
  explicit ProfileParseError(Diagnostics d) : Error("invalid profile: " + d.to_string()), diagnostics_(std::move(d)) {}
  const Diagnostics& diagnostics() const { return diagnostics_; }

 private:
  Diagnostics diagnostics_;
};

namespace detail {

inline Integer json_integer(const nlohmann::json& j, const std::string& field) {
  if (j.is_number_integer()) return Integer(j.get<long long>());
  if (j.is_string()) {
    try {
      return Integer(j.get<std::string>());
    } catch (const std::exception&) {
    }
  }
  throw ParseError(field, "expected an integer");
}

// num/den -> rational; a zero denominator reports non-finite.
inline Rational json_ratio(const nlohmann::json& num, const nlohmann::json& den, const std::string& field,
                           Diagnostics* diag = nullptr) {
  const Integer n = json_integer(num, field);
  const Integer d = json_integer(den, field);
  if (d == 0) {
    if (diag) {
      diag->add(ViolationKind::non_finite_value, field + " has a zero denominator");
      return Rational{0};
    }
    throw ParseError(field, "zero denominator");
  }
  return Rational(n, d);
}

// Accepts [num, den], an integer, or a "p/q" string.
inline Rational json_rational(const nlohmann::json& j, const std::string& field, Diagnostics* diag = nullptr) {
  if (j.is_array() && j.size() == 2) return json_ratio(j[0], j[1], field, diag);
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    const auto slash = s.find('/');
    if (slash == std::string::npos) return Rational(json_integer(j, field));
    return json_ratio(nlohmann::json(s.substr(0, slash)), nlohmann::json(s.substr(slash + 1)), field, diag);
  }
  throw ParseError(field, "expected [num, den], an integer or \"p/q\"");
}

inline nlohmann::json rational_pair(const Rational& r) {
  auto as_json = [](const Integer& i) -> nlohmann::json {
    if (i >= std::numeric_limits<long long>::min() && i <= std::numeric_limits<long long>::max())
      return nlohmann::json(i.convert_to<long long>());
    return nlohmann::json(i.str());
  };
  return nlohmann::json::array({as_json(numerator_of(r)), as_json(denominator_of(r))});
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(path + "/" + key, "missing field");
  return j.at(key);
}

inline std::vector<ScalarAtom> scalar_atoms_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array()) throw ParseError(path, "expected an array of [v_num, v_den, p_num, p_den]");
  std::vector<ScalarAtom> atoms;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = path + "/" + std::to_string(i);
    if (!j[i].is_array() || j[i].size() != 4) throw ParseError(f, "expected [v_num, v_den, p_num, p_den]");
    atoms.push_back({json_ratio(j[i][0], j[i][1], f), json_ratio(j[i][2], j[i][3], f)});
  }
  return atoms;
}

inline nlohmann::json scalar_atoms_to_json(const std::vector<ScalarAtom>& atoms) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& a : atoms) {
    const auto v = rational_pair(a.value);
    const auto p = rational_pair(a.probability);
    out.push_back({v[0], v[1], p[0], p[1]});
  }
  return out;
}

}  // namespace detail

// {"alpha": [1,1], "kmax": 8, "pair_table": [[k,l,num,den],...],
//  "scalar_table": [[k,num,den],...], "diagonal_bounded": true}
inline nlohmann::json profile_to_json(const MomentProfile& p) {
  nlohmann::json j;
  j["alpha"] = detail::rational_pair(p.alpha);
  j["kmax"] = p.kmax;
  j["diagonal_bounded"] = p.diagonal_bounded;
  j["pair_table"] = nlohmann::json::array();
  for (const auto& [key, v] : p.pair_table) {
    const auto r = detail::rational_pair(v);
    j["pair_table"].push_back({key.first, key.second, r[0], r[1]});
  }
  j["scalar_table"] = nlohmann::json::array();
  for (const auto& [k, v] : p.scalar_table) {
    const auto r = detail::rational_pair(v);
    j["scalar_table"].push_back({k, r[0], r[1]});
  }
  return j;
}

// Zero denominators surface as non-finite-value violations (ProfileParseError);
// structural problems as ParseError.
inline MomentProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("", "profile must be an object");
  Diagnostics diag;
  MomentProfile p;
  p.alpha = j.contains("alpha") ? detail::json_rational(j.at("alpha"), "/alpha", &diag) : Rational{1};
  if (j.contains("kmax")) {
    if (!j.at("kmax").is_number_integer()) throw ParseError("/kmax", "expected an integer");
    p.kmax = j.at("kmax").get<int>();
  }
  if (j.contains("diagonal_bounded")) p.diagonal_bounded = j.at("diagonal_bounded").get<bool>();
  if (j.contains("pair_table")) {
    const auto& t = j.at("pair_table");
    if (!t.is_array()) throw ParseError("/pair_table", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string f = "/pair_table/" + std::to_string(i);
      if (!t[i].is_array() || t[i].size() != 4) throw ParseError(f, "expected [k, l, num, den]");
      const int k = t[i][0].get<int>();
      const int l = t[i][1].get<int>();
      if (k < 0 || l < 0 || k + l < 2) throw ParseError(f, "need k, l >= 0 and k + l >= 2");
      p.pair_table[{k, l}] = detail::json_ratio(t[i][2], t[i][3], f, &diag);
    }
  }
  if (j.contains("scalar_table")) {
    const auto& t = j.at("scalar_table");
    if (!t.is_array()) throw ParseError("/scalar_table", "expected an array");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const std::string f = "/scalar_table/" + std::to_string(i);
      if (!t[i].is_array() || t[i].size() != 3) throw ParseError(f, "expected [k, num, den]");
      const int k = t[i][0].get<int>();
      if (k < 2) throw ParseError(f, "need k >= 2");
      p.scalar_table[k] = detail::json_ratio(t[i][1], t[i][2], f, &diag);
    }
  }
  if (!diag.ok()) throw ProfileParseError(diag);
  return p;
}

// Laws:
//   pair:     {"type":"pair", "activation":[q_num,q_den],
//              "atoms":[[xi_num,xi_den,eta_num,eta_den,p_num,p_den],...],
//              "diagonal":[[v_num,v_den,p_num,p_den],...]}
//   scalar:   {"type":"scalar", "activation":..., "scalar_atoms":[[v_num,v_den,p_num,p_den],...], "diagonal":...}
//   gaussian: {"type":"gaussian", "rho": 0.0}
inline nlohmann::json law_to_json(const EntryLaw& law) {
  nlohmann::json j;
  if (const auto* pl = std::get_if<SparsePairLaw>(&law)) {
    j["type"] = "pair";
    j["activation"] = detail::rational_pair(pl->activation);
    j["atoms"] = nlohmann::json::array();
    for (const auto& a : pl->atoms) {
      const auto x = detail::rational_pair(a.xi);
      const auto y = detail::rational_pair(a.eta);
      const auto p = detail::rational_pair(a.probability);
      j["atoms"].push_back({x[0], x[1], y[0], y[1], p[0], p[1]});
    }
    j["diagonal"] = detail::scalar_atoms_to_json(pl->diagonal);
  } else if (const auto* sl = std::get_if<SparseScalarLaw>(&law)) {
    j["type"] = "scalar";
    j["activation"] = detail::rational_pair(sl->activation);
    j["scalar_atoms"] = detail::scalar_atoms_to_json(sl->atoms);
    j["diagonal"] = detail::scalar_atoms_to_json(sl->diagonal);
  } else {
    j["type"] = "gaussian";
    j["rho"] = std::get<GaussianLaw>(law).rho;
  }
  return j;
}

inline EntryLaw law_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("", "law must be an object");
  std::string type;
  if (j.contains("type")) type = j.at("type").get<std::string>();
  else if (j.contains("atoms")) type = "pair";
  else if (j.contains("scalar_atoms")) type = "scalar";
  else throw ParseError("/type", "cannot tell the law type");

  if (type == "gaussian") {
    GaussianLaw g;
    if (j.contains("rho")) g.rho = j.at("rho").get<double>();
    return g;
  }
  const Rational q = j.contains("activation") ? detail::json_rational(j.at("activation"), "/activation") : Rational{1};
  std::vector<ScalarAtom> diagonal;
  if (j.contains("diagonal")) diagonal = detail::scalar_atoms_from_json(j.at("diagonal"), "/diagonal");
  if (type == "pair") {
    SparsePairLaw law;
    law.activation = q;
    law.diagonal = diagonal;
    const auto& atoms = detail::require_field(j, "atoms", "");
    if (!atoms.is_array()) throw ParseError("/atoms", "expected an array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string f = "/atoms/" + std::to_string(i);
      const auto& a = atoms[i];
      if (!a.is_array() || a.size() != 6) throw ParseError(f, "expected [xi_num, xi_den, eta_num, eta_den, p_num, p_den]");
      law.atoms.push_back({detail::json_ratio(a[0], a[1], f), detail::json_ratio(a[2], a[3], f), detail::json_ratio(a[4], a[5], f)});
    }
    return law;
  }
  if (type == "scalar") {
    SparseScalarLaw law;
    law.activation = q;
    law.diagonal = diagonal;
    law.atoms = detail::scalar_atoms_from_json(detail::require_field(j, "scalar_atoms", ""), "/scalar_atoms");
    return law;
  }
  throw ParseError("/type", "unknown law type '" + type + "'");
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path, std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace emrm
