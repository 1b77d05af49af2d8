#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "emrm/estimator.hpp"
#include "emrm/rational.hpp"

namespace emrm {

inline constexpr double kDefaultZThreshold = 4.0;

enum class Quantity { mean, covariance, moment, exact };

inline std::string_view to_string(Quantity q) {
  switch (q) {
    case Quantity::mean: return "mean";
    case Quantity::covariance: return "covariance";
    case Quantity::moment: return "moment";
    case Quantity::exact: return "exact";
  }
  return "?";
}

// One comparison target.  mean rows read E[Tr(A^k)/N] (times `scale`),
// covariance rows Cov(Z(k), Z(l)); exact rows compare predicted and oracle
// by rational equality and carry no empirical value.
struct Prediction {
  Quantity quantity = Quantity::covariance;
  int k = 0;
  int l = 0;
  int n = 0;
  Rational predicted{0};
  std::optional<SurdValue> oracle;
  double scale = 1.0;
  bool informational = false;
  std::string note;
};

struct ReportRow {
  Quantity quantity = Quantity::covariance;
  int n = 0;
  int k = 0;
  int l = 0;
  Rational predicted{0};
  std::optional<SurdValue> oracle;
  std::optional<double> empirical;
  std::optional<double> stderr_value;
  std::optional<double> zscore;
  bool pass = false;
  bool informational = false;
  bool degenerate = false;
  std::string note;
};

struct Report {
  nlohmann::json config = nlohmann::json::object();
  std::vector<ReportRow> rows;

  // Informational rows never decide the outcome.
  bool passed() const {
    for (const auto& r : rows)
      if (!r.informational && !r.pass) return false;
    return true;
  }
};

// Row for an empirical estimate; SE = 0 with a mismatch is degenerate and fails.
inline ReportRow make_row(const Prediction& p, double empirical, double se, double threshold) {
  ReportRow row;
  row.quantity = p.quantity;
  row.n = p.n;
  row.k = p.k;
  row.l = p.l;
  row.predicted = p.predicted;
  row.oracle = p.oracle;
  row.informational = p.informational;
  row.note = p.note;
  row.empirical = empirical;
  row.stderr_value = se;
  const double diff = empirical - to_double(p.predicted);
  if (se > 0.0 && std::isfinite(se)) {
    row.zscore = diff / se;
    row.pass = std::abs(*row.zscore) <= threshold;
  } else if (diff == 0.0) {
    row.zscore = 0.0;
    row.pass = true;
  } else {
    row.degenerate = true;
    row.pass = false;
  }
  return row;
}

inline ReportRow make_exact_row(const Prediction& p) {
  ReportRow row;
  row.quantity = Quantity::exact;
  row.n = p.n;
  row.k = p.k;
  row.l = p.l;
  row.predicted = p.predicted;
  row.oracle = p.oracle;
  row.informational = p.informational;
  row.note = p.note;
  row.pass = p.oracle.has_value() && *p.oracle == SurdValue(p.predicted);
  return row;
}

inline std::vector<ReportRow> compare_report(const SampleStats& stats, const std::vector<Prediction>& predictions,
                                             double threshold = kDefaultZThreshold) {
  std::vector<ReportRow> rows;
  for (const auto& p : predictions) {
    switch (p.quantity) {
      case Quantity::mean: {
        if (p.k < 1 || p.k > stats.kmax) throw InvalidArgumentError("mean row outside the recorded trace powers");
        rows.push_back(make_row(p, stats.mean(p.k - 1) * p.scale, stats.mean_se(p.k - 1) * std::abs(p.scale), threshold));
        break;
      }
      case Quantity::covariance: {
        if (p.k < 1 || p.l < 1 || p.k > stats.kmax || p.l > stats.kmax)
          throw InvalidArgumentError("covariance row outside the recorded trace powers");
        rows.push_back(make_row(p, stats.covariance(p.k - 1, p.l - 1), stats.covariance_se(p.k - 1, p.l - 1), threshold));
        break;
      }
      case Quantity::moment: throw InvalidArgumentError("moment rows are built with make_row");
      case Quantity::exact: rows.push_back(make_exact_row(p)); break;
    }
  }
  return rows;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string pass_label(const ReportRow& r) {
  if (r.informational) return "info";
  return r.pass ? "true" : "false";
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "k,l,predicted,oracle,empirical,stderr,zscore,pass\n";
  for (const auto& r : rows) {
    out << r.k << ',' << r.l << ',' << to_string(r.predicted) << ',';
    if (r.oracle) out << r.oracle->to_string();
    out << ',';
    if (r.empirical) out << detail::format_double(*r.empirical);
    out << ',';
    if (r.stderr_value) out << detail::format_double(*r.stderr_value);
    out << ',';
    if (r.zscore) out << detail::format_double(*r.zscore);
    else if (r.degenerate) out << "degenerate";
    out << ',' << detail::pass_label(r) << '\n';
  }
}

inline nlohmann::json row_to_json(const ReportRow& r) {
  nlohmann::json j;
  j["quantity"] = std::string(to_string(r.quantity));
  j["n"] = r.n;
  j["k"] = r.k;
  j["l"] = r.l;
  j["predicted"] = to_string(r.predicted);
  j["predicted_value"] = to_double(r.predicted);
  if (r.oracle) {
    j["oracle"] = r.oracle->to_string();
    j["oracle_value"] = r.oracle->to_double();
  } else {
    j["oracle"] = nullptr;
  }
  j["empirical"] = r.empirical ? nlohmann::json(*r.empirical) : nlohmann::json(nullptr);
  j["stderr"] = r.stderr_value ? nlohmann::json(*r.stderr_value) : nlohmann::json(nullptr);
  j["zscore"] = r.zscore ? nlohmann::json(*r.zscore) : nlohmann::json(nullptr);
  j["pass"] = r.pass;
  j["informational"] = r.informational;
  j["degenerate"] = r.degenerate;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline nlohmann::json report_to_json(const Report& report) {
  nlohmann::json j;
  j["schema"] = 1;
  j["config"] = report.config;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : report.rows) j["rows"].push_back(row_to_json(r));
  j["passed"] = report.passed();
  return j;
}

}  // namespace emrm
