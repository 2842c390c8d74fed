#pragma once

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speckle/montecarlo/estimators.hpp"

namespace speckle::mc {

inline constexpr const char* kReportSchema = "speckle-report/1";
inline constexpr double kZPass = 3.0;

/// How a row is judged.
enum class Check {
  ZScore,    // |z| <= 3
  Relative,  // |emp - theory| <= tol |theory|
  Absolute,  // |emp - theory| <= tol
  Below,     // emp < tol
  Above,     // emp > tol
  Margin,    // |emp - theory| <= tol + 3 SE
  Info,      // recorded, never fails
};

inline std::string to_string(Check c) {
  switch (c) {
    case Check::ZScore: return "zscore";
    case Check::Relative: return "relative";
    case Check::Absolute: return "absolute";
    case Check::Below: return "below";
    case Check::Above: return "above";
    case Check::Margin: return "margin";
    case Check::Info: return "info";
  }
  return "?";
}

struct ComparisonRow {
  std::string quantity;
  EstimatorResult empirical;
  double theoretical = 0.0;
  double z_score = 0.0;
  Check check = Check::ZScore;
  double tolerance = 0.0;
  bool pass = true;
  /// Theory operation the row tests.
  std::string provenance;
};

/// Plot-ready side data (scatter points, curves).
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ComparisonReport {
  std::string suite;
  std::vector<ComparisonRow> rows;
  std::vector<Table> tables;
  std::vector<std::string> notes;

  /// Appends a row and fills in z and the verdict.
  ComparisonRow& add(EstimatorResult emp, double theory, std::string provenance, Check check = Check::ZScore,
                     double tolerance = 0.0) {
    ComparisonRow r;
    r.quantity = emp.name;
    r.empirical = std::move(emp);
    r.theoretical = theory;
    r.check = check;
    r.tolerance = tolerance;
    r.provenance = std::move(provenance);
    const double diff = r.empirical.value - theory;
    if (r.empirical.std_error > 0.0) {
      r.z_score = diff / r.empirical.std_error;
    } else if (check != Check::ZScore) {
      r.z_score = 0.0;
    } else {
      r.z_score = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
    }
    switch (check) {
      case Check::ZScore: r.pass = std::abs(r.z_score) <= kZPass; break;
      case Check::Relative: r.pass = std::abs(diff) <= tolerance * std::abs(theory); break;
      case Check::Absolute: r.pass = std::abs(diff) <= tolerance; break;
      case Check::Below: r.pass = r.empirical.value < tolerance; break;
      case Check::Above: r.pass = r.empirical.value > tolerance; break;
      case Check::Margin: r.pass = std::abs(diff) <= tolerance + kZPass * r.empirical.std_error; break;
      case Check::Info: r.pass = true; break;
    }
    if (!std::isfinite(r.empirical.value)) r.pass = check == Check::Info;
    rows.push_back(std::move(r));
    return rows.back();
  }

  bool passed() const {
    for (const auto& r : rows)
      if (!r.pass) return false;
    return true;
  }
  std::size_t failures() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.pass ? 0 : 1;
    return n;
  }
  const ComparisonRow* find(const std::string& quantity) const {
    for (const auto& r : rows)
      if (r.quantity == quantity) return &r;
    return nullptr;
  }
  const Table* table(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }
  void append(const ComparisonReport& other) {
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
    tables.insert(tables.end(), other.tables.begin(), other.tables.end());
    notes.insert(notes.end(), other.notes.begin(), other.notes.end());
  }
};

/// Harness self-test: moves the theory value of the first row with a nonzero
/// standard error by `sigmas` standard errors and re-judges it as a z-score row.
/// Returns false when no such row exists.
inline bool inject_failure(ComparisonReport& r, double sigmas = 10.0) {
  for (auto& row : r.rows) {
    if (!(row.empirical.std_error > 0.0)) continue;
    ComparisonReport tmp;
    tmp.add(row.empirical, row.theoretical + sigmas * row.empirical.std_error, row.provenance + " [injected]");
    row = tmp.rows.front();
    return true;
  }
  return false;
}

namespace internal {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace internal

/// RFC 4180 CSV, one line per row.
inline void write_report_csv(std::ostream& out, const ComparisonReport& r) {
  out << "suite,quantity,empirical,std_error,n_eff,theoretical,z_score,check,tolerance,pass,provenance\r\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& row : r.rows) {
    line.str("");
    line << internal::csv_field(r.suite) << ',' << internal::csv_field(row.quantity) << ',' << row.empirical.value
         << ',' << row.empirical.std_error << ',' << row.empirical.n_eff << ',' << row.theoretical << ','
         << row.z_score << ',' << to_string(row.check) << ',' << row.tolerance << ',' << (row.pass ? 1 : 0) << ','
         << internal::csv_field(row.provenance) << "\r\n";
    out << line.str();
  }
}

inline void write_table_csv(std::ostream& out, const Table& t) {
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << internal::csv_field(t.columns[c]);
  out << "\r\n" << std::setprecision(17);
  for (const auto& row : t.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
    out << "\r\n";
  }
}

inline nlohmann::json report_to_json(const ComparisonReport& r) {
  nlohmann::json j;
  j["schema"] = kReportSchema;
  j["suite"] = r.suite;
  j["passed"] = r.passed();
  j["failures"] = r.failures();
  j["rows"] = nlohmann::json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"quantity", row.quantity},
                         {"empirical", internal::number(row.empirical.value)},
                         {"std_error", internal::number(row.empirical.std_error)},
                         {"n_eff", internal::number(row.empirical.n_eff)},
                         {"theoretical", internal::number(row.theoretical)},
                         {"z_score", internal::number(row.z_score)},
                         {"check", to_string(row.check)},
                         {"tolerance", row.tolerance},
                         {"pass", row.pass},
                         {"provenance", row.provenance}});
  }
  j["tables"] = nlohmann::json::array();
  for (const auto& t : r.tables) j["tables"].push_back({{"name", t.name}, {"columns", t.columns}, {"rows", t.rows.size()}});
  j["notes"] = r.notes;
  return j;
}

/// Structural check of a report document; returns an empty string when valid.
inline std::string validate_report_json(const nlohmann::json& j) {
  if (!j.is_object()) return "report is not an object";
  if (j.value("schema", "") != kReportSchema) return "schema tag missing or unknown";
  for (const char* key : {"suite", "passed", "failures", "rows", "notes"})
    if (!j.contains(key)) return std::string("missing key ") + key;
  if (!j["rows"].is_array()) return "rows is not an array";
  for (const auto& row : j["rows"]) {
    for (const char* key : {"quantity", "empirical", "std_error", "theoretical", "z_score", "check", "pass",
                            "provenance"})
      if (!row.contains(key)) return std::string("row lacks ") + key;
    if (!row["pass"].is_boolean()) return "row pass is not boolean";
  }
  return {};
}

}  // namespace speckle::mc
