#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace ouphase {

/// Rectangular numeric output table. NaN marks an unavailable cell; `flags`
/// carries a per-row note when an inner operation refused a cell. An
/// optional leading text column handles per-filter listings.
struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> flags;
  std::string label_column;
  std::vector<std::string> labels;

  bool has_flags() const {
    for (const auto& f : flags)
      if (!f.empty()) return true;
    return false;
  }
};

/// 17-significant-digit rendering; round-trips every double.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// CSV: '#'-prefixed metadata lines, comma delimiter, one header row.
inline void write_csv(std::ostream& os, const DataTable& t,
                      const std::vector<std::string>& meta) {
  for (const auto& m : meta) os << "# " << m << "\n";
  bool first = true;
  if (!t.label_column.empty()) {
    os << t.label_column;
    first = false;
  }
  for (const auto& c : t.columns) {
    if (!first) os << ",";
    os << c;
    first = false;
  }
  os << ",flag\n";
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    first = true;
    if (!t.label_column.empty()) {
      os << (i < t.labels.size() ? t.labels[i] : "");
      first = false;
    }
    for (double v : t.rows[i]) {
      if (!first) os << ",";
      os << format_g17(v);
      first = false;
    }
    os << "," << (i < t.flags.size() ? t.flags[i] : "") << "\n";
  }
}

/// JSON mirror of the CSV: metadata object plus rows as an array of objects.
inline void write_json(std::ostream& os, const DataTable& t,
                       const nlohmann::json& meta) {
  nlohmann::json doc;
  doc["meta"] = meta;
  nlohmann::json cols = nlohmann::json::array();
  if (!t.label_column.empty()) cols.push_back(t.label_column);
  for (const auto& c : t.columns) cols.push_back(c);
  cols.push_back("flag");
  doc["columns"] = cols;
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    nlohmann::json row;
    if (!t.label_column.empty()) {
      row[t.label_column] = i < t.labels.size() ? t.labels[i] : "";
    }
    for (std::size_t j = 0; j < t.columns.size(); ++j) {
      const double v = t.rows[i][j];
      if (std::isnan(v)) {
        row[t.columns[j]] = nullptr;
      } else {
        row[t.columns[j]] = v;
      }
    }
    row["flag"] = i < t.flags.size() ? t.flags[i] : "";
    rows.push_back(row);
  }
  doc["rows"] = rows;
  os << doc.dump(2) << "\n";
}

}  // namespace ouphase
