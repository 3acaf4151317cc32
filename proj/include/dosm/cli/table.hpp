#pragma once

// Tabular output: "# key: value" metadata lines, then a header row and data
// rows, either comma-separated or space-aligned.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dosm::cli {

enum class Format { csv, table };

/// A cell is empty, an integer, a real, or text.
using Cell = std::variant<std::monostate, long long, double, std::string>;

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }

  std::optional<std::string> meta_value(const std::string& key) const {
    for (const auto& [k, v] : meta) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

  int column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
  }
};

struct RenderOptions {
  Format format = Format::csv;
  bool full_precision = false;
  int decimals = 3;
};

inline std::string format_double(double v, const RenderOptions& opt) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  if (opt.full_precision) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.*f", opt.decimals, v);
    if (std::string(buf).find_first_not_of("-0.") == std::string::npos) std::snprintf(buf, sizeof buf, "%.*f", opt.decimals, 0.0);
  }
  return buf;
}

inline std::string format_cell(const Cell& c, const RenderOptions& opt) {
  if (std::holds_alternative<std::monostate>(c)) return "";
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&c)) return format_double(*d, opt);
  return std::get<std::string>(c);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string render(const Table& t, const RenderOptions& opt = {}) {
  std::ostringstream os;
  for (const auto& [k, v] : t.meta) os << "# " << k << ": " << v << '\n';
  std::vector<std::vector<std::string>> text;
  text.push_back(t.columns);
  for (const auto& row : t.rows) {
    std::vector<std::string> line;
    for (const auto& c : row) line.push_back(format_cell(c, opt));
    line.resize(t.columns.size());
    text.push_back(std::move(line));
  }
  if (opt.format == Format::csv) {
    for (const auto& line : text) {
      for (std::size_t i = 0; i < line.size(); ++i) os << (i ? "," : "") << csv_escape(line[i]);
      os << '\n';
    }
    return os.str();
  }
  std::vector<std::size_t> width(t.columns.size(), 0);
  for (const auto& line : text) {
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size() ? line[i].size() : 1);
  }
  for (const auto& line : text) {
    std::string out;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const std::string cell = line[i].empty() ? "-" : line[i];
      if (i) out += "  ";
      out += std::string(width[i] - cell.size(), ' ') + cell;
    }
    os << out << '\n';
  }
  return os.str();
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w == "-" ? "" : w);
  return out;
}

inline Cell parse_cell(const std::string& s) {
  if (s.empty()) return std::monostate{};
  const bool integral = s.find_first_not_of("-0123456789") == std::string::npos && s != "-";
  if (integral) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
  }
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  return s;
}

}  // namespace detail

/// Inverse of render(): recovers metadata, columns and typed cells.
inline Table parse_table(const std::string& text, Format format = Format::csv) {
  Table t;
  std::istringstream is(text);
  bool header = true;
  for (std::string line; std::getline(is, line);) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      const auto colon = line.find(": ", 2);
      if (colon == std::string::npos) {
        t.add_meta(line.substr(2), "");
      } else {
        t.add_meta(line.substr(2, colon - 2), line.substr(colon + 2));
      }
      continue;
    }
    auto fields = format == Format::csv ? detail::split_csv_line(line) : detail::split_ws(line);
    if (header) {
      t.columns = std::move(fields);
      header = false;
      continue;
    }
    std::vector<Cell> row;
    for (const auto& f : fields) row.push_back(detail::parse_cell(f));
    row.resize(t.columns.size());
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace dosm::cli
