#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace achain::cli {

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns.size()) {
    throw std::logic_error("table '" + name + "': row has " + std::to_string(row.size()) +
                           " cells, expected " + std::to_string(columns.size()));
  }
  rows.push_back(std::move(row));
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const { return format_double(v); }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, c);
}

std::string json_cell(const Cell& c) {
  struct Visitor {
    std::string operator()(std::monostate) const { return "null"; }
    std::string operator()(std::int64_t v) const { return std::to_string(v); }
    std::string operator()(double v) const {
      const std::string s = format_double(v);
      return s.empty() ? "null" : s;
    }
    std::string operator()(const std::string& s) const { return nlohmann::json(s).dump(); }
  };
  return std::visit(Visitor{}, c);
}

}  // namespace

void write_csv(std::ostream& os, const Document& doc) {
  for (std::size_t t = 0; t < doc.size(); ++t) {
    const Table& table = doc[t];
    if (t > 0) os << '\n';
    os << "# " << table.name << '\n';
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
      os << (i ? "," : "") << table.columns[i];
    }
    os << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_cell(row[i]);
      os << '\n';
    }
  }
}

void write_json(std::ostream& os, const Document& doc) {
  os << "{\n";
  for (std::size_t t = 0; t < doc.size(); ++t) {
    const Table& table = doc[t];
    os << "  " << nlohmann::json(table.name).dump() << ": [";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      os << (r ? ",\n    {" : "\n    {");
      for (std::size_t i = 0; i < table.columns.size(); ++i) {
        os << (i ? ", " : "") << nlohmann::json(table.columns[i]).dump() << ": "
           << json_cell(table.rows[r][i]);
      }
      os << '}';
    }
    os << (table.rows.empty() ? "]" : "\n  ]") << (t + 1 < doc.size() ? ",\n" : "\n");
  }
  os << "}\n";
}

void write_document(std::ostream& os, const Document& doc, const std::string& format) {
  if (format == "json") {
    write_json(os, doc);
  } else {
    write_csv(os, doc);
  }
}

}  // namespace achain::cli
