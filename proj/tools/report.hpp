#ifndef ACHAIN_TOOLS_REPORT_HPP
#define ACHAIN_TOOLS_REPORT_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace achain::cli {

// Empty cells are written as an empty CSV field and as JSON null.
using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add_row(std::vector<Cell> row);
};

using Document = std::vector<Table>;

// Doubles as %.17g; non-finite doubles become empty cells.
std::string format_double(double v);

// One "# name" line, a header and the rows per table; tables separated by a
// blank line.
void write_csv(std::ostream& os, const Document& doc);
// {"name": [{column: value, ...}, ...], ...} with columns in table order.
void write_json(std::ostream& os, const Document& doc);
void write_document(std::ostream& os, const Document& doc, const std::string& format);

}  // namespace achain::cli

#endif  // ACHAIN_TOOLS_REPORT_HPP
