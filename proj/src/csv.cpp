#include "drcate/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "drcate/errors.hpp"

namespace drcate::csv {

std::size_t Table::column_index(std::string_view name) const {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw SchemaError("missing column '" + std::string(name) + "'");
}

std::vector<std::vector<std::string>> parse(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  bool at_line_start = true;
  bool skipping_comment = false;

  auto end_record = [&] {
    if (field_started || !record.empty()) {
      record.push_back(std::move(field));
      records.push_back(std::move(record));
    }
    record.clear();
    field.clear();
    field_started = false;
    at_line_start = true;
  };

  char c;
  while (in.get(c)) {
    if (skipping_comment) {
      if (c == '\n') {
        skipping_comment = false;
        at_line_start = true;
      }
      continue;
    }
    if (at_line_start && c == '#' && records.empty()) {
      skipping_comment = true;
      continue;
    }
    at_line_start = false;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw SchemaError("unterminated quoted field at end of input");
  end_record();
  return records;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  auto records = parse(in);
  if (records.empty()) throw SchemaError("'" + path.string() + "' has no header row");
  Table table;
  table.header = std::move(records.front());
  table.rows.assign(std::make_move_iterator(records.begin() + 1),
                    std::make_move_iterator(records.end()));
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw SchemaError("'" + path.string() + "' row " + std::to_string(r + 1) + " has " +
                        std::to_string(table.rows[r].size()) + " fields, header has " +
                        std::to_string(table.header.size()));
    }
  }
  return table;
}

Matrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  auto records = parse(in);
  if (records.empty()) throw SchemaError("'" + path.string() + "' is empty");
  const auto cols = records.front().size();
  Matrix m(static_cast<Index>(records.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].size() != cols) {
      throw SchemaError("'" + path.string() + "' row " + std::to_string(r + 1) +
                        " has a different number of fields than row 1");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_double(records[r][c], r + 1, std::to_string(c + 1));
    }
  }
  return m;
}

double parse_double(std::string_view cell, std::size_t row, const std::string& column) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
  const std::string where = " at row " + std::to_string(row) + ", column '" + column + "'";
  if (cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan") {
    throw ParseError("missing value" + where, row, column);
  }
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw ParseError("non-numeric value '" + std::string(cell) + "'" + where, row, column);
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") != std::string::npos) {
      out << '"';
      for (char c : f) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << f;
    }
  }
  out << '\n';
}

void write_matrix(std::ostream& out, const Matrix& m) {
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
}

}  // namespace drcate::csv
