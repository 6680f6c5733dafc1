#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "drcate/types.hpp"

namespace drcate::csv {

// Parsed RFC-4180 text. Leading lines starting with '#' are skipped so that
// files written with a config header can be read back.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Position of a named column; throws SchemaError when absent.
  std::size_t column_index(std::string_view name) const;
};

std::vector<std::vector<std::string>> parse(std::istream& in);

Table read_table(const std::filesystem::path& path);

// Headerless numeric matrix, one CSV record per row.
Matrix read_matrix(const std::filesystem::path& path);

// Strict numeric parse; empty cells and trailing junk raise ParseError with
// the 1-based data row and the column name.
double parse_double(std::string_view cell, std::size_t row, const std::string& column);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

void write_matrix(std::ostream& out, const Matrix& m);

}  // namespace drcate::csv
