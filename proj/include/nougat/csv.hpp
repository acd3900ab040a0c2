#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace nougat::csv {

// Shortest-exact decimal rendering is not required by the file contract;
// 17 significant digits round-trip any IEEE double bit-exactly.
std::string format_double(double v);

// Join cells with commas, no trailing newline.
std::string make_row(const std::vector<std::string>& cells);

void write_header(std::ostream& os, const std::vector<std::string>& names);
void write_values(std::ostream& os, const std::vector<double>& values);

// Numeric CSV table: optional '#' comment lines, one header row, then
// rows of doubles. Parse failures carry the 1-based line number.
struct Table {
  std::vector<std::string> header;
  std::vector<std::string> comments;          // leading '#' lines, verbatim
  std::vector<std::vector<double>> rows;

  Eigen::MatrixXd matrix() const;              // rows x cols, ragged -> DataError
};

Table read_table(std::istream& is);
Table read_table_file(const std::string& path);

// Parse one comma-separated line of doubles.
std::vector<double> parse_numeric_row(const std::string& line, std::size_t line_no);

std::vector<std::string> split(const std::string& line, char sep = ',');

}  // namespace nougat::csv
