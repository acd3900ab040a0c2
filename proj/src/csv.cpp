#include "nougat/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "nougat/errors.hpp"

namespace nougat::csv {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

std::string make_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

void write_header(std::ostream& os, const std::vector<std::string>& names) {
  os << make_row(names) << '\n';
}

void write_values(std::ostream& os, const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  os << out << '\n';
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::vector<double> parse_numeric_row(const std::string& line, std::size_t line_no) {
  std::vector<double> out;
  for (const std::string& cell : split(line)) {
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && (*b == ' ' || *b == '\t')) ++b;
    const char* stop = e;
    while (stop > b && (stop[-1] == ' ' || stop[-1] == '\t' || stop[-1] == '\r')) --stop;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(b, stop, v);
    if (ec != std::errc() || ptr != stop || b == stop) {
      throw DataError("line " + std::to_string(line_no) + ": cannot parse '" + cell +
                      "' as a number");
    }
    out.push_back(v);
  }
  return out;
}

Table read_table(std::istream& is) {
  Table t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line);
      continue;
    }
    if (!have_header) {
      t.header = split(line);
      have_header = true;
      continue;
    }
    t.rows.push_back(parse_numeric_row(line, line_no));
  }
  if (!have_header) throw DataError("empty CSV input: no header row found");
  return t;
}

Table read_table_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open '" + path + "'");
  return read_table(f);
}

Eigen::MatrixXd Table::matrix() const {
  if (rows.empty()) return Eigen::MatrixXd(0, static_cast<Eigen::Index>(header.size()));
  const std::size_t cols = rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != cols) {
      throw DataError("row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                      " columns, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace nougat::csv
