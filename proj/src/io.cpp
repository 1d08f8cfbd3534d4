#include "local/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace local {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open for reading: " + path);
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, const std::string& path, int lineno) {
  try {
    size_t consumed = 0;
    double v = std::stod(s, &consumed);
    while (consumed < s.size() && std::isspace(static_cast<unsigned char>(s[consumed])))
      ++consumed;
    if (consumed != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CsvError(path + ":" + std::to_string(lineno) + ": malformed number '" + s + "'");
  }
}

}  // namespace

void write_matrix_csv(const std::string& path, const Matrix& m) {
  auto out = open_out(path);
  for (int i = 0; i < m.rows; ++i) {
    for (int j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_field(f, path, lineno));
    if (!rows.empty() && row.size() != rows[0].size())
      throw CsvError(path + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(rows[0].size()) + " fields, got " +
                     std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw CsvError(path + ": empty matrix file");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  return m;
}

void write_series_csv(const std::string& path, const Matrix& series) {
  auto out = open_out(path);
  for (int j = 0; j < series.cols; ++j) {
    if (j) out << ',';
    out << "x" << j;
  }
  out << '\n';
  for (int i = 0; i < series.rows; ++i) {
    for (int j = 0; j < series.cols; ++j) {
      if (j) out << ',';
      out << format_double(series(i, j));
    }
    out << '\n';
  }
}

std::vector<Matrix> read_series_csv(const std::string& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path + ": missing header");
  auto header = split_fields(line);
  if (header.empty()) throw CsvError(path + ": empty header");
  bool has_id = header[0] == "series_id";
  size_t d = header.size() - (has_id ? 1 : 0);
  if (d == 0) throw CsvError(path + ": no variable columns");

  std::map<long, std::vector<std::vector<double>>> groups;  // keeps id order stable
  std::vector<std::vector<double>> single;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw CsvError(path + ":" + std::to_string(lineno) + ": expected " +
                     std::to_string(header.size()) + " fields, got " +
                     std::to_string(fields.size()));
    std::vector<double> row(d);
    for (size_t j = 0; j < d; ++j)
      row[j] = parse_field(fields[j + (has_id ? 1 : 0)], path, lineno);
    if (has_id) {
      long id = static_cast<long>(parse_field(fields[0], path, lineno));
      groups[id].push_back(std::move(row));
    } else {
      single.push_back(std::move(row));
    }
  }
  std::vector<std::vector<std::vector<double>>> blocks;
  if (has_id)
    for (auto& [id, rows] : groups) blocks.push_back(std::move(rows));
  else
    blocks.push_back(std::move(single));

  std::vector<Matrix> out;
  for (auto& rows : blocks) {
    if (rows.empty()) continue;
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(d));
    for (size_t i = 0; i < rows.size(); ++i)
      for (size_t j = 0; j < d; ++j) m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
    out.push_back(std::move(m));
  }
  if (out.empty()) throw CsvError(path + ": no data rows");
  return out;
}

}  // namespace local
