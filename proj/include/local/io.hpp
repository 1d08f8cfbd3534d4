#pragma once

#include <string>
#include <vector>

#include "local/matrix.hpp"

namespace local {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense headerless CSV with 17 significant digits (lossless round-trip).
void write_matrix_csv(const std::string& path, const Matrix& m);
Matrix read_matrix_csv(const std::string& path);

/// series.csv: header of variable names, one row per time step. An optional
/// leading `series_id` column splits the file into multiple series.
void write_series_csv(const std::string& path, const Matrix& series);
std::vector<Matrix> read_series_csv(const std::string& path);

std::string format_double(double v);

}  // namespace local
