#pragma once

#include "cvxnn/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace cvxnn {

struct DataSplit {
  Dataset train;
  std::optional<Dataset> test;
};

/// Piecewise-constant staircase target: four unit-width steps with unit rises on
/// [-2, 2], centred at zero (levels -1.5, -0.5, 0.5, 1.5).
double staircase_target(double x);
inline constexpr double staircase_lo = -2.0;
inline constexpr double staircase_hi = 2.0;

/// toy1d: 15 points uniform on [-1, 1], random labels.
/// toy2d: 34 points uniform on [-2, 2]^2, label sign(x1 x2 + 0.3) with 10% flipped.
/// staircase: 8 training and 100 test points uniform on [-2, 2].
/// No bias column is appended here.
DataSplit gen_toy(const std::string& name, std::uint64_t seed);

struct CsvOptions {
  std::string label_col;
  double train_frac = 0.7;
  bool standardize = true;
  std::uint64_t seed = 0;
  TaskKind task = TaskKind::binary;
};

/// Reads a numeric CSV with a header row. Empty fields, "?", "NA" and "NaN" count as
/// missing and drop the whole row. Rows are shuffled with the seed, split by
/// train_frac (rounded to the nearest count), and optionally z-scored with train
/// statistics. Binary labels map the smaller value to -1 and the larger to +1.
DataSplit ingest_csv(const std::string& path, const CsvOptions& options);
DataSplit ingest_csv_stream(std::istream& in, const CsvOptions& options);

/// Complete rows in file order, labels mapped as in ingest_csv, no standardization.
Dataset read_dataset_csv(std::istream& in, const std::string& label_col, TaskKind task);
/// Header x0..x{d-1},y; values printed with 17 significant digits so reading back is exact.
void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Synthetic stand-in for the mammographic masses table: 961 rows, columns
/// BI-RADS, Age, Shape, Margin, Density, Severity, with 131 rows carrying a "?".
void write_masses_standin(std::ostream& out, std::uint64_t seed = 1);

}  // namespace cvxnn
