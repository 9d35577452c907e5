#ifndef MRVB_IO_HPP
#define MRVB_IO_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mrvb {

/// A numeric table with identifiers. On disk: a header row whose first cell
/// labels the identifier column, then one row per record starting with its
/// identifier. Tab- or comma-separated, detected from the header.
struct LabeledMatrix {
  std::string corner = "id";
  std::vector<std::string> row_ids;
  std::vector<std::string> col_ids;
  Eigen::MatrixXd values;
};

LabeledMatrix read_matrix(const std::string& path);

/// Tab-separated, 17 significant digits.
void write_matrix(const std::string& path, const LabeledMatrix& m);

/// 17 significant digits, which parse back to the same double.
std::string format_double(double x);

struct LoadedMatrices {
  LabeledMatrix X, Y;                // rows aligned, same identifiers in the same order
  std::vector<std::string> warnings; // dropped identifiers and counts
};

/// Reads X and Y and joins them on row identifier, keeping X's order.
/// Rows present in only one file are dropped with a warning; an empty
/// overlap is an error listing the first mismatches.
LoadedMatrices load_matrices(const std::string& x_path, const std::string& y_path);

}  // namespace mrvb

#endif  // MRVB_IO_HPP
