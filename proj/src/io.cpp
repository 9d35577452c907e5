#include "mrvb/io.hpp"

#include "mrvb/error.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <unordered_map>

namespace mrvb {

namespace {

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  for (std::string& cell : out) {
    const auto first = cell.find_first_not_of(" \"");
    const auto last = cell.find_last_not_of(" \"");
    cell = first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
  }
  return out;
}

bool parse_double(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

LabeledMatrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path + ": " + std::strerror(errno));

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (!line.empty()) break;
  }
  if (line.empty()) throw data_error(path + ": file is empty");
  const char delim = line.find('\t') != std::string::npos ? '\t' : ',';

  LabeledMatrix m;
  std::vector<std::string> header = split(line, delim);
  if (header.size() < 2) throw data_error(path + ":" + std::to_string(line_no) + ": header has no data columns");
  m.corner = header.front();
  m.col_ids.assign(header.begin() + 1, header.end());
  const std::size_t width = header.size();

  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    strip_cr(line);
    if (line.empty()) continue;
    std::vector<std::string> cells = split(line, delim);
    if (cells.size() != width)
      throw data_error(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(width) +
                       " fields, found " + std::to_string(cells.size()));
    const std::size_t row = m.row_ids.size() + 1;
    m.row_ids.push_back(cells.front());
    for (std::size_t j = 1; j < width; ++j) {
      double v = 0.0;
      if (!parse_double(cells[j], v))
        throw data_error(path + ": non-numeric value '" + cells[j] + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(j) + " (" + m.col_ids[j - 1] + ", line " +
                         std::to_string(line_no) + ")");
      values.push_back(v);
    }
  }
  if (m.row_ids.empty()) throw data_error(path + ": no data rows");

  const auto rows = static_cast<Eigen::Index>(m.row_ids.size());
  const auto cols = static_cast<Eigen::Index>(m.col_ids.size());
  m.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(),
                                                                                                     rows, cols);
  return m;
}

void write_matrix(const std::string& path, const LabeledMatrix& m) {
  if (static_cast<Eigen::Index>(m.row_ids.size()) != m.values.rows() ||
      static_cast<Eigen::Index>(m.col_ids.size()) != m.values.cols())
    throw invalid_argument("identifier counts do not match the matrix shape");
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path + ": " + std::strerror(errno));
  out << m.corner;
  for (const auto& c : m.col_ids) out << '\t' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.row_ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << '\t' << format_double(m.values(i, j));
    out << '\n';
  }
  if (!out) throw io_error("write failed for " + path);
}

LoadedMatrices load_matrices(const std::string& x_path, const std::string& y_path) {
  LoadedMatrices out;
  LabeledMatrix X = read_matrix(x_path);
  LabeledMatrix Y = read_matrix(y_path);

  auto index_of = [](const LabeledMatrix& m, const std::string& path) {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < m.row_ids.size(); ++i)
      if (!idx.emplace(m.row_ids[i], i).second) throw data_error(path + ": duplicate row identifier '" + m.row_ids[i] + "'");
    return idx;
  };
  const auto x_index = index_of(X, x_path);
  const auto y_index = index_of(Y, y_path);

  std::vector<std::size_t> x_rows, y_rows;
  std::vector<std::string> mismatches;
  for (std::size_t i = 0; i < X.row_ids.size(); ++i) {
    const auto it = y_index.find(X.row_ids[i]);
    if (it == y_index.end()) {
      mismatches.push_back(X.row_ids[i] + " (only in X)");
      continue;
    }
    x_rows.push_back(i);
    y_rows.push_back(it->second);
  }
  std::size_t only_y = 0;
  for (const auto& id : Y.row_ids)
    if (!x_index.count(id)) {
      mismatches.push_back(id + " (only in Y)");
      ++only_y;
    }
  const std::size_t only_x = X.row_ids.size() - x_rows.size();

  if (x_rows.empty()) {
    std::string msg = "no sample identifiers shared by " + x_path + " and " + y_path + "; first mismatches:";
    for (std::size_t i = 0; i < mismatches.size() && i < 5; ++i) msg += " " + mismatches[i];
    throw data_error(msg);
  }
  if (only_x > 0)
    out.warnings.push_back("dropped " + std::to_string(only_x) + " sample(s) present only in " + x_path);
  if (only_y > 0)
    out.warnings.push_back("dropped " + std::to_string(only_y) + " sample(s) present only in " + y_path);

  auto take = [](const LabeledMatrix& m, const std::vector<std::size_t>& rows) {
    LabeledMatrix r;
    r.corner = m.corner;
    r.col_ids = m.col_ids;
    r.values.resize(static_cast<Eigen::Index>(rows.size()), m.values.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      r.row_ids.push_back(m.row_ids[rows[i]]);
      r.values.row(static_cast<Eigen::Index>(i)) = m.values.row(static_cast<Eigen::Index>(rows[i]));
    }
    return r;
  };
  out.X = take(X, x_rows);
  out.Y = take(Y, y_rows);
  return out;
}

}  // namespace mrvb
