#ifndef MRVB_FDR_HPP
#define MRVB_FDR_HPP

#include "mrvb/cavi.hpp"
#include "mrvb/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace mrvb {

struct PermutationRun {
  std::size_t B = 0;
  std::vector<double> grid;                          // strictly increasing in (0, 1)
  std::vector<std::size_t> observed;                 // #{ppi > tau_k} on the original data
  std::vector<std::vector<std::size_t>> permuted;    // B rows of K counts
  std::uint64_t seed = 0;
};

/// 50 equispaced thresholds from 0.01 to 0.99.
std::vector<double> default_threshold_grid();

/// #{(s, t): ppi(s, t) > tau} for each tau in grid.
std::vector<std::size_t> exceedance_counts(const Eigen::MatrixXd& ppi, const std::vector<double>& grid);

/// Refits on B copies of the data with the rows of Y permuted jointly.
/// Permutation b uses a stream derived from (seed, b), so the run does not
/// depend on `workers`.
PermutationRun permute_and_refit(const ModelSpec& spec, const FitConfig& config, const Eigen::MatrixXd& observed_ppi,
                                 std::size_t B, std::uint64_t seed, std::vector<double> grid = default_threshold_grid(),
                                 std::size_t workers = 1);

/// Same, with caller-supplied row permutations (each a permutation of 0..n-1).
PermutationRun permute_and_refit(const ModelSpec& spec, const FitConfig& config, const Eigen::MatrixXd& observed_ppi,
                                 const std::vector<std::vector<std::size_t>>& permutations, std::vector<double> grid,
                                 std::size_t workers = 1);

struct FdrPoint {
  double tau = 0.0;
  double fdr = 0.0;
  bool no_discoveries = false;  // observed count was zero; fdr reported as 0
};

/// median_b(permuted count) / observed count, clipped to [0, 1].
std::vector<FdrPoint> empirical_fdr_curve(const PermutationRun& run);

/// Smallest tau whose smoothed fdr is <= target. The curve is made
/// non-increasing by isotonic regression and interpolated with a monotone
/// cubic. Points without discoveries are left out of the fit. Requires at
/// least 4 points; returns nullopt when the target is not reached on the grid.
std::optional<double> threshold_for_fdr(const std::vector<FdrPoint>& curve, double target);

/// tau * median_s(ppi(., t)) / median(ppi) for each column t.
Eigen::VectorXd adaptive_column_thresholds(const Eigen::MatrixXd& ppi, double tau);

struct Declaration {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (s, t) with ppi > threshold
  std::vector<std::size_t> pairs_per_covariate;            // length p
  std::vector<std::size_t> active_covariates;              // s with at least one pair
};

Declaration declare_associations(const Eigen::MatrixXd& ppi, double tau);
Declaration declare_associations(const Eigen::MatrixXd& ppi, const Eigen::VectorXd& column_thresholds);

double median(std::vector<double> values);

}  // namespace mrvb

#endif  // MRVB_FDR_HPP
