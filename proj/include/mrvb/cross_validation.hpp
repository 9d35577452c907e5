#ifndef MRVB_CROSS_VALIDATION_HPP
#define MRVB_CROSS_VALIDATION_HPP

#include "mrvb/cavi.hpp"
#include "mrvb/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mrvb {

enum class CvObjective {
  predictive_density,  // mean held-out log N(y_it; x_i' beta_bar_t, 1/E[tau_t])
  training_elbo        // lower bound of the fit on the training split
};

struct CvConfig {
  std::size_t folds = 3;
  std::uint64_t seed = 1;
  CvObjective objective = CvObjective::predictive_density;
  std::size_t workers = 1;  // concurrent (p_star, fold) cells
};

struct CvRow {
  double p_star = 0.0;
  std::vector<std::optional<double>> fold_scores;  // nullopt: the fit failed
  std::vector<std::string> fold_errors;
  double mean_score = 0.0;                         // NaN when any fold failed
  bool failed = false;
};

struct CvResult {
  double selected = 0.0;
  std::vector<CvRow> table;  // one row per grid value, in grid order
};

/// Grid search over p_star with k-fold cross-validation. Standardization is
/// recomputed on each training split and applied to the held-out rows. Ties
/// go to the smaller p_star; a p_star with any failed fold is not eligible.
CvResult cross_validate_pstar(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y,
                              const std::vector<double>& grid, const PriorSettings& prior, const FitConfig& fit_config,
                              const CvConfig& cv_config);

/// Fold label for each of n rows: a seeded shuffle dealt round-robin.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

}  // namespace mrvb

#endif  // MRVB_CROSS_VALIDATION_HPP
