#include "mrvb/cross_validation.hpp"

#include "mrvb/error.hpp"
#include "mrvb/random.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace mrvb {

namespace {

constexpr std::uint64_t kFoldStream = 0xcf;

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
  return out;
}

double score_cell(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y, const std::vector<std::size_t>& fold_of,
                  std::size_t fold, double p_star, const PriorSettings& prior, const FitConfig& fit_config,
                  CvObjective objective) {
  std::vector<Eigen::Index> train, test;
  for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == fold ? test : train).push_back(static_cast<Eigen::Index>(i));

  Standardization stats;
  Dataset data = standardize_inputs(take_rows(raw_X, train), take_rows(raw_Y, train), &stats);
  PriorSettings settings = prior;
  settings.p_star = p_star;
  Hyperparameters hyper = settings.expand(data.p(), data.d());
  const ModelSpec spec(std::move(data), std::move(hyper), p_star);
  const FitResult fitted = fit(spec, fit_config);
  if (objective == CvObjective::training_elbo) return fitted.elbo();

  Eigen::MatrixXd X_test = take_rows(raw_X, test);
  X_test.rowwise() -= stats.x_mean.transpose();
  X_test = X_test * stats.x_sd.cwiseInverse().asDiagonal();
  Eigen::MatrixXd Y_test = take_rows(raw_Y, test);
  Y_test.rowwise() -= stats.y_mean.transpose();

  const Eigen::MatrixXd resid = Y_test - X_test * fitted.beta_mean;
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  double total = 0.0;
  for (Eigen::Index t = 0; t < resid.cols(); ++t) {
    const double tau = fitted.tau_mean[t];
    total += static_cast<double>(resid.rows()) * 0.5 * (std::log(tau) - log_2pi) -
             0.5 * tau * resid.col(t).squaredNorm();
  }
  return total / static_cast<double>(resid.size());
}

}  // namespace

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw invalid_argument("at least 2 folds are required");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, kFoldStream));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t k = 0; k < n; ++k) fold_of[order[k]] = k % folds;
  return fold_of;
}

CvResult cross_validate_pstar(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y,
                              const std::vector<double>& grid, const PriorSettings& prior, const FitConfig& fit_config,
                              const CvConfig& cv_config) {
  if (grid.empty()) throw invalid_argument("p_star grid is empty");
  if (raw_X.rows() != raw_Y.rows()) throw invalid_argument("X and Y must have the same number of rows");
  const auto n = static_cast<std::size_t>(raw_X.rows());
  const auto p = static_cast<double>(raw_X.cols());
  if (cv_config.folds < 2) throw invalid_argument("at least 2 folds are required");
  if (n < 3 * cv_config.folds) throw invalid_argument("cross-validation needs n >= 3 * folds");
  for (double v : grid)
    if (!(v > 0.0 && v < p)) throw invalid_argument("p_star grid values must lie in (0, p)");
  fit_config.validate();

  const std::vector<std::size_t> fold_of = assign_folds(n, cv_config.folds, cv_config.seed);
  const std::size_t K = cv_config.folds;

  CvResult result;
  result.table.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    result.table[g].p_star = grid[g];
    result.table[g].fold_scores.assign(K, std::nullopt);
    result.table[g].fold_errors.assign(K, std::string());
  }

  detail::parallel_for(grid.size() * K, cv_config.workers, [&](std::size_t cell) {
    const std::size_t g = cell / K, k = cell % K;
    try {
      result.table[g].fold_scores[k] =
          score_cell(raw_X, raw_Y, fold_of, k, grid[g], prior, fit_config, cv_config.objective);
    } catch (const Error& e) {
      result.table[g].fold_errors[k] = e.what();
    }
  });

  std::optional<std::size_t> best;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CvRow& row = result.table[g];
    double sum = 0.0;
    for (const auto& s : row.fold_scores) {
      if (!s || !std::isfinite(*s)) row.failed = true;
      else sum += *s;
    }
    row.mean_score = row.failed ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(K);
    if (row.failed) continue;
    const CvRow* incumbent = best ? &result.table[*best] : nullptr;
    if (!incumbent || row.mean_score > incumbent->mean_score ||
        (row.mean_score == incumbent->mean_score && row.p_star < incumbent->p_star))
      best = g;
  }
  if (!best) throw numerical_failure("every p_star in the grid had a failed fold");
  result.selected = result.table[*best].p_star;
  return result;
}

}  // namespace mrvb
