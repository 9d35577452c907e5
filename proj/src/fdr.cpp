#include "mrvb/fdr.hpp"

#include "mrvb/error.hpp"
#include "mrvb/random.hpp"
#include "parallel.hpp"

#include <math.h>  // boost 1.74 pchip calls unqualified isnan
#include <boost/math/interpolators/pchip.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <string>

namespace mrvb {

namespace {

constexpr std::uint64_t kPermutationStream = 0xf0;

void validate_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw invalid_argument("threshold grid is empty");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!(grid[k] > 0.0 && grid[k] < 1.0)) throw invalid_argument("threshold grid values must lie in (0, 1)");
    if (k > 0 && !(grid[k] > grid[k - 1])) throw invalid_argument("threshold grid must be strictly increasing");
  }
}

void validate_permutation(const std::vector<std::size_t>& perm, std::size_t n) {
  if (perm.size() != n) throw invalid_argument("permutation length must equal n");
  std::vector<char> seen(n, 0);
  for (std::size_t i : perm) {
    if (i >= n || seen[i]) throw invalid_argument("row order is not a permutation of 0..n-1");
    seen[i] = 1;
  }
}

// Pool-adjacent-violators for a non-increasing fit with unit weights.
std::vector<double> isotonic_non_increasing(const std::vector<double>& y) {
  std::vector<double> level;
  std::vector<std::size_t> width;
  for (double v : y) {
    level.push_back(v);
    width.push_back(1);
    while (level.size() > 1 && level[level.size() - 2] < level.back()) {
      const std::size_t w = width[width.size() - 2] + width.back();
      const double merged = (level[level.size() - 2] * width[width.size() - 2] + level.back() * width.back()) / w;
      level.pop_back();
      width.pop_back();
      level.back() = merged;
      width.back() = w;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (std::size_t b = 0; b < level.size(); ++b) out.insert(out.end(), width[b], level[b]);
  return out;
}

}  // namespace

double median(std::vector<double> values) {
  if (values.empty()) throw invalid_argument("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid(50);
  for (std::size_t k = 0; k < grid.size(); ++k) grid[k] = 0.01 + 0.98 * static_cast<double>(k) / 49.0;
  return grid;
}

std::vector<std::size_t> exceedance_counts(const Eigen::MatrixXd& ppi, const std::vector<double>& grid) {
  std::vector<double> values(ppi.data(), ppi.data() + ppi.size());
  std::sort(values.begin(), values.end());
  std::vector<std::size_t> counts(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto above = std::upper_bound(values.begin(), values.end(), grid[k]);
    counts[k] = static_cast<std::size_t>(values.end() - above);
  }
  return counts;
}

PermutationRun permute_and_refit(const ModelSpec& spec, const FitConfig& config, const Eigen::MatrixXd& observed_ppi,
                                 const std::vector<std::vector<std::size_t>>& permutations, std::vector<double> grid,
                                 std::size_t workers) {
  validate_grid(grid);
  config.validate();
  if (permutations.empty()) throw invalid_argument("at least one permutation is required");
  const std::size_t n = spec.dataset.n();
  if (observed_ppi.rows() != static_cast<Eigen::Index>(spec.dataset.p()) ||
      observed_ppi.cols() != static_cast<Eigen::Index>(spec.dataset.d()))
    throw invalid_argument("observed ppi must be p x d");
  for (const auto& perm : permutations) validate_permutation(perm, n);

  PermutationRun run;
  run.B = permutations.size();
  run.observed = exceedance_counts(observed_ppi, grid);
  run.permuted.resize(run.B);

  detail::parallel_for(run.B, workers, [&](std::size_t b) {
    Dataset shuffled = spec.dataset;
    for (std::size_t i = 0; i < n; ++i)
      shuffled.Y.row(static_cast<Eigen::Index>(i)) = spec.dataset.Y.row(static_cast<Eigen::Index>(permutations[b][i]));
    try {
      const ModelSpec permuted_spec(std::move(shuffled), spec.hyper, spec.p_star);
      const FitResult fitted = fit(permuted_spec, config);
      run.permuted[b] = exceedance_counts(fitted.ppi, grid);
    } catch (const Error& e) {
      throw Error(e.kind(), "permutation " + std::to_string(b + 1) + ": " + e.what());
    }
  });
  run.grid = std::move(grid);
  return run;
}

PermutationRun permute_and_refit(const ModelSpec& spec, const FitConfig& config, const Eigen::MatrixXd& observed_ppi,
                                 std::size_t B, std::uint64_t seed, std::vector<double> grid, std::size_t workers) {
  if (B == 0) throw invalid_argument("B must be at least 1");
  const std::size_t n = spec.dataset.n();
  std::vector<std::vector<std::size_t>> perms(B, std::vector<std::size_t>(n));
  for (std::size_t b = 0; b < B; ++b) {
    std::iota(perms[b].begin(), perms[b].end(), 0);
    Rng rng(derive_seed(seed, kPermutationStream, b));
    std::shuffle(perms[b].begin(), perms[b].end(), rng);
  }
  PermutationRun run = permute_and_refit(spec, config, observed_ppi, perms, std::move(grid), workers);
  run.seed = seed;
  return run;
}

std::vector<FdrPoint> empirical_fdr_curve(const PermutationRun& run) {
  const std::size_t K = run.grid.size();
  std::vector<FdrPoint> curve(K);
  std::vector<double> column(run.permuted.size());
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t b = 0; b < run.permuted.size(); ++b) column[b] = static_cast<double>(run.permuted[b][k]);
    curve[k].tau = run.grid[k];
    if (run.observed[k] == 0) {
      curve[k].fdr = 0.0;
      curve[k].no_discoveries = true;
      continue;
    }
    const double ratio = median(column) / static_cast<double>(run.observed[k]);
    curve[k].fdr = std::clamp(ratio, 0.0, 1.0);
  }
  return curve;
}

std::optional<double> threshold_for_fdr(const std::vector<FdrPoint>& curve, double target) {
  if (curve.size() < 4) throw invalid_argument("threshold_for_fdr needs at least 4 curve points");
  if (!(target >= 0.0 && target <= 1.0)) throw invalid_argument("target fdr must lie in [0, 1]");
  std::vector<double> tau, raw;
  for (const FdrPoint& pt : curve) {
    if (pt.no_discoveries) continue;
    if (!tau.empty() && !(pt.tau > tau.back())) throw invalid_argument("curve thresholds must be strictly increasing");
    tau.push_back(pt.tau);
    raw.push_back(pt.fdr);
  }
  if (tau.empty()) return std::nullopt;
  const std::vector<double> fdr = isotonic_non_increasing(raw);
  if (fdr.front() <= target) return tau.front();
  if (fdr.back() > target) return std::nullopt;

  std::size_t k = 0;
  while (fdr[k + 1] > target) ++k;

  // Monotone cubic when enough points survive, linear otherwise.
  std::function<double(double)> f;
  if (tau.size() >= 4) {
    auto spline = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(
        std::vector<double>(tau), std::vector<double>(fdr));
    f = [spline](double x) { return (*spline)(x); };
  } else {
    const double x0 = tau[k], x1 = tau[k + 1], y0 = fdr[k], y1 = fdr[k + 1];
    f = [=](double x) { return y0 + (y1 - y0) * (x - x0) / (x1 - x0); };
  }
  double lo = tau[k], hi = tau[k + 1];
  for (int it = 0; it < 200 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) <= target)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

Eigen::VectorXd adaptive_column_thresholds(const Eigen::MatrixXd& ppi, double tau) {
  if (ppi.size() == 0) throw invalid_argument("ppi matrix is empty");
  const double global = median(std::vector<double>(ppi.data(), ppi.data() + ppi.size()));
  if (!(global > 0.0)) throw invalid_argument("global median ppi is zero; adaptive thresholds are undefined");
  Eigen::VectorXd out(ppi.cols());
  for (Eigen::Index t = 0; t < ppi.cols(); ++t) {
    const auto col = ppi.col(t);
    out[t] = tau * median(std::vector<double>(col.data(), col.data() + col.size())) / global;
  }
  return out;
}

Declaration declare_associations(const Eigen::MatrixXd& ppi, const Eigen::VectorXd& column_thresholds) {
  if (column_thresholds.size() != ppi.cols()) throw invalid_argument("one threshold per response is required");
  Declaration out;
  out.pairs_per_covariate.assign(static_cast<std::size_t>(ppi.rows()), 0);
  for (Eigen::Index s = 0; s < ppi.rows(); ++s)
    for (Eigen::Index t = 0; t < ppi.cols(); ++t)
      if (ppi(s, t) > column_thresholds[t]) {
        out.pairs.emplace_back(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
        ++out.pairs_per_covariate[static_cast<std::size_t>(s)];
      }
  for (std::size_t s = 0; s < out.pairs_per_covariate.size(); ++s)
    if (out.pairs_per_covariate[s] > 0) out.active_covariates.push_back(s);
  return out;
}

Declaration declare_associations(const Eigen::MatrixXd& ppi, double tau) {
  return declare_associations(ppi, Eigen::VectorXd::Constant(ppi.cols(), tau));
}

}  // namespace mrvb
