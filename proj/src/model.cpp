#include "mrvb/model.hpp"

#include "mrvb/error.hpp"
#include "mrvb/special_functions.hpp"

#include <cmath>
#include <sstream>

namespace mrvb {

namespace {

void check_finite(const Eigen::MatrixXd& m, const char* name) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream os;
        os << "non-finite entry in " << name << " at row " << i + 1 << ", column " << j + 1;
        throw data_error(os.str());
      }
    }
  }
}

bool all_positive_finite(const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) return false;
  return true;
}

}  // namespace

Dataset standardize_inputs(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y,
                           Standardization* stats) {
  const Eigen::Index n = raw_X.rows();
  if (raw_Y.rows() != n) throw invalid_argument("X and Y must have the same number of rows");
  if (n < 2) throw data_error("at least two samples are required");
  if (raw_X.cols() < 1 || raw_Y.cols() < 1) throw data_error("X and Y need at least one column each");
  check_finite(raw_X, "X");
  check_finite(raw_Y, "Y");

  Dataset out;
  out.X.resize(n, raw_X.cols());
  out.Y.resize(n, raw_Y.cols());
  Standardization local;
  local.x_mean.resize(raw_X.cols());
  local.x_sd.resize(raw_X.cols());
  local.y_mean.resize(raw_Y.cols());

  for (Eigen::Index s = 0; s < raw_X.cols(); ++s) {
    const double mean = raw_X.col(s).mean();
    Eigen::VectorXd centered = raw_X.col(s).array() - mean;
    const double var = centered.squaredNorm() / static_cast<double>(n - 1);
    // Relative test so that columns with large offsets still count as constant.
    const double scale = std::max(1.0, raw_X.col(s).cwiseAbs().maxCoeff());
    if (!(var > 1e-24 * scale * scale)) {
      std::ostringstream os;
      os << "constant column " << s + 1;
      throw data_error(os.str());
    }
    const double sd = std::sqrt(var);
    out.X.col(s) = centered / sd;
    // A second centering pass removes the round-off left by the first one.
    out.X.col(s).array() -= out.X.col(s).mean();
    local.x_mean[s] = mean;
    local.x_sd[s] = sd;
  }
  for (Eigen::Index t = 0; t < raw_Y.cols(); ++t) {
    const double mean = raw_Y.col(t).mean();
    out.Y.col(t) = raw_Y.col(t).array() - mean;
    out.Y.col(t).array() -= out.Y.col(t).mean();
    local.y_mean[t] = mean;
  }
  out.column_norms_sq = out.X.colwise().squaredNorm().transpose();
  if (stats) *stats = std::move(local);
  return out;
}

void Hyperparameters::validate(std::size_t p, std::size_t d) const {
  if (static_cast<std::size_t>(a.size()) != p || static_cast<std::size_t>(b.size()) != p)
    throw invalid_argument("hyperparameters a and b must have length p");
  if (static_cast<std::size_t>(eta.size()) != d || static_cast<std::size_t>(kappa.size()) != d)
    throw invalid_argument("hyperparameters eta and kappa must have length d");
  if (!all_positive_finite(a) || !all_positive_finite(b) || !all_positive_finite(eta) ||
      !all_positive_finite(kappa))
    throw invalid_argument("hyperparameters must be strictly positive and finite");
  if (!(lambda > 0.0) || !(nu > 0.0) || !std::isfinite(lambda) || !std::isfinite(nu))
    throw invalid_argument("lambda and nu must be strictly positive and finite");
}

Hyperparameters PriorSettings::expand(std::size_t p, std::size_t d) const {
  Hyperparameters h;
  if (p_star) {
    auto ab = corrected_hyperparameters(p, d, *p_star);
    h.a = std::move(ab.a);
    h.b = std::move(ab.b);
  } else {
    h.a = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), a);
    h.b = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(p), b);
  }
  h.eta = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), eta);
  h.kappa = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), kappa);
  h.lambda = lambda;
  h.nu = nu;
  h.validate(p, d);
  return h;
}

ModelSpec::ModelSpec(Dataset data, Hyperparameters h, std::optional<double> pstar)
    : dataset(std::move(data)), hyper(std::move(h)), p_star(pstar) {
  hyper.validate(dataset.p(), dataset.d());
  if (p_star && !(*p_star > 0.0 && *p_star < static_cast<double>(dataset.p())))
    throw invalid_argument("p_star must lie in (0, p)");
  if (dataset.n() < 2) throw invalid_argument("at least two samples are required");
}

BetaPrior corrected_hyperparameters(std::size_t p, std::size_t d, double p_star) {
  const double pd = static_cast<double>(p);
  if (!(p_star > 0.0 && p_star < pd)) {
    std::ostringstream os;
    os << "p_star must lie in (0, " << p << "), got " << p_star;
    throw invalid_argument(os.str());
  }
  if (d < 1) throw invalid_argument("d must be at least 1");
  const auto pi = static_cast<Eigen::Index>(p);
  BetaPrior out;
  out.a = Eigen::VectorXd::Ones(pi);
  out.b = Eigen::VectorXd::Constant(pi, static_cast<double>(d) * (pd - p_star) / p_star);
  return out;
}

double prior_activation_probability(double a, double b, std::size_t d) {
  if (!(a > 0.0) || !(b > 0.0)) throw invalid_argument("a and b must be positive");
  if (d < 1) throw invalid_argument("d must be at least 1");
  // log prod_j (b + d - j)/(a + b + d - j), term by term.
  double log_ratio = 0.0;
  const double dd = static_cast<double>(d);
  for (std::size_t j = 1; j <= d; ++j)
    log_ratio += std::log1p(-a / (a + b + dd - static_cast<double>(j)));
  return -std::expm1(log_ratio);
}

double prior_odds_ratio(double a, double b, std::size_t d, std::size_t q) {
  if (!(a > 0.0) || !(b > 0.0)) throw invalid_argument("a and b must be positive");
  if (q < 1 || q > d) {
    std::ostringstream os;
    os << "q must lie in 1.." << d << ", got " << q;
    throw invalid_argument(os.str());
  }
  return (b + static_cast<double>(d) - static_cast<double>(q)) / (a + static_cast<double>(q) - 1.0);
}

}  // namespace mrvb
