#include "mrvb/oracle.hpp"

#include "mrvb/error.hpp"
#include "mrvb/random.hpp"
#include "mrvb/special_functions.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace mrvb {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Running log-sum-exp in a fixed accumulation order.
struct LogAccumulator {
  double max = kNegInf;
  double sum = 0.0;

  void add(double v) {
    if (v == kNegInf) return;
    if (v > max) {
      sum = sum * std::exp(max - v) + 1.0;
      max = v;
    } else {
      sum += std::exp(v - max);
    }
  }
  double value() const { return max == kNegInf ? kNegInf : max + std::log(sum); }
};

void check_cap(std::size_t p, std::size_t max_p) {
  if (p > max_p) {
    std::ostringstream os;
    os << "exact enumeration is limited to p <= " << max_p << " covariates (2^p subsets per response); got p = "
       << p;
    throw invalid_argument(os.str());
  }
}

double response_constant(double n, double eta, double kappa) {
  return -0.5 * n * std::log(2.0 * std::numbers::pi) + log_gamma(0.5 * n + eta) + eta * std::log(kappa) -
         log_gamma(eta);
}

}  // namespace

void OracleConfig::validate() const {
  if (n_draws < 1) throw invalid_argument("the number of Monte Carlo draws must be at least 1");
  if (max_p > 25) throw invalid_argument("the enumeration cap may not exceed 25 covariates");
}

double log_marginal_response(const Eigen::VectorXd& y, const std::vector<bool>& included, double sigma_inv,
                             const Eigen::MatrixXd& X, double eta, double kappa) {
  if (static_cast<Eigen::Index>(included.size()) != X.cols())
    throw invalid_argument("inclusion mask length must equal the number of covariates");
  if (y.size() != X.rows()) throw invalid_argument("response length must equal the number of rows of X");
  if (!(sigma_inv > 0.0) || !(eta > 0.0) || !(kappa > 0.0))
    throw invalid_argument("sigma^-2, eta and kappa must be positive");
  const double n = static_cast<double>(y.size());
  const double shape = 0.5 * n + eta;
  const double y_sq = y.squaredNorm();
  const double base = response_constant(n, eta, kappa);

  std::vector<Eigen::Index> cols;
  for (Eigen::Index s = 0; s < X.cols(); ++s)
    if (included[static_cast<std::size_t>(s)]) cols.push_back(s);
  if (cols.empty()) return base - shape * std::log(kappa + 0.5 * y_sq);

  const auto q = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd Xg(X.rows(), q);
  for (Eigen::Index j = 0; j < q; ++j) Xg.col(j) = X.col(cols[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd V = Xg.transpose() * Xg;
  V.diagonal().array() += sigma_inv;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) throw numerical_failure("X_g'X_g + sigma^-2 I is numerically singular");

  Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() != Eigen::Success) throw numerical_failure("Cholesky factorization failed");
  const Eigen::VectorXd xty = Xg.transpose() * y;
  const double quad = xty.dot(llt.solve(xty));
  const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double s_sq = std::max(0.0, y_sq - quad);
  return base - 0.5 * log_det - shape * std::log(kappa + 0.5 * s_sq) + 0.5 * static_cast<double>(q) * std::log(sigma_inv);
}

namespace detail {

Enumerator::Enumerator(const Dataset& data, const Hyperparameters& hyper, std::size_t max_p)
    : n_(data.n()), p_(data.p()), d_(data.d()) {
  check_cap(p_, max_p);
  hyper.validate(p_, d_);
  const double n = static_cast<double>(n_);
  y_sq_ = data.Y.colwise().squaredNorm().transpose();
  log_const_.resize(static_cast<Eigen::Index>(d_));
  shape_.resize(static_cast<Eigen::Index>(d_));
  kappa_ = hyper.kappa;
  for (std::size_t t = 0; t < d_; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    log_const_[ti] = response_constant(n, hyper.eta[ti], hyper.kappa[ti]);
    shape_[ti] = 0.5 * n + hyper.eta[ti];
  }

  const std::uint32_t count = 1u << p_;
  subsets_.reserve(count);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    Subset sub;
    sub.mask = mask;
    std::vector<Eigen::Index> cols;
    for (std::size_t s = 0; s < p_; ++s)
      if (mask & (1u << s)) cols.push_back(static_cast<Eigen::Index>(s));
    sub.size = static_cast<int>(cols.size());
    if (!cols.empty()) {
      Eigen::MatrixXd Xg(data.X.rows(), static_cast<Eigen::Index>(cols.size()));
      for (std::size_t j = 0; j < cols.size(); ++j) Xg.col(static_cast<Eigen::Index>(j)) = data.X.col(cols[j]);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Xg.transpose() * Xg);
      sub.eigenvalues = eig.eigenvalues().cwiseMax(0.0);
      sub.rotated = eig.eigenvectors().transpose() * (Xg.transpose() * data.Y);
    }
    subsets_.push_back(std::move(sub));
  }
}

double Enumerator::log_response(std::size_t t, std::uint32_t mask, double sigma_inv) const {
  const auto ti = static_cast<Eigen::Index>(t);
  const Subset& sub = subsets_[mask];
  if (sub.size == 0) return log_const_[ti] - shape_[ti] * std::log(kappa_[ti] + 0.5 * y_sq_[ti]);
  double log_det = 0.0, quad = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int i = 0; i < sub.size; ++i) {
    const double ev = sub.eigenvalues[i] + sigma_inv;
    lo = std::min(lo, ev);
    hi = std::max(hi, ev);
    log_det += std::log(ev);
    const double z = sub.rotated(i, ti);
    quad += z * z / ev;
  }
  if (hi / lo > kMaxCondition) throw numerical_failure("X_g'X_g + sigma^-2 I is numerically singular");
  const double s_sq = std::max(0.0, y_sq_[ti] - quad);
  return log_const_[ti] - 0.5 * log_det - shape_[ti] * std::log(kappa_[ti] + 0.5 * s_sq) +
         0.5 * sub.size * std::log(sigma_inv);
}

DrawMasses Enumerator::masses(double sigma_inv, const Eigen::VectorXd& log_omega,
                              const Eigen::VectorXd& log_1m_omega) const {
  const std::size_t count = subsets_.size();
  const auto p = static_cast<Eigen::Index>(p_);
  const auto d = static_cast<Eigen::Index>(d_);

  // log p(gamma | omega) for every subset.
  std::vector<double> log_prior(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    double acc = 0.0;
    for (Eigen::Index s = 0; s < p; ++s) acc += (mask & (1u << s)) ? log_omega[s] : log_1m_omega[s];
    log_prior[mask] = acc;
  }

  // Determinant and sigma^-2 power are shared by every response.
  std::vector<double> shared(count);
  for (std::size_t mask = 0; mask < count; ++mask) {
    const Subset& sub = subsets_[mask];
    double log_det = 0.0;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int i = 0; i < sub.size; ++i) {
      const double ev = sub.eigenvalues[i] + sigma_inv;
      lo = std::min(lo, ev);
      hi = std::max(hi, ev);
      log_det += std::log(ev);
    }
    if (sub.size > 0 && hi / lo > kMaxCondition)
      throw numerical_failure("X_g'X_g + sigma^-2 I is numerically singular");
    shared[mask] = -0.5 * log_det + 0.5 * sub.size * std::log(sigma_inv) + log_prior[mask];
  }

  DrawMasses out;
  out.log_full.resize(d);
  out.log_with.resize(p, d);
  out.log_without.resize(p, d);
  std::vector<double> values(count);
  std::vector<double> with(p_), without(p_);
  for (Eigen::Index t = 0; t < d; ++t) {
    double top = kNegInf;
    for (std::size_t mask = 0; mask < count; ++mask) {
      const Subset& sub = subsets_[mask];
      double quad = 0.0;
      for (int i = 0; i < sub.size; ++i) {
        const double z = sub.rotated(i, t);
        quad += z * z / (sub.eigenvalues[i] + sigma_inv);
      }
      const double s_sq = std::max(0.0, y_sq_[t] - quad);
      values[mask] = log_const_[t] - shape_[t] * std::log(kappa_[t] + 0.5 * s_sq) + shared[mask];
      top = std::max(top, values[mask]);
    }
    std::fill(with.begin(), with.end(), 0.0);
    std::fill(without.begin(), without.end(), 0.0);
    double full = 0.0;
    for (std::size_t mask = 0; mask < count; ++mask) {
      const double w = std::exp(values[mask] - top);
      full += w;
      for (std::size_t s = 0; s < p_; ++s) (mask & (1u << s) ? with[s] : without[s]) += w;
    }
    out.log_full[t] = top + std::log(full);
    for (Eigen::Index s = 0; s < p; ++s) {
      const auto su = static_cast<std::size_t>(s);
      out.log_with(s, t) = with[su] > 0.0 ? top + std::log(with[su]) : kNegInf;
      out.log_without(s, t) = without[su] > 0.0 ? top + std::log(without[su]) : kNegInf;
    }
  }
  return out;
}

}  // namespace detail

OracleSummary oracle_summary(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config) {
  config.validate();
  const detail::Enumerator en(data, hyper, config.max_p);
  const auto p = static_cast<Eigen::Index>(data.p());
  const auto d = static_cast<Eigen::Index>(data.d());

  Rng rng(config.seed);
  std::gamma_distribution<double> sigma_draw(hyper.lambda, 1.0 / hyper.nu);
  Eigen::VectorXd log_omega(p), log_1m_omega(p);

  std::vector<double> log_joint(config.n_draws);
  LogAccumulator evidence;
  std::vector<LogAccumulator> ppi_acc(static_cast<std::size_t>(p * d));
  std::vector<LogAccumulator> omega_acc(static_cast<std::size_t>(p));

  for (std::size_t i = 0; i < config.n_draws; ++i) {
    double sigma_inv = sigma_draw(rng);
    // Tiny shapes can underflow to zero; the density there is negligible.
    sigma_inv = std::max(sigma_inv, std::numeric_limits<double>::min());
    for (Eigen::Index s = 0; s < p; ++s) {
      const auto draw = log_beta_variate(hyper.a[s], hyper.b[s], rng);
      log_omega[s] = draw.log_p;
      log_1m_omega[s] = draw.log_1mp;
    }
    const detail::DrawMasses m = en.masses(sigma_inv, log_omega, log_1m_omega);
    const double total = m.log_full.sum();
    log_joint[i] = total;
    evidence.add(total);
    for (Eigen::Index t = 0; t < d; ++t) {
      const double rest = total - m.log_full[t];
      for (Eigen::Index s = 0; s < p; ++s)
        ppi_acc[static_cast<std::size_t>(t * p + s)].add(rest + m.log_with(s, t));
    }
    for (Eigen::Index s = 0; s < p; ++s) omega_acc[static_cast<std::size_t>(s)].add(total + log_omega[s]);
  }

  OracleSummary out;
  const double log_i = std::log(static_cast<double>(config.n_draws));
  const double log_sum = evidence.value();
  out.log_evidence.log_value = log_sum - log_i;

  // Jackknife over draws on the log scale.
  const std::size_t I = config.n_draws;
  if (I > 1) {
    const double top = evidence.max;
    double w_total = 0.0;
    for (double v : log_joint) w_total += std::exp(v - top);
    std::vector<double> loo(I);
    double mean = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      const double rest = w_total - std::exp(log_joint[i] - top);
      loo[i] = rest > 0.0 ? top + std::log(rest / static_cast<double>(I - 1)) : kNegInf;
      mean += loo[i];
    }
    mean /= static_cast<double>(I);
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    out.log_evidence.std_error = std::isfinite(mean)
                                     ? std::sqrt(static_cast<double>(I - 1) / static_cast<double>(I) * ss)
                                     : std::numeric_limits<double>::infinity();
  } else {
    out.log_evidence.std_error = std::numeric_limits<double>::infinity();
  }

  out.ppi.resize(p, d);
  for (Eigen::Index t = 0; t < d; ++t)
    for (Eigen::Index s = 0; s < p; ++s)
      out.ppi(s, t) = std::min(1.0, std::exp(ppi_acc[static_cast<std::size_t>(t * p + s)].value() - log_sum));
  out.omega_mean.resize(p);
  for (Eigen::Index s = 0; s < p; ++s)
    out.omega_mean[s] = std::exp(omega_acc[static_cast<std::size_t>(s)].value() - log_sum);
  return out;
}

McEstimate log_marginal_likelihood_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config) {
  return oracle_summary(data, hyper, config).log_evidence;
}

double ppi_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config, std::size_t s,
              std::size_t t) {
  if (s >= data.p() || t >= data.d()) throw invalid_argument("covariate or response index out of range");
  return oracle_summary(data, hyper, config).ppi(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
}

double omega_mean_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config, std::size_t s) {
  if (s >= data.p()) throw invalid_argument("covariate index out of range");
  return oracle_summary(data, hyper, config).omega_mean[static_cast<Eigen::Index>(s)];
}

TightnessReport make_tightness_report(const McEstimate& evidence, double elbo) {
  TightnessReport r;
  r.log_evidence = evidence.log_value;
  r.std_error = evidence.std_error;
  r.elbo = elbo;
  r.relative_gap = (r.log_evidence - r.elbo) / std::abs(r.log_evidence);
  r.log10_relative_gap = r.relative_gap > 0.0 ? std::log10(r.relative_gap) : std::numeric_limits<double>::quiet_NaN();
  r.bound_holds = r.log_evidence + 3.0 * r.std_error >= r.elbo;
  return r;
}

TightnessReport elbo_tightness(const Dataset& data, const Hyperparameters& hyper, const FitResult& fit,
                               const OracleConfig& config) {
  if (fit.elbo_trace.empty()) throw invalid_argument("fit result carries no lower bound");
  return make_tightness_report(log_marginal_likelihood_mc(data, hyper, config), fit.elbo());
}

}  // namespace mrvb
