#include "mrvb/cavi.hpp"

#include "mrvb/error.hpp"
#include "mrvb/random.hpp"
#include "mrvb/special_functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

namespace mrvb {

namespace {

double n_minus_one(const ModelSpec& spec) { return static_cast<double>(spec.dataset.n()) - 1.0; }

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// Sweep over responses [t_begin, t_end). Column t only reads column t of the
// state plus quantities that stay frozen during the sweep, so disjoint ranges
// can run concurrently.
void sweep_range(VariationalState& st, const ModelSpec& spec, Eigen::Index t_begin, Eigen::Index t_end) {
  const Eigen::MatrixXd& X = spec.dataset.X;
  const double nm1 = n_minus_one(spec);
  const Eigen::Index p = X.cols();
  for (Eigen::Index s = 0; s < p; ++s) {
    const auto xs = X.col(s);
    const double prior_logit = st.log_omega[s] - st.log_1m_omega[s];
    for (Eigen::Index t = t_begin; t < t_end; ++t) {
      auto r = st.residual.col(t);
      const double b_old = st.gamma(s, t) * st.mu(s, t);
      const double s2 = st.s2(s, t);
      const double xr = xs.dot(r) + nm1 * b_old;
      const double mu = s2 * st.tau_mean[t] * xr;
      const double logit = prior_logit + 0.5 * (st.log_tau_mean[t] + st.log_sigma_inv_mean) +
                           0.5 * std::log(s2) + 0.5 * mu * mu / s2;
      if (!std::isfinite(mu) || std::isnan(logit)) {
        std::ostringstream os;
        os << "non-finite slab mean or inclusion logit at covariate " << s + 1 << ", response " << t + 1;
        throw numerical_failure(os.str());
      }
      const double g = stable_sigmoid(logit);
      st.mu(s, t) = mu;
      st.gamma(s, t) = g;
      const double delta = g * mu - b_old;
      if (delta != 0.0) r.noalias() -= delta * xs;
    }
  }
}

std::size_t resolve_workers(const FitConfig& config, std::size_t d) {
  if (!config.parallel_responses) return 1;
  std::size_t w = config.workers;
  if (w == 0) w = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(w, d));
}

}  // namespace

void FitConfig::validate() const {
  if (!(tol > 0.0)) throw invalid_argument("tol must be positive");
  if (maxit < 1) throw invalid_argument("maxit must be at least 1");
  if (n_restarts < 1) throw invalid_argument("n_restarts must be at least 1");
}

VariationalState init_state(const ModelSpec& spec, std::uint64_t seed, std::size_t restart_index) {
  const auto& h = spec.hyper;
  const Eigen::Index p = static_cast<Eigen::Index>(spec.dataset.p());
  const Eigen::Index d = static_cast<Eigen::Index>(spec.dataset.d());
  const double dd = static_cast<double>(d);

  VariationalState st;
  st.mu = Eigen::MatrixXd::Zero(p, d);
  st.gamma.resize(p, d);
  for (Eigen::Index s = 0; s < p; ++s) st.gamma.row(s).setConstant(h.a[s] / (h.a[s] + h.b[s] + dd));

  if (restart_index > 0) {
    Rng rng(derive_seed(seed, 0x1417, restart_index));
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    std::normal_distribution<double> slab(0.0, 0.1);
    for (Eigen::Index t = 0; t < d; ++t) {
      for (Eigen::Index s = 0; s < p; ++s) {
        const double g = st.gamma(s, t);
        st.gamma(s, t) = stable_sigmoid(std::log(g) - std::log1p(-g) + jitter(rng));
        st.mu(s, t) = slab(rng);
      }
    }
  }

  st.eta_star = h.eta;
  st.kappa_star = h.kappa;
  st.tau_mean = h.eta.cwiseQuotient(h.kappa);
  st.log_tau_mean.resize(d);
  for (Eigen::Index t = 0; t < d; ++t) st.log_tau_mean[t] = digamma(h.eta[t]) - std::log(h.kappa[t]);
  st.lambda_star = h.lambda;
  st.nu_star = h.nu;
  st.sigma_inv_mean = h.lambda / h.nu;
  st.log_sigma_inv_mean = digamma(h.lambda) - std::log(h.nu);

  update_slab_variance(st, spec);
  update_omega(st, spec);
  refresh_residual(st, spec);
  return st;
}

void update_sigma_inv(VariationalState& st, const ModelSpec& spec) {
  const double gamma_sum = st.gamma.sum();
  const Eigen::MatrixXd second = (st.s2 + st.mu.cwiseProduct(st.mu)).cwiseProduct(st.gamma);
  const double weighted = (second.colwise().sum().transpose().cwiseProduct(st.tau_mean)).sum();
  st.lambda_star = spec.hyper.lambda + 0.5 * gamma_sum;
  st.nu_star = spec.hyper.nu + 0.5 * weighted;
  st.sigma_inv_mean = st.lambda_star / st.nu_star;
  st.log_sigma_inv_mean = digamma(st.lambda_star) - std::log(st.nu_star);
}

void update_tau(VariationalState& st, const ModelSpec& spec) {
  const auto& h = spec.hyper;
  const double n = static_cast<double>(spec.dataset.n());
  const double nm1 = n_minus_one(spec);
  const Eigen::Index d = st.gamma.cols();
  for (Eigen::Index t = 0; t < d; ++t) {
    const auto g = st.gamma.col(t);
    const auto m = st.mu.col(t);
    const double gamma_sum = g.sum();
    const double b_sq = (g.cwiseProduct(m)).squaredNorm();
    const double second = (g.cwiseProduct(st.s2.col(t) + m.cwiseProduct(m))).sum();
    // Cross terms sum_{s<j} b_s b_j X_s'X_j enter through the residual:
    // 1/2||y - Xb||^2 - 1/2 sum_s b_s^2 ||X_s||^2 = 1/2||y||^2 - y'Xb + sum_{s<j} ...
    const double kappa = h.kappa[t] + 0.5 * st.residual.col(t).squaredNorm() - 0.5 * nm1 * b_sq +
                         0.5 * second * (nm1 + st.sigma_inv_mean);
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
      std::ostringstream os;
      os << "Gamma rate for response " << t + 1 << " is not positive (" << kappa << ")";
      throw numerical_failure(os.str());
    }
    st.eta_star[t] = h.eta[t] + 0.5 * n + 0.5 * gamma_sum;
    st.kappa_star[t] = kappa;
    st.tau_mean[t] = st.eta_star[t] / kappa;
    st.log_tau_mean[t] = digamma(st.eta_star[t]) - std::log(kappa);
  }
}

void update_slab_variance(VariationalState& st, const ModelSpec& spec) {
  const Eigen::Index p = static_cast<Eigen::Index>(spec.dataset.p());
  const Eigen::Index d = static_cast<Eigen::Index>(spec.dataset.d());
  const double denom = n_minus_one(spec) + st.sigma_inv_mean;
  st.s2.resize(p, d);
  for (Eigen::Index t = 0; t < d; ++t) st.s2.col(t).setConstant(1.0 / (st.tau_mean[t] * denom));
}

void update_omega(VariationalState& st, const ModelSpec& spec) {
  const auto& h = spec.hyper;
  const Eigen::Index p = st.gamma.rows();
  const double dd = static_cast<double>(st.gamma.cols());
  st.a_star.resize(p);
  st.b_star.resize(p);
  st.log_omega.resize(p);
  st.log_1m_omega.resize(p);
  for (Eigen::Index s = 0; s < p; ++s) {
    const double row_sum = st.gamma.row(s).sum();
    st.a_star[s] = h.a[s] + row_sum;
    // Round-off can reach 0 when the row sum equals d and b is tiny.
    st.b_star[s] = std::max(h.b[s] - row_sum + dd, std::numeric_limits<double>::min());
    const double total = digamma(st.a_star[s] + st.b_star[s]);
    st.log_omega[s] = digamma(st.a_star[s]) - total;
    st.log_1m_omega[s] = digamma(st.b_star[s]) - total;
  }
}

void refresh_residual(VariationalState& st, const ModelSpec& spec) {
  st.residual = spec.dataset.Y;
  st.residual.noalias() -= spec.dataset.X * st.gamma.cwiseProduct(st.mu);
}

void sweep_beta_gamma(VariationalState& st, const ModelSpec& spec, std::size_t workers) {
  const Eigen::Index d = st.gamma.cols();
  workers = std::max<std::size_t>(1, std::min<std::size_t>(workers, static_cast<std::size_t>(d)));
  if (workers == 1) {
    sweep_range(st, spec, 0, d);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const Eigen::Index chunk = (d + static_cast<Eigen::Index>(workers) - 1) / static_cast<Eigen::Index>(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const Eigen::Index begin = static_cast<Eigen::Index>(w) * chunk;
    const Eigen::Index end = std::min(d, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, w, begin, end] {
      try {
        sweep_range(st, spec, begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double compute_elbo(const VariationalState& st, const ModelSpec& spec) {
  const auto& h = spec.hyper;
  const double n = static_cast<double>(spec.dataset.n());
  const double nm1 = n_minus_one(spec);
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  const Eigen::Index p = st.gamma.rows();
  const Eigen::Index d = st.gamma.cols();

  double total = 0.0;
  for (Eigen::Index t = 0; t < d; ++t) {
    const double tau = st.tau_mean[t];
    const double ltau = st.log_tau_mean[t];
    double b_sq = 0.0, second = 0.0, b_terms = 0.0;
    for (Eigen::Index s = 0; s < p; ++s) {
      const double g = st.gamma(s, t);
      const double m = st.mu(s, t);
      const double v = st.s2(s, t);
      const double mom2 = v + m * m;
      b_sq += g * g * m * m;
      second += g * mom2;
      b_terms += 0.5 * g * (st.log_sigma_inv_mean + ltau) - 0.5 * st.sigma_inv_mean * tau * g * mom2 +
                 g * st.log_omega[s] + (1.0 - g) * st.log_1m_omega[s] + 0.5 * g * (std::log(v) + 1.0) -
                 xlogx(g) - xlogx(1.0 - g);
    }
    const double expected_sq_err = st.residual.col(t).squaredNorm() - nm1 * b_sq + nm1 * second;
    const double a_term = -0.5 * n * log_2pi + 0.5 * n * ltau - 0.5 * tau * expected_sq_err;
    const double c_term = (h.eta[t] - st.eta_star[t]) * ltau - (h.kappa[t] - st.kappa_star[t]) * tau +
                          h.eta[t] * std::log(h.kappa[t]) - st.eta_star[t] * std::log(st.kappa_star[t]) -
                          log_gamma(h.eta[t]) + log_gamma(st.eta_star[t]);
    total += a_term + b_terms + c_term;
  }
  total += (h.lambda - st.lambda_star) * st.log_sigma_inv_mean - (h.nu - st.nu_star) * st.sigma_inv_mean +
           h.lambda * std::log(h.nu) - st.lambda_star * std::log(st.nu_star) - log_gamma(h.lambda) +
           log_gamma(st.lambda_star);
  for (Eigen::Index s = 0; s < p; ++s) {
    total += (h.a[s] - st.a_star[s]) * st.log_omega[s] + (h.b[s] - st.b_star[s]) * st.log_1m_omega[s] -
             log_beta(h.a[s], h.b[s]) + log_beta(st.a_star[s], st.b_star[s]);
  }
  if (!std::isfinite(total)) throw numerical_failure("lower bound is not finite");
  return total;
}

double iterate(VariationalState& st, const ModelSpec& spec, const FitConfig& config) {
  update_sigma_inv(st, spec);
  update_tau(st, spec);
  update_slab_variance(st, spec);
  sweep_beta_gamma(st, spec, resolve_workers(config, spec.dataset.d()));
  update_omega(st, spec);
  refresh_residual(st, spec);
  return compute_elbo(st, spec);
}

FitResult summarize(const VariationalState& st, std::vector<double> trace, std::size_t iterations,
                    bool converged) {
  FitResult r;
  r.ppi = st.gamma;
  r.omega_mean = st.a_star.cwiseQuotient(st.a_star + st.b_star);
  r.beta_mean = st.gamma.cwiseProduct(st.mu);
  const Eigen::MatrixXd var =
      st.gamma.cwiseProduct(st.s2 + st.mu.cwiseProduct(st.mu)) - r.beta_mean.cwiseProduct(r.beta_mean);
  r.beta_sd = var.cwiseMax(0.0).cwiseSqrt();
  r.slab_mean = st.mu;
  r.slab_var = st.s2;
  r.tau_mean = st.tau_mean;
  r.sigma2_inv_mean = st.sigma_inv_mean;
  r.elbo_trace = std::move(trace);
  r.iterations = iterations;
  r.converged = converged;
  return r;
}

FitResult fit_from(VariationalState& st, const ModelSpec& spec, const FitConfig& config) {
  config.validate();
  std::vector<double> trace;
  trace.reserve(std::min<std::size_t>(config.maxit, 256));
  double previous = -std::numeric_limits<double>::infinity();
  bool converged = false;
  std::size_t it = 0;
  while (it < config.maxit) {
    ++it;
    double elbo;
    try {
      elbo = iterate(st, spec, config);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::numerical) throw;
      std::ostringstream os;
      os << "iteration " << it << ": " << e.what();
      throw numerical_failure(os.str());
    }
    trace.push_back(elbo);
    if (std::abs(elbo - previous) < config.tol) {
      converged = true;
      break;
    }
    previous = elbo;
  }
  return summarize(st, std::move(trace), it, converged);
}

FitResult fit(const ModelSpec& spec, const FitConfig& config) {
  config.validate();
  FitResult best;
  bool have_best = false;
  for (std::size_t r = 0; r < config.n_restarts; ++r) {
    VariationalState st = init_state(spec, config.seed, r);
    FitResult res = fit_from(st, spec, config);
    res.restart = r;
    if (!have_best || res.elbo() > best.elbo()) {
      best = std::move(res);
      have_best = true;
    }
  }
  return best;
}

std::set<std::pair<std::size_t, std::size_t>> select_median_probability_model(const FitResult& result) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (Eigen::Index t = 0; t < result.ppi.cols(); ++t)
    for (Eigen::Index s = 0; s < result.ppi.rows(); ++s)
      if (result.ppi(s, t) > 0.5) out.emplace(static_cast<std::size_t>(s), static_cast<std::size_t>(t));
  return out;
}

}  // namespace mrvb
