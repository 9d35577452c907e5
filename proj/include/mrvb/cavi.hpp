#ifndef MRVB_CAVI_HPP
#define MRVB_CAVI_HPP

#include "mrvb/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

namespace mrvb {

/// Mean-field variational parameters for the spike-and-slab multi-response
/// regression, together with the expectations derived from them.
///
/// q(beta_st, gamma_st): gamma_st ~ Bernoulli(gamma(s,t)),
///                       beta_st | gamma_st = 1 ~ N(mu(s,t), s2(s,t))
/// q(tau_t)      = Gamma(eta_star[t], kappa_star[t])
/// q(sigma^-2)   = Gamma(lambda_star, nu_star)
/// q(omega_s)    = Beta(a_star[s], b_star[s])
struct VariationalState {
  Eigen::MatrixXd mu;     // p x d slab means
  Eigen::MatrixXd s2;     // p x d slab variances
  Eigen::MatrixXd gamma;  // p x d inclusion probabilities

  Eigen::VectorXd eta_star, kappa_star;  // d
  double lambda_star = 1.0;
  double nu_star = 1.0;
  Eigen::VectorXd a_star, b_star;  // p

  // Cached expectations under q.
  Eigen::VectorXd tau_mean;       // eta*/kappa*
  Eigen::VectorXd log_tau_mean;   // digamma(eta*) - log kappa*
  double sigma_inv_mean = 1.0;    // lambda*/nu*
  double log_sigma_inv_mean = 0.0;
  Eigen::VectorXd log_omega;      // digamma(a*) - digamma(a* + b*)
  Eigen::VectorXd log_1m_omega;   // digamma(b*) - digamma(a* + b*)

  /// Y - X (mu .* gamma), n x d. Kept in sync by the sweep and rebuilt by
  /// refresh_residual.
  Eigen::MatrixXd residual;
};

struct FitConfig {
  double tol = 1e-6;
  std::size_t maxit = 1000;
  std::size_t n_restarts = 1;
  std::uint64_t seed = 1;
  bool parallel_responses = false;
  /// Thread count for the response-parallel sweep; 0 means hardware
  /// concurrency. Always capped by d.
  std::size_t workers = 0;

  void validate() const;
};

struct FitResult {
  Eigen::MatrixXd ppi;        // p x d
  Eigen::VectorXd omega_mean; // p
  Eigen::MatrixXd beta_mean;  // p x d, gamma .* mu
  Eigen::MatrixXd beta_sd;    // p x d, sqrt(Var_q(beta_st))
  Eigen::MatrixXd slab_mean;  // p x d, mu
  Eigen::MatrixXd slab_var;   // p x d, s2
  Eigen::VectorXd tau_mean;   // d
  double sigma2_inv_mean = 0.0;
  std::vector<double> elbo_trace;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t restart = 0;  // index of the restart that produced this fit

  double elbo() const { return elbo_trace.empty() ? 0.0 : elbo_trace.back(); }
};

/// Restart 0 is deterministic: M = 0, gamma = a/(a + b + d), tau and
/// sigma^-2 at their prior means. Higher restarts add seeded noise.
VariationalState init_state(const ModelSpec& spec, std::uint64_t seed, std::size_t restart_index);

// Individual coordinate updates. Each one refreshes the cached expectations
// it owns.
void update_sigma_inv(VariationalState& state, const ModelSpec& spec);
void update_tau(VariationalState& state, const ModelSpec& spec);
void update_slab_variance(VariationalState& state, const ModelSpec& spec);
void update_omega(VariationalState& state, const ModelSpec& spec);
void refresh_residual(VariationalState& state, const ModelSpec& spec);

/// One pass over (s, t), s outer and t inner, updating mu and gamma with a
/// running residual. With workers > 1 the responses are split across threads;
/// the result is identical to the serial sweep.
void sweep_beta_gamma(VariationalState& state, const ModelSpec& spec, std::size_t workers = 1);

/// Variational lower bound at the current state.
double compute_elbo(const VariationalState& state, const ModelSpec& spec);

/// One full iteration in the fixed order sigma^-2, tau, slab variances,
/// sweep, omega. Returns the lower bound after the iteration.
double iterate(VariationalState& state, const ModelSpec& spec, const FitConfig& config);

FitResult summarize(const VariationalState& state, std::vector<double> trace, std::size_t iterations,
                    bool converged);

/// Runs coordinate ascent from each restart until |delta ELBO| < tol or maxit
/// and returns the restart with the highest final ELBO.
FitResult fit(const ModelSpec& spec, const FitConfig& config);

/// Like fit, starting from a caller-provided state (which is advanced in place).
FitResult fit_from(VariationalState& state, const ModelSpec& spec, const FitConfig& config);

/// Pairs (s, t) with ppi > 0.5.
std::set<std::pair<std::size_t, std::size_t>> select_median_probability_model(const FitResult& result);

}  // namespace mrvb

#endif  // MRVB_CAVI_HPP
