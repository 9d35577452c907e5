#ifndef MRVB_ORACLE_HPP
#define MRVB_ORACLE_HPP

#include "mrvb/cavi.hpp"
#include "mrvb/model.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace mrvb {

// Reference computations for small problems: the marginal likelihood and
// posterior summaries obtained by enumerating every gamma_t in {0,1}^p and
// integrating (sigma^-2, omega) by simple Monte Carlo over the prior.

struct OracleConfig {
  std::size_t n_draws = 50000;
  std::uint64_t seed = 1;
  std::size_t max_p = 15;

  void validate() const;
};

/// log p(y_t | gamma_t, sigma^-2) with beta_t and tau_t integrated out.
/// `included` has length p (X.cols()). Throws numerical_failure when
/// X_g'X_g + sigma^-2 I has condition number above 1e12.
double log_marginal_response(const Eigen::VectorXd& y, const std::vector<bool>& included, double sigma_inv,
                             const Eigen::MatrixXd& X, double eta, double kappa);

struct McEstimate {
  double log_value = 0.0;
  double std_error = 0.0;  // jackknife standard error on the log scale
};

McEstimate log_marginal_likelihood_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config);

double ppi_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config, std::size_t s,
              std::size_t t);

double omega_mean_mc(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config, std::size_t s);

/// Every oracle quantity from one shared set of draws.
struct OracleSummary {
  McEstimate log_evidence;
  Eigen::MatrixXd ppi;         // p x d
  Eigen::VectorXd omega_mean;  // p
};

OracleSummary oracle_summary(const Dataset& data, const Hyperparameters& hyper, const OracleConfig& config);

/// Gap between the Monte Carlo log evidence and a converged fit's lower
/// bound, reported as (log p(y) - ELBO) / |log p(y)|: positive whenever the
/// ELBO sits below the evidence.
struct TightnessReport {
  double log_evidence = 0.0;
  double std_error = 0.0;
  double elbo = 0.0;
  double relative_gap = 0.0;
  double log10_relative_gap = 0.0;  // NaN when the gap is not positive
  bool bound_holds = false;         // log p(y) + 3 SE >= ELBO
};

TightnessReport make_tightness_report(const McEstimate& evidence, double elbo);

TightnessReport elbo_tightness(const Dataset& data, const Hyperparameters& hyper, const FitResult& fit,
                               const OracleConfig& config);

namespace detail {

/// Per-draw enumeration for a single (sigma^-2, omega) draw.
struct DrawMasses {
  Eigen::VectorXd log_full;   // d: log sum over gamma_t of p(y_t|gamma_t) p(gamma_t|omega)
  Eigen::MatrixXd log_with;   // p x d: same sum restricted to gamma_st = 1
  Eigen::MatrixXd log_without;  // p x d: restricted to gamma_st = 0
};

/// Precomputed per-subset quantities shared by all draws.
class Enumerator {
 public:
  Enumerator(const Dataset& data, const Hyperparameters& hyper, std::size_t max_p);

  DrawMasses masses(double sigma_inv, const Eigen::VectorXd& log_omega, const Eigen::VectorXd& log_1m_omega) const;

  /// log p(y_t | gamma_t = mask, sigma^-2) through the eigen route.
  double log_response(std::size_t t, std::uint32_t mask, double sigma_inv) const;

 private:
  struct Subset {
    std::uint32_t mask;
    int size;
    Eigen::VectorXd eigenvalues;  // of X_g'X_g
    Eigen::MatrixXd rotated;      // q x d, Q'X_g'Y
  };
  std::size_t n_, p_, d_;
  Eigen::VectorXd y_sq_;  // ||y_t||^2
  Eigen::VectorXd log_const_;  // per response constant
  Eigen::VectorXd shape_;      // n/2 + eta_t
  Eigen::VectorXd kappa_;
  std::vector<Subset> subsets_;
};

}  // namespace detail

}  // namespace mrvb

#endif  // MRVB_ORACLE_HPP
