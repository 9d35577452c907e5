#ifndef MRVB_MODEL_HPP
#define MRVB_MODEL_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace mrvb {

/// Centered responses and standardized covariates for one analysis.
///
/// Every column of X has mean 0 and unbiased sample variance 1, so each
/// squared column norm equals n - 1. Every column of Y has mean 0.
struct Dataset {
  Eigen::MatrixXd X;                // n x p
  Eigen::MatrixXd Y;                // n x d
  Eigen::VectorXd column_norms_sq;  // ||X_s||^2, length p

  std::size_t n() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t d() const { return static_cast<std::size_t>(Y.cols()); }
};

/// Column centering and scaling applied by standardize_inputs, kept so that
/// held-out rows can be transformed consistently.
struct Standardization {
  Eigen::VectorXd x_mean;
  Eigen::VectorXd x_sd;
  Eigen::VectorXd y_mean;
};

/// Throws data_error naming the first constant X column or non-finite entry.
Dataset standardize_inputs(const Eigen::MatrixXd& raw_X, const Eigen::MatrixXd& raw_Y,
                           Standardization* stats = nullptr);

/// Prior hyperparameters:
///   omega_s ~ Beta(a_s, b_s), tau_t ~ Gamma(eta_t, kappa_t), sigma^-2 ~ Gamma(lambda, nu)
/// (Gamma in shape/rate form).
struct Hyperparameters {
  Eigen::VectorXd a, b;         // length p
  Eigen::VectorXd eta, kappa;   // length d
  double lambda = 1.0;
  double nu = 1.0;

  void validate(std::size_t p, std::size_t d) const;
};

/// Scalar settings shared by every covariate and response. When p_star is
/// set it replaces (a, b) by the multiplicity-correcting choice.
struct PriorSettings {
  double a = 1.0;
  double b = 1.0;
  double eta = 1.0;
  double kappa = 1.0;
  double lambda = 1.0;
  double nu = 1.0;
  std::optional<double> p_star;

  Hyperparameters expand(std::size_t p, std::size_t d) const;
};

struct ModelSpec {
  Dataset dataset;
  Hyperparameters hyper;
  std::optional<double> p_star;

  ModelSpec(Dataset data, Hyperparameters h, std::optional<double> pstar = std::nullopt);
};

struct BetaPrior {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

/// a_s = 1, b_s = d(p - p_star)/p_star. Requires 0 < p_star < p.
BetaPrior corrected_hyperparameters(std::size_t p, std::size_t d, double p_star);

/// Prior probability that a covariate is associated with at least one of d
/// responses, 1 - B(a, b + d)/B(a, b). Evaluated in log space.
double prior_activation_probability(double a, double b, std::size_t d);

/// Prior odds of q-1 versus q associated responses, (b + d - q)/(a + q - 1).
double prior_odds_ratio(double a, double b, std::size_t d, std::size_t q);

}  // namespace mrvb

#endif  // MRVB_MODEL_HPP
