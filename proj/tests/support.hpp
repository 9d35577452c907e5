#ifndef MRVB_TESTS_SUPPORT_HPP
#define MRVB_TESTS_SUPPORT_HPP

#include "mrvb/cavi.hpp"
#include "mrvb/model.hpp"
#include "mrvb/random.hpp"
#include "mrvb/special_functions.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace mrvb::test {

inline Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

// Gaussian design with a few planted effects of size `effect` on the first
// min(p, 3) covariates, each tied to one response.
inline Dataset random_dataset(std::size_t n, std::size_t p, std::size_t d, std::uint64_t seed, double effect = 0.5) {
  Rng rng(seed);
  const Eigen::MatrixXd X = gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p), rng);
  Eigen::MatrixXd Y = gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng);
  for (std::size_t s = 0; s < std::min<std::size_t>(p, 3); ++s)
    Y.col(static_cast<Eigen::Index>(s % d)) += effect * X.col(static_cast<Eigen::Index>(s));
  return standardize_inputs(X, Y);
}

inline ModelSpec make_spec(Dataset data, const PriorSettings& prior = {}) {
  Hyperparameters h = prior.expand(data.p(), data.d());
  return ModelSpec(std::move(data), std::move(h), prior.p_star);
}

// Fills every variational block with arbitrary valid values and refreshes
// the cached expectations through the update functions' own formulas.
inline VariationalState random_state(const ModelSpec& spec, std::uint64_t seed) {
  VariationalState st = init_state(spec, seed, 0);
  Rng rng(seed + 17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  for (Eigen::Index i = 0; i < st.mu.size(); ++i) {
    st.mu.data()[i] = 0.3 * z(rng);
    st.gamma.data()[i] = u(rng);
    st.s2.data()[i] = 0.01 + 0.1 * u(rng);
  }
  for (Eigen::Index t = 0; t < st.tau_mean.size(); ++t) {
    st.eta_star[t] = 1.0 + 5.0 * u(rng);
    st.kappa_star[t] = 1.0 + 5.0 * u(rng);
    st.tau_mean[t] = st.eta_star[t] / st.kappa_star[t];
    st.log_tau_mean[t] = digamma(st.eta_star[t]) - std::log(st.kappa_star[t]);
  }
  st.lambda_star = 1.0 + u(rng);
  st.nu_star = 1.0 + u(rng);
  st.sigma_inv_mean = st.lambda_star / st.nu_star;
  st.log_sigma_inv_mean = digamma(st.lambda_star) - std::log(st.nu_star);
  refresh_residual(st, spec);
  return st;
}

}  // namespace mrvb::test

#endif  // MRVB_TESTS_SUPPORT_HPP
