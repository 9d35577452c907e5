#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mrvb/cavi.hpp"
#include "mrvb/error.hpp"
#include "mrvb/oracle.hpp"
#include "mrvb/special_functions.hpp"
#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

using namespace mrvb;
using test::make_spec;
using test::random_dataset;

namespace {

std::vector<bool> mask_vector(std::uint32_t mask, std::size_t p) {
  std::vector<bool> v(p);
  for (std::size_t s = 0; s < p; ++s) v[s] = (mask >> s) & 1u;
  return v;
}

// log p(y | gamma, sigma^-2) with beta integrated analytically
// (y | tau ~ N(0, (I + X_g X_g' / sigma^-2) / tau)) and tau by adaptive
// Gauss-Kronrod quadrature on (0, inf).
double quadrature_marginal(const Eigen::VectorXd& y, const Eigen::MatrixXd& Xg, double sigma_inv, double eta,
                           double kappa) {
  const double n = static_cast<double>(y.size());
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(y.size(), y.size()) + Xg * Xg.transpose() / sigma_inv;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(C);
  const double log_det = ldlt.vectorD().array().log().sum();
  const double quad = y.dot(ldlt.solve(y));
  auto log_f = [&](double tau) {
    return -0.5 * n * std::log(2.0 * std::numbers::pi) + 0.5 * n * std::log(tau) - 0.5 * log_det - 0.5 * tau * quad +
           eta * std::log(kappa) - std::lgamma(eta) + (eta - 1.0) * std::log(tau) - kappa * tau;
  };
  const double mode = (0.5 * n + eta - 1.0) / (kappa + 0.5 * quad);
  const double shift = log_f(mode);
  auto f = [&](double tau) { return tau <= 0.0 ? 0.0 : std::exp(log_f(tau) - shift); };
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, 0.0, std::numeric_limits<double>::infinity(), 20, 1e-14);
  return shift + std::log(integral);
}

Dataset planted(std::size_t n, std::size_t p, std::size_t d, double effect, std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::MatrixXd X = test::gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p), rng);
  Eigen::MatrixXd Y = test::gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), rng);
  Y.col(0) += effect * X.col(0);
  return standardize_inputs(X, Y);
}

}  // namespace

TEST_CASE("null-model marginal with one observation") {
  const Eigen::VectorXd y = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd X = Eigen::MatrixXd::Constant(1, 1, 0.7);
  const double v = log_marginal_response(y, {false}, 1.3, X, 1.0, 1.0);
  CHECK(v == doctest::Approx(-1.0397207708399179641).epsilon(1e-13));
  CHECK(std::exp(v) == doctest::Approx(0.3535533905932738).epsilon(1e-12));
  // The same value from quadrature over tau with no covariates.
  CHECK(v == doctest::Approx(quadrature_marginal(y, Eigen::MatrixXd::Zero(1, 0), 1.0, 1.0, 1.0)).epsilon(1e-9));
}

TEST_CASE("null-model marginal ignores sigma^-2 and X") {
  const Dataset a = random_dataset(20, 3, 1, 1);
  const Dataset b = random_dataset(20, 2, 1, 2);
  const Eigen::VectorXd y = a.Y.col(0);
  const double base = log_marginal_response(y, {false, false, false}, 0.3, a.X, 2.0, 1.5);
  CHECK(log_marginal_response(y, {false, false, false}, 40.0, a.X, 2.0, 1.5) == base);
  CHECK(log_marginal_response(y, {false, false}, 0.3, b.X, 2.0, 1.5) == base);
}

TEST_CASE("closed form agrees with quadrature") {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const Dataset ds = random_dataset(12, 3, 1, seed, 0.8);
    const Eigen::VectorXd y = ds.Y.col(0);
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
      for (double sigma_inv : {0.2, 1.0, 5.0}) {
        std::vector<Eigen::Index> cols;
        for (Eigen::Index s = 0; s < 3; ++s)
          if ((mask >> s) & 1u) cols.push_back(s);
        Eigen::MatrixXd Xg(12, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j) Xg.col(static_cast<Eigen::Index>(j)) = ds.X.col(cols[j]);
        const double closed = log_marginal_response(y, mask_vector(mask, 3), sigma_inv, ds.X, 1.5, 0.7);
        const double quad = quadrature_marginal(y, Xg, sigma_inv, 1.5, 0.7);
        CAPTURE(mask);
        CHECK(std::abs(closed - quad) <= 1e-6 * std::abs(quad));
      }
    }
  }
}

TEST_CASE("enumerator agrees with the direct closed form") {
  const Dataset ds = random_dataset(25, 3, 2, 5, 0.7);
  const Hyperparameters h = PriorSettings{}.expand(3, 2);
  const detail::Enumerator en(ds, h, 15);
  for (std::uint32_t mask = 0; mask < 8; ++mask)
    for (std::size_t t = 0; t < 2; ++t) {
      const double direct = log_marginal_response(ds.Y.col(static_cast<Eigen::Index>(t)), mask_vector(mask, 3), 0.6,
                                                  ds.X, 1.0, 1.0);
      CHECK(en.log_response(t, mask, 0.6) == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("per-draw masses match an explicit subset sum and normalize") {
  const Dataset ds = random_dataset(30, 3, 2, 6, 0.6);
  const Hyperparameters h = PriorSettings{}.expand(3, 2);
  const detail::Enumerator en(ds, h, 15);
  Eigen::VectorXd omega(3);
  omega << 0.1, 0.5, 0.85;
  const Eigen::VectorXd lo = omega.array().log();
  const Eigen::VectorXd l1 = (1.0 - omega.array()).log();
  const double sigma_inv = 0.8;
  const detail::DrawMasses m = en.masses(sigma_inv, lo, l1);
  for (std::size_t t = 0; t < 2; ++t) {
    const auto ti = static_cast<Eigen::Index>(t);
    double full = 0.0;
    Eigen::VectorXd with = Eigen::VectorXd::Zero(3);
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
      double prior = 1.0;
      for (std::size_t s = 0; s < 3; ++s) prior *= ((mask >> s) & 1u) ? omega[static_cast<Eigen::Index>(s)] : 1.0 - omega[static_cast<Eigen::Index>(s)];
      const double lik = std::exp(log_marginal_response(ds.Y.col(ti), mask_vector(mask, 3), sigma_inv, ds.X, 1.0, 1.0));
      full += prior * lik;
      for (Eigen::Index s = 0; s < 3; ++s)
        if ((mask >> s) & 1u) with[s] += prior * lik;
    }
    CHECK(m.log_full[ti] == doctest::Approx(std::log(full)).epsilon(1e-12));
    for (Eigen::Index s = 0; s < 3; ++s) {
      CHECK(m.log_with(s, ti) == doctest::Approx(std::log(with[s])).epsilon(1e-12));
      CHECK(std::abs(log_add_exp(m.log_with(s, ti), m.log_without(s, ti)) - m.log_full[ti]) < 1e-12 * std::abs(m.log_full[ti]));
    }
  }
}

TEST_CASE("degenerate prior mass at gamma = 0") {
  const Dataset ds = random_dataset(15, 1, 1, 7, 0.5);
  Hyperparameters h = PriorSettings{}.expand(1, 1);
  h.a[0] = 1e-8;
  OracleConfig config;
  config.n_draws = 5000;
  const McEstimate est = log_marginal_likelihood_mc(ds, h, config);
  const double null = log_marginal_response(ds.Y.col(0), {false}, 1.0, ds.X, 1.0, 1.0);
  CHECK(std::abs(est.log_value - null) <= 3.0 * est.std_error + 1e-6);
}

TEST_CASE("same seed gives identical oracle output") {
  const Dataset ds = random_dataset(20, 3, 2, 8, 0.6);
  const Hyperparameters h = PriorSettings{}.expand(3, 2);
  OracleConfig config;
  config.n_draws = 2000;
  config.seed = 42;
  const OracleSummary a = oracle_summary(ds, h, config);
  const OracleSummary b = oracle_summary(ds, h, config);
  CHECK(a.log_evidence.log_value == b.log_evidence.log_value);
  CHECK(a.log_evidence.std_error == b.log_evidence.std_error);
  CHECK(a.ppi == b.ppi);
  CHECK(a.omega_mean == b.omega_mean);
  CHECK(ppi_mc(ds, h, config, 1, 1) == a.ppi(1, 1));
  CHECK(omega_mean_mc(ds, h, config, 2) == a.omega_mean[2]);
  CHECK(log_marginal_likelihood_mc(ds, h, config).log_value == a.log_evidence.log_value);
  config.seed = 43;
  CHECK(oracle_summary(ds, h, config).log_evidence.log_value != a.log_evidence.log_value);
}

TEST_CASE("posterior summaries are probabilities and track the signal") {
  const Dataset ds = planted(200, 4, 2, 0.8, 9);
  PriorSettings prior;
  prior.p_star = 1.0;
  const Hyperparameters h = prior.expand(4, 2);
  OracleConfig config;
  config.n_draws = 5000;
  const OracleSummary o = oracle_summary(ds, h, config);
  CHECK((o.ppi.array() >= 0.0).all());
  CHECK((o.ppi.array() <= 1.0).all());
  CHECK((o.omega_mean.array() > 0.0).all());
  CHECK((o.omega_mean.array() < 1.0).all());
  CHECK(o.ppi(0, 0) >= 0.99);
  for (Eigen::Index s = 1; s < 4; ++s) CHECK(o.ppi(s, 0) < 0.5);
  CHECK(o.ppi(0, 1) < 0.5);
}

TEST_CASE("duplicate columns are exchangeable") {
  Rng rng(10);
  Eigen::MatrixXd X = test::gaussian_matrix(60, 3, rng);
  X.col(1) = X.col(0);
  Eigen::MatrixXd Y = test::gaussian_matrix(60, 1, rng);
  Y.col(0) += 0.3 * (X.col(0) + X.col(1));
  const Dataset ds = standardize_inputs(X, Y);
  OracleConfig config;
  config.n_draws = 20000;
  const OracleSummary o = oracle_summary(ds, PriorSettings{}.expand(3, 1), config);
  CHECK(std::abs(o.ppi(0, 0) - o.ppi(1, 0)) < 0.02);
  CHECK(std::abs(o.omega_mean[0] - o.omega_mean[1]) < 0.02);
}

TEST_CASE("zero data pulls omega below its prior mean") {
  Dataset ds = random_dataset(10, 2, 2, 11);
  ds.Y.setZero();
  Hyperparameters h = PriorSettings{}.expand(2, 2);
  h.b.setConstant(3.0);
  OracleConfig config;
  config.n_draws = 4000;
  const OracleSummary o = oracle_summary(ds, h, config);
  for (Eigen::Index s = 0; s < 2; ++s) CHECK(o.omega_mean[s] < 1.0 / 4.0);
}

TEST_CASE("a larger effect never lowers its inclusion probability") {
  OracleConfig config;
  config.n_draws = 3000;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Rng rng(100 + seed);
    const Eigen::MatrixXd X = test::gaussian_matrix(40, 3, rng);
    Eigen::MatrixXd E = test::gaussian_matrix(40, 2, rng);
    // Noise orthogonal to the design so that the planted term is the only signal.
    E -= X * (X.transpose() * X).ldlt().solve(X.transpose() * E);
    double prev = -1.0;
    for (double effect : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      Eigen::MatrixXd Y = E;
      Y.col(0) += effect * X.col(0);
      const double v = ppi_mc(standardize_inputs(X, Y), PriorSettings{}.expand(3, 2), config, 0, 0);
      CHECK(v >= prev);
      prev = v;
    }
  }
}

TEST_CASE("Monte Carlo evidence dominates the lower bound") {
  OracleConfig config;
  config.n_draws = 20000;
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    PriorSettings prior;
    if (seed % 2) prior.p_star = 1.5;
    const ModelSpec spec = make_spec(random_dataset(40, 4, 3, seed, 0.5), prior);
    const FitResult fitted = fit(spec, FitConfig{});
    const TightnessReport r = elbo_tightness(spec.dataset, spec.hyper, fitted, config);
    CAPTURE(seed);
    CHECK(r.bound_holds);
    CHECK(r.log_evidence + 3.0 * r.std_error >= r.elbo);
    CHECK(r.relative_gap > -3.0 * r.std_error / std::abs(r.log_evidence));
    CHECK(std::isfinite(r.std_error));
  }
}

TEST_CASE("tightness report conventions") {
  const TightnessReport r = make_tightness_report({-100.0, 0.01}, -101.0);
  CHECK(r.relative_gap == doctest::Approx(0.01));
  CHECK(r.log10_relative_gap == doctest::Approx(-2.0));
  CHECK(r.bound_holds);
  const TightnessReport bad = make_tightness_report({-100.0, 0.01}, -99.0);
  CHECK(bad.relative_gap < 0.0);
  CHECK(std::isnan(bad.log10_relative_gap));
  CHECK_FALSE(bad.bound_holds);
}

TEST_CASE("guards") {
  const Dataset wide = random_dataset(30, 16, 1, 12);
  const Hyperparameters h = PriorSettings{}.expand(16, 1);
  try {
    log_marginal_likelihood_mc(wide, h, OracleConfig{});
    FAIL("expected refusal");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_argument);
    CHECK(std::string(e.what()).find("p <= 15") != std::string::npos);
  }
  OracleConfig config;
  config.max_p = 26;
  CHECK_THROWS_AS(config.validate(), Error);
  config = OracleConfig{};
  config.n_draws = 0;
  CHECK_THROWS_AS(config.validate(), Error);

  Rng rng(13);
  Eigen::MatrixXd X = test::gaussian_matrix(20, 2, rng);
  X.col(1) = X.col(0);
  const Eigen::VectorXd y = test::gaussian_matrix(20, 1, rng).col(0);
  try {
    log_marginal_response(y, {true, true}, 1e-14, X, 1.0, 1.0);
    FAIL("expected numerical failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::numerical);
  }
}
