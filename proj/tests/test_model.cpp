#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mrvb/error.hpp"
#include "mrvb/model.hpp"
#include "support.hpp"

#include <cmath>
#include <limits>
#include <string>

using namespace mrvb;

TEST_CASE("standardize_inputs centers and scales") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  Eigen::MatrixXd Y(3, 1);
  Y << 4, 6, 5;
  const Dataset ds = standardize_inputs(X, Y);
  CHECK(ds.X(0, 0) == doctest::Approx(-1.0));
  CHECK(std::abs(ds.X(1, 0)) < 1e-15);
  CHECK(ds.X(2, 0) == doctest::Approx(1.0));
  CHECK(ds.column_norms_sq[0] == doctest::Approx(2.0));

  Eigen::MatrixXd X2(2, 1), Y2(2, 1);
  X2 << 0, 1;
  Y2 << 4, 6;
  const Dataset ds2 = standardize_inputs(X2, Y2);
  CHECK(ds2.Y(0, 0) == doctest::Approx(-1.0));
  CHECK(ds2.Y(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("constant and non-finite columns are rejected with their location") {
  Eigen::MatrixXd X(3, 2);
  X << 5, 1, 5, 2, 5, 3;
  Eigen::MatrixXd Y = Eigen::MatrixXd::Ones(3, 1);
  try {
    standardize_inputs(X, Y);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::data);
    CHECK(std::string(e.what()) == "constant column 1");
  }
  X(0, 0) = 1.0;
  X(1, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    standardize_inputs(X, Y);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("row 2, column 2") != std::string::npos);
  }
}

TEST_CASE("Dataset invariants and idempotence") {
  Rng rng(3);
  Eigen::MatrixXd X = test::gaussian_matrix(40, 7, rng) * 3.0;
  X.array() += 11.0;
  const Eigen::MatrixXd Y = test::gaussian_matrix(40, 4, rng).array() + 2.0;
  const Dataset ds = standardize_inputs(X, Y);
  for (Eigen::Index s = 0; s < ds.X.cols(); ++s) {
    CHECK(std::abs(ds.X.col(s).mean()) < 1e-10);
    CHECK(std::abs(ds.X.col(s).squaredNorm() / 39.0 - 1.0) < 1e-8);
    CHECK(std::abs(ds.column_norms_sq[s] - 39.0) < 1e-6);
  }
  for (Eigen::Index t = 0; t < ds.Y.cols(); ++t) CHECK(std::abs(ds.Y.col(t).mean()) < 1e-10);

  const Dataset again = standardize_inputs(ds.X, ds.Y);
  CHECK((again.X - ds.X).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((again.Y - ds.Y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("corrected_hyperparameters") {
  auto h = corrected_hyperparameters(5, 100, 2.0);
  CHECK(h.a.size() == 5);
  CHECK((h.a.array() == 1.0).all());
  CHECK(h.b[0] == doctest::Approx(150.0));
  CHECK(corrected_hyperparameters(2, 1, 1.0).b[1] == doctest::Approx(1.0));
  CHECK(corrected_hyperparameters(1000, 25, 20.0).b[0] == doctest::Approx(1225.0));
  CHECK_THROWS_AS(corrected_hyperparameters(10, 3, 0.0), Error);
  CHECK_THROWS_AS(corrected_hyperparameters(10, 3, 10.0), Error);
  CHECK_THROWS_AS(corrected_hyperparameters(10, 3, -1.0), Error);
}

TEST_CASE("prior_activation_probability examples") {
  const double b = 7.0 * (100.0 - 5.0) / 5.0;
  CHECK(prior_activation_probability(1.0, b, 7) == doctest::Approx(0.05).epsilon(1e-12));
  for (double bb : {0.5, 3.0, 150.0})
    for (std::size_t d : {1u, 4u, 60u})
      CHECK(prior_activation_probability(1.0, bb, d) == doctest::Approx(d / (bb + d)).epsilon(1e-12));
  CHECK(prior_activation_probability(2.0, 3.0, 2) == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("prior_activation_probability monotonicity") {
  for (double a : {0.5, 1.0, 3.0}) {
    for (std::size_t d : {1u, 5u, 50u, 2000u}) {
      double prev = 2.0;
      for (double b : {0.1, 1.0, 10.0, 100.0, 1e4}) {
        const double v = prior_activation_probability(a, b, d);
        CHECK(v < prev);
        prev = v;
      }
    }
    for (double b : {0.1, 1.0, 10.0, 1e4}) {
      double prev = -1.0;
      for (std::size_t d : {1u, 2u, 5u, 50u, 2000u}) {
        const double v = prior_activation_probability(a, b, d);
        CHECK(v > prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("corrected prior activation equals p_star / p") {
  for (std::size_t p : {10u, 1000u, 215907u})
    for (std::size_t d : {1u, 25u, 20000u})
      for (double frac : {0.01, 0.2, 0.7}) {
        const double ps = frac * static_cast<double>(p);
        const auto h = corrected_hyperparameters(p, d, ps);
        CAPTURE(p);
        CAPTURE(d);
        CHECK(std::abs(prior_activation_probability(h.a[0], h.b[0], d) - ps / static_cast<double>(p)) < 1e-12);
      }
}

TEST_CASE("prior_odds_ratio") {
  CHECK(prior_odds_ratio(1.0, 150.0, 100, 1) == doctest::Approx(249.0));
  CHECK(prior_odds_ratio(1.0, 1.0, 1, 1) == doctest::Approx(1.0));
  CHECK(prior_odds_ratio(1.0, 150.0, 100, 100) == doctest::Approx(1.5));
  CHECK_THROWS_AS(prior_odds_ratio(1.0, 1.0, 3, 0), Error);
  CHECK_THROWS_AS(prior_odds_ratio(1.0, 1.0, 3, 4), Error);

  for (std::size_t q = 1; q <= 5; ++q) {
    const double small = prior_odds_ratio(1.0, corrected_hyperparameters(5, 100, 2.0).b[0], 100, q);
    const double large = prior_odds_ratio(1.0, corrected_hyperparameters(5000, 100, 2.0).b[0], 100, q);
    CHECK(large > small);
    double prev = 0.0;
    for (std::size_t d : {5u, 50u, 500u, 5000u}) {
      const double v = prior_odds_ratio(1.0, 1.0, d, q);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("PriorSettings and ModelSpec validation") {
  PriorSettings ps;
  ps.p_star = 2.0;
  const Hyperparameters h = ps.expand(5, 100);
  CHECK(h.b[3] == doctest::Approx(150.0));
  CHECK(h.eta.size() == 100);

  Dataset ds = test::random_dataset(20, 4, 2, 1);
  Hyperparameters bad = PriorSettings{}.expand(4, 2);
  bad.kappa[1] = 0.0;
  CHECK_THROWS_AS(ModelSpec(ds, bad), Error);
  CHECK_THROWS_AS(ModelSpec(ds, PriorSettings{}.expand(3, 2)), Error);
  CHECK_THROWS_AS(ModelSpec(ds, PriorSettings{}.expand(4, 2), 4.0), Error);
}
