#include "mrvb/special_functions.hpp"

#include "mrvb/error.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace mrvb {

namespace {

void require_positive(const char* name, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    std::ostringstream os;
    os << name << " requires a positive finite argument, got " << x;
    throw invalid_argument(os.str());
  }
}

}  // namespace

double digamma(double x) {
  require_positive("digamma", x);
  return boost::math::digamma(x);
}

double log_gamma(double x) {
  require_positive("log_gamma", x);
  // boost's lgamma does not touch the global signgam, unlike std::lgamma.
  return boost::math::lgamma(x);
}

double log_beta(double a, double b) {
  require_positive("log_beta", a);
  require_positive("log_beta", b);
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

double log_add_exp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace mrvb
