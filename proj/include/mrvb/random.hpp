#ifndef MRVB_RANDOM_HPP
#define MRVB_RANDOM_HPP

#include <cstdint>
#include <random>

namespace mrvb {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a master seed and a path of
/// indices (stage, block, replicate, ...). Order of evaluation elsewhere
/// never changes which stream a given index receives.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

/// log of a Gamma(shape, 1) variate. Shapes below 1 use the
/// G(shape) = G(shape + 1) * U^(1/shape) boost so that tiny shapes do not
/// underflow to log(0).
double log_gamma_variate(double shape, Rng& rng);

struct LogBetaDraw {
  double log_p;    // log(w)
  double log_1mp;  // log(1 - w)
};

/// Beta(a, b) draw returned in log space for both w and 1 - w.
LogBetaDraw log_beta_variate(double a, double b, Rng& rng);

}  // namespace mrvb

#endif  // MRVB_RANDOM_HPP
