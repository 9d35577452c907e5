#ifndef MRVB_SPECIAL_FUNCTIONS_HPP
#define MRVB_SPECIAL_FUNCTIONS_HPP

namespace mrvb {

// All three throw mrvb::Error (invalid_argument) for arguments <= 0 or NaN.
double digamma(double x);
double log_gamma(double x);
double log_beta(double a, double b);

/// log(exp(a) + exp(b)) without overflow; either argument may be -inf.
double log_add_exp(double a, double b);

/// 1 / (1 + exp(-x)), never NaN for finite or infinite x.
double stable_sigmoid(double x);

}  // namespace mrvb

#endif  // MRVB_SPECIAL_FUNCTIONS_HPP
