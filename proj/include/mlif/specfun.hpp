#pragma once

#include "mlif/random.hpp"

namespace mlif {

// Modified Bessel function of the first kind, order 0. Power series up to
// |x| = 30, exp(log_i0(x)) beyond (overflows to +inf past |x| ~ 713).
double bessel_i0(double x);

// log I0(|x|). Series below 30, Hankel asymptotic expansion above.
double log_i0(double x);

// Standard normal CDF.
double norm_cdf(double x);

// 2F2(1, 1; 2, 2; x) = sum_k x^k / ((k+1)^2 k!), compensated summation.
// Accurate for 0 <= x <= 100.
double hyp2f2_1122(double x);

// Noncentral chi-square with 2 degrees of freedom and noncentrality delta,
// drawn as (Z1 + sqrt(delta))^2 + Z2^2.
double sample_noncentral_chi2_2(double delta, Rng& rng);

}  // namespace mlif
