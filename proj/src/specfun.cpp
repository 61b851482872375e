#include "mlif/specfun.hpp"

#include <cmath>
#include <numbers>

namespace mlif {

namespace {

constexpr double kSeriesLimit = 30.0;

// sum (x/2)^{2k} / (k!)^2; all terms positive.
double i0_series(double x) {
    const double q = 0.25 * x * x;
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * k);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum;
}

// log of e^{-x} sqrt(2 pi x) I0(x) by the Hankel expansion; terms decrease
// until k ~ 8x, far past where they drop below 1e-17 for x > 30.
double log_i0_asymptotic_correction(double x) {
    double sum = 1.0, term = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= odd * odd / (8.0 * k * x);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return std::log(sum);
}

}  // namespace

double bessel_i0(double x) {
    x = std::abs(x);
    if (x <= kSeriesLimit) return i0_series(x);
    return std::exp(log_i0(x));
}

double log_i0(double x) {
    x = std::abs(x);
    if (x <= kSeriesLimit) return std::log(i0_series(x));
    return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + log_i0_asymptotic_correction(x);
}

double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double hyp2f2_1122(double x) {
    // Kahan-compensated sum of t_k = x^k / ((k+1)^2 k!).
    double sum = 1.0, comp = 0.0, term = 1.0;
    for (int k = 0; k < 2000; ++k) {
        const double kp1 = k + 1.0, kp2 = k + 2.0;
        term *= x * kp1 / (kp2 * kp2);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (k > x && std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return sum;
}

double sample_noncentral_chi2_2(double delta, Rng& rng) {
    const double z1 = rng.normal() + std::sqrt(delta);
    const double z2 = rng.normal();
    return z1 * z1 + z2 * z2;
}

}  // namespace mlif
