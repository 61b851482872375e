#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace mlif {

// Adaptive 31-point Gauss-Kronrod on [a, b]; b may be +infinity.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-12, unsigned max_depth = 25) {
    double error = 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &error);
}

}  // namespace mlif
