#pragma once

#include <string>
#include <vector>

#include "mlif/linalg.hpp"
#include "mlif/ml_model.hpp"

namespace mlif {

// Decay rate and angular frequency of a stable focus: eigenvalues are
// -lambda +/- i omega, with lambda stored positive.
struct EigenPair {
    double lambda = 0.0;  // 1/ms
    double omega = 0.0;   // rad/ms

    double period() const;  // 2 pi / omega, ms
};

// Linear approximation around the stable equilibrium,
//   dX = M X dt + G dB,  G = diag(0, sigma),
// together with the conjugation Q^{-1} M Q = [[-lambda, omega], [-omega, -lambda]].
struct LinearizedSystem {
    State2 eq;
    Mat2 m;
    Mat2 g;
    double lambda = 0.0;
    double omega = 0.0;
    Mat2 q;
    Mat2 q_inv;
    double tau2 = 0.0;
    double sigma = 0.0;
    double sigma_star = 0.0;
    // Regime notes (e.g. lambda not small relative to omega).
    std::vector<std::string> warnings;

    double tau() const;
    Mat2 canonical() const;  // [[-lambda, omega], [-omega, -lambda]]
    double period() const;
};

// Analytic Jacobian of the drift at `eq`, cross-checked against central
// differences; throws JacobianMismatch when they differ by more than 1e-4
// relative in any entry.
Mat2 jacobian(const MLParameters& p, const State2& eq);

// Literal transcription of the published closed-form matrix:
// m11 with the leading V_eq factor, m12 = -gK W_eq (V_eq - VK)/C,
// m21 = 2 V_eq W_eq beta(V_eq)/V4, m22 = -alpha(V_eq). Diagnostics only;
// it does not agree with the derivative of the drift.
Mat2 published_jacobian_transcription(const MLParameters& p, const State2& eq);

// Throws RealEigenvalues when lambda^2 - det M >= 0.
EigenPair eigen_structure(const Mat2& m);

// Throws RealEigenvalues, NoRootInBracket, JacobianMismatch.
LinearizedSystem build_linearized(const MLParameters& p);

// Noise entry of G: diffusion_w at the equilibrium.
double noise_scale(const MLParameters& p, const State2& eq);

// Deterministic solution C (cos wt, sin wt)^T e^{-lambda t} of dX = M X dt
// from centred initial condition x0.
Vec2 damped_solution(const LinearizedSystem& sys, const Vec2& x0, double t);

// (sqrt(lambda)/tau) Q^{-1} (v - V_eq, w - W_eq). Throws DegenerateTransform
// when sigma = 0.
Vec2 to_transformed(const LinearizedSystem& sys, const State2& s);
State2 from_transformed(const LinearizedSystem& sys, const Vec2& x);

// Radius in transformed coordinates of the point on L = {v = V_eq, w < W_eq}
// at distance l below W_eq: sqrt(2 lambda)/sigma * l.
double radius_on_line(const LinearizedSystem& sys, double l);

}  // namespace mlif
