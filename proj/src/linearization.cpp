#include "mlif/linearization.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mlif/errors.hpp"

namespace mlif {

double EigenPair::period() const { return 2.0 * std::numbers::pi / omega; }

double LinearizedSystem::tau() const { return std::sqrt(tau2); }

double LinearizedSystem::period() const { return 2.0 * std::numbers::pi / omega; }

Mat2 LinearizedSystem::canonical() const {
    Mat2 a;
    a << -lambda, omega, -omega, -lambda;
    return a;
}

Mat2 jacobian(const MLParameters& p, const State2& eq) {
    const double v = eq.v, w = eq.w;

    const double x1 = (v - p.v1) / p.v2;
    const double sech2_1 = 1.0 - std::tanh(x1) * std::tanh(x1);
    const double dm_inf = 0.5 * sech2_1 / p.v2;

    const double z = (v - p.v3) / p.v4;
    const double th = std::tanh(z), ch = std::cosh(0.5 * z), sh = std::sinh(0.5 * z);
    const double sech2 = 1.0 - th * th;
    const double k = 0.5 * p.phi / p.v4;
    const double d_alpha = k * (0.5 * sh * (1.0 + th) + ch * sech2);
    const double d_beta = k * (0.5 * sh * (1.0 - th) - ch * sech2);

    Mat2 m;
    m(0, 0) = (-p.g_ca * (dm_inf * (v - p.v_ca) + m_inf(v, p)) - p.g_k * w - p.g_l) / p.c;
    m(0, 1) = -p.g_k * (v - p.v_k) / p.c;
    m(1, 0) = d_alpha * (1.0 - w) - d_beta * w;
    m(1, 1) = -(alpha_rate(v, p) + beta_rate(v, p));

    const Mat2 fd = finite_difference_jacobian(p, eq);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double scale = std::max(std::abs(m(i, j)), 1e-300);
            if (std::abs(m(i, j) - fd(i, j)) > 1e-4 * scale) {
                std::ostringstream msg;
                msg << "analytic Jacobian entry (" << i + 1 << "," << j + 1 << ") = " << m(i, j)
                    << " disagrees with finite differences " << fd(i, j);
                throw JacobianMismatch(msg.str());
            }
        }
    }
    return m;
}

Mat2 published_jacobian_transcription(const MLParameters& p, const State2& eq) {
    const double v = eq.v, w = eq.w;
    const double a = alpha_rate(v, p), b = beta_rate(v, p);
    Mat2 m;
    m(0, 0) = -(v / p.c) * (2.0 * p.g_ca * (v - p.v_ca) * a * b / (p.v2 * (a + b) * (a + b)) +
                            p.g_ca * m_inf(v, p) + p.g_k * w + p.g_l);
    m(0, 1) = -p.g_k * w * (v - p.v_k) / p.c;
    m(1, 0) = 2.0 * v * w * b / p.v4;
    m(1, 1) = -a;
    return m;
}

EigenPair eigen_structure(const Mat2& m) {
    const double lambda = -0.5 * m.trace();
    const double disc = lambda * lambda - m.determinant();
    if (disc >= 0.0) {
        std::ostringstream msg;
        msg << "matrix has real eigenvalues (lambda^2 - det M = " << disc << ")";
        throw RealEigenvalues(msg.str());
    }
    return {lambda, std::sqrt(-disc)};
}

double noise_scale(const MLParameters& p, const State2& eq) {
    return diffusion_w(eq, p);
}

LinearizedSystem build_linearized(const MLParameters& p) {
    LinearizedSystem sys;
    sys.eq = equilibrium(p);
    sys.m = jacobian(p, sys.eq);
    const EigenPair ep = eigen_structure(sys.m);
    sys.lambda = ep.lambda;
    sys.omega = ep.omega;
    sys.sigma_star = p.sigma_star;
    sys.sigma = noise_scale(p, sys.eq);
    sys.g << 0.0, 0.0, 0.0, sys.sigma;

    const double m11 = sys.m(0, 0), m12 = sys.m(0, 1), m21 = sys.m(1, 0);
    sys.q << -sys.omega, m11 + sys.lambda, 0.0, m21;
    sys.q_inv = sys.q.inverse();
    sys.tau2 = -sys.sigma * sys.sigma * m12 / (2.0 * sys.omega * sys.omega * m21);

    if (!(sys.lambda > 0.0)) sys.warnings.push_back("equilibrium is not a stable focus (lambda <= 0)");
    if (!(sys.lambda < sys.omega))
        sys.warnings.push_back("lambda >= omega: rotation-averaging approximation is not justified");

    const Mat2 residual = sys.q_inv * sys.m * sys.q - sys.canonical();
    if (residual.norm() > 1e-12 * sys.m.norm())
        throw std::logic_error("Q does not conjugate M to canonical form");
    if (sys.sigma > 0.0) {
        const Mat2 b = sys.q_inv * sys.g * sys.g.transpose() * sys.q_inv.transpose();
        if (std::abs(0.5 * b.trace() - sys.tau2) > 1e-12 * sys.tau2)
            throw std::logic_error("tau^2 closed form disagrees with tr(B)/2");
    }
    return sys;
}

Vec2 damped_solution(const LinearizedSystem& sys, const Vec2& x0, double t) {
    const double m11 = sys.m(0, 0), m12 = sys.m(0, 1), m21 = sys.m(1, 0);
    const double l = sys.lambda, w = sys.omega;
    Mat2 c;
    c << x0(0), (m12 * x0(1) + (m11 + l) * x0(0)) / w,
         x0(1), (m21 * x0(0) - (m11 + l) * x0(1)) / w;
    return c * Vec2(std::cos(w * t), std::sin(w * t)) * std::exp(-l * t);
}

Vec2 to_transformed(const LinearizedSystem& sys, const State2& s) {
    if (!(sys.sigma > 0.0)) throw DegenerateTransform("transformed coordinates need sigma > 0");
    const double scale = std::sqrt(sys.lambda) / sys.tau();
    return scale * (sys.q_inv * Vec2(s.v - sys.eq.v, s.w - sys.eq.w));
}

State2 from_transformed(const LinearizedSystem& sys, const Vec2& x) {
    if (!(sys.sigma > 0.0)) throw DegenerateTransform("transformed coordinates need sigma > 0");
    const Vec2 centred = (sys.tau() / std::sqrt(sys.lambda)) * (sys.q * x);
    return {centred(0) + sys.eq.v, centred(1) + sys.eq.w};
}

double radius_on_line(const LinearizedSystem& sys, double l) {
    if (!(sys.sigma > 0.0)) throw DegenerateTransform("transformed coordinates need sigma > 0");
    return std::sqrt(2.0 * sys.lambda) / sys.sigma * l;
}

}  // namespace mlif
