#include "mlif/ou_approx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "mlif/errors.hpp"

namespace mlif {

std::size_t SpectralDensity::peak_index() const {
    if (power.empty()) throw DegenerateData("empty spectral density");
    return static_cast<std::size_t>(std::max_element(power.begin(), power.end()) - power.begin());
}

std::string_view to_string(SpectralDensity::Kind kind) {
    switch (kind) {
        case SpectralDensity::Kind::linearized: return "linearized";
        case SpectralDensity::Kind::xa: return "xa";
        case SpectralDensity::Kind::empirical: return "empirical";
    }
    return "unknown";
}

void write_spectra_csv(std::ostream& out, std::span<const SpectralDensity> curves) {
    out << "freq,power,kind\n";
    char buf[96];
    for (const auto& c : curves) {
        for (std::size_t i = 0; i < c.freqs.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,", c.freqs[i], c.power[i]);
            out << buf << to_string(c.kind) << '\n';
        }
    }
}

Vec2 ou_exact_step(const Vec2& s, double dt, double z1, double z2) {
    const double decay = std::exp(-dt);
    const double sd = std::sqrt(-0.5 * std::expm1(-2.0 * dt));
    return decay * s + sd * Vec2(z1, z2);
}

VecPath simulate_ou2d(double dt, double t_max, std::uint64_t seed, const Vec2& s0) {
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    if (!(t_max >= 0.0)) throw InvalidConfig("t_max must be nonnegative");
    const auto n = static_cast<std::size_t>(std::llround(t_max / dt));
    VecPath path{dt, 0.0, {}};
    path.states.reserve(n + 1);
    path.states.push_back(s0);
    Rng rng(seed);
    Vec2 s = s0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = rng.normal(), z2 = rng.normal();
        s = ou_exact_step(s, dt, z1, z2);
        path.states.push_back(s);
    }
    return path;
}

VecPath xa_path(const LinearizedSystem& sys, double dt, double t_max, std::uint64_t seed,
                XaConstruction construction) {
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    if (construction == XaConstruction::sde) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.t_max = t_max;
        cfg.seed = seed;
        return simulate_linear(sys.m, sys.tau() * sys.q, Vec2::Zero(), cfg);
    }
    // Rotation construction: the OU runs on the slow clock u = lambda t.
    const VecPath s = simulate_ou2d(sys.lambda * dt, sys.lambda * t_max, seed);
    VecPath out{dt, 0.0, {}};
    out.states.reserve(s.states.size());
    const double scale = sys.tau() / std::sqrt(sys.lambda);
    for (std::size_t i = 0; i < s.states.size(); ++i) {
        const double t = dt * static_cast<double>(i);
        out.states.push_back(scale * (sys.q * (rotation(-sys.omega * t) * s.states[i])));
    }
    return out;
}

double spectrum_linearized(const LinearizedSystem& sys, double f) {
    const double det = sys.m.determinant(), tr = sys.m.trace();
    const double m12 = sys.m(0, 1);
    const double a = f * f - det, b = f * tr;
    return sys.sigma * sys.sigma * m12 * m12 / (2.0 * std::numbers::pi * (a * a + b * b));
}

double spectrum_xa(const LinearizedSystem& sys, double f) {
    const double det = sys.m.determinant();
    return spectrum_linearized(sys, f) * (f * f + det) / (2.0 * sys.omega * sys.omega);
}

SpectralDensity theoretical_spectrum(const LinearizedSystem& sys, std::span<const double> freqs,
                                     SpectralDensity::Kind kind) {
    if (kind == SpectralDensity::Kind::empirical)
        throw InvalidConfig("theoretical_spectrum needs the linearized or xa kind");
    SpectralDensity out;
    out.kind = kind;
    out.freqs.assign(freqs.begin(), freqs.end());
    out.power.reserve(freqs.size());
    for (double f : freqs)
        out.power.push_back(kind == SpectralDensity::Kind::xa ? spectrum_xa(sys, f) : spectrum_linearized(sys, f));
    return out;
}

}  // namespace mlif
