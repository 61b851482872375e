#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "mlif/linearization.hpp"
#include "mlif/random.hpp"
#include "mlif/sde.hpp"

namespace mlif {

// Power spectral density on an angular-frequency grid (rad/ms).
struct SpectralDensity {
    enum class Kind { linearized, xa, empirical };

    std::vector<double> freqs;
    std::vector<double> power;
    Kind kind = Kind::empirical;

    std::size_t peak_index() const;
    double peak_frequency() const { return freqs.at(peak_index()); }
    double peak_power() const { return power.at(peak_index()); }
};

std::string_view to_string(SpectralDensity::Kind kind);

// CSV `freq,power,kind`, one row per grid point, concatenated over curves.
void write_spectra_csv(std::ostream& out, std::span<const SpectralDensity> curves);

// Exact one-step update of dS = -S dt + dB given two standard normals:
// S e^{-dt} + sqrt((1 - e^{-2dt})/2) z.
Vec2 ou_exact_step(const Vec2& s, double dt, double z1, double z2);

// Standardized 2-D OU path by exact Gaussian transitions.
VecPath simulate_ou2d(double dt, double t_max, std::uint64_t seed, const Vec2& s0 = Vec2::Zero());

enum class XaConstruction {
    rotation,  // (tau/sqrt(lambda)) Q R_{-omega t} S_{lambda t}, S by exact transitions
    sde,       // Euler-Maruyama for dX = M X dt + tau Q dB
};

// Centred approximating process X^a started at the origin; dt in ms.
VecPath xa_path(const LinearizedSystem& sys, double dt, double t_max, std::uint64_t seed,
                XaConstruction construction = XaConstruction::rotation);

// First-coordinate spectral density of the linearized system at angular
// frequency f: (1/2pi) sigma^2 m12^2 / ((f^2 - det M)^2 + (f tr M)^2).
double spectrum_linearized(const LinearizedSystem& sys, double f);

// First-coordinate spectral density of X^a:
// spectrum_linearized(f) (f^2 + det M) / (2 omega^2).
double spectrum_xa(const LinearizedSystem& sys, double f);

SpectralDensity theoretical_spectrum(const LinearizedSystem& sys, std::span<const double> freqs,
                                     SpectralDensity::Kind kind);

}  // namespace mlif
