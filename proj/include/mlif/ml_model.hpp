#pragma once

#include <map>
#include <string>
#include <string_view>

#include "mlif/linalg.hpp"

namespace mlif {

// Two-dimensional Morris-Lecar model with Jacobi-diffusion channel noise on
// the potassium conductance. Units: mV, ms, uS/cm^2, uF/cm^2, uA/cm^2.
struct MLParameters {
    double v1 = -1.2;
    double v2 = 18.0;
    double v3 = 2.0;
    double v4 = 30.0;
    double g_ca = 4.4;
    double g_k = 8.0;
    double g_l = 2.0;
    double v_ca = 120.0;
    double v_k = -84.0;
    double v_l = -60.0;
    double c = 20.0;
    double phi = 0.04;
    double i_app = 90.0;
    // Dimensionless noise amplitude in (0, 1]; 0 gives the deterministic model.
    double sigma_star = 0.05;

    // Throws InvalidParameters. sigma_star = 0 is accepted for deterministic runs.
    void validate() const;
};

struct State2 {
    double v = 0.0;  // mV
    double w = 0.0;  // dimensionless, in (0, 1)
};

struct Drift {
    double dv = 0.0;  // mV/ms
    double dw = 0.0;  // 1/ms
};

double m_inf(double v, const MLParameters& p);
double alpha_rate(double v, const MLParameters& p);
double beta_rate(double v, const MLParameters& p);

// alpha/(alpha+beta), the w-nullcline.
double w_inf(double v, const MLParameters& p);

Drift drift(const State2& s, const MLParameters& p);

// Diffusion coefficient of the w equation. Zero on the boundary w in {0, 1}.
double diffusion_w(const State2& s, const MLParameters& p);

// Central-difference Jacobian of the drift.
Mat2 finite_difference_jacobian(const MLParameters& p, const State2& s, double h = 1e-6);

// Stable equilibrium of the deterministic system. The scalar function
// f(v, w_inf(v)) is scanned on [v_k, v_ca] with `scan_step` mV resolution and
// every sign change is refined by bisection. With several roots the unique
// stable one (negative-real-part eigenvalues) is returned.
// Throws NoRootInBracket.
State2 equilibrium(const MLParameters& p, double scan_step = 1.0);

// Noise amplitude implied by N channels: 1 / sqrt(w_eq (1 - w_eq) N).
double sigma_star_of_channels(double n_channels, double w_eq);

// Flat "key = value" format, one entry per line, '#' starts a comment.
// Keys: V1 V2 V3 V4 gCa gK gL VCa VK VL C phi I sigma_star.
using KeyValues = std::map<std::string, std::string, std::less<>>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

// Unknown keys are an error. Missing keys keep their defaults.
MLParameters ml_parameters_from(const KeyValues& kv);
MLParameters parse_ml_parameters(std::string_view text);
KeyValues to_key_values(const MLParameters& p);
std::string format_ml_parameters(const MLParameters& p);

bool is_ml_parameter_key(std::string_view key);

}  // namespace mlif
