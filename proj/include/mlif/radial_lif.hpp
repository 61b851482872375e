#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mlif/isi_sample.hpp"
#include "mlif/ml_model.hpp"
#include "mlif/random.hpp"

namespace mlif {

// Bounded firing rate (1/ms): base_rate / (1 + exp((alpha_star - r)/beta_star)).
// base_rate is omega/(2 pi) for the ML-calibrated model; base_rate = 0 gives a
// neuron that never fires, and a very negative alpha_star a constant rate.
struct LogisticHazard {
    double alpha_star = 0.0;
    double beta_star = 1.0;
    double base_rate = 0.0;
};

// Unbounded firing rate (1/ms): exp((r - alpha)/beta).
struct ExponentialHazard {
    double alpha = 0.0;
    double beta = 1.0;
};

// Fire on the first passage of R through the threshold.
struct HardThreshold {
    double threshold = 1.0;
};

using HazardModel = std::variant<LogisticHazard, ExponentialHazard, HardThreshold>;

// Throws InvalidParameters.
void validate(const HazardModel& h);
std::string hazard_tag(const HazardModel& h);

// Config keys: hazard = logistic|exponential|hard, alpha_star, beta_star,
// base_rate, alpha, beta, threshold. Unknown keys are an error.
HazardModel hazard_model_from(const KeyValues& kv);
KeyValues to_key_values(const HazardModel& h);
bool is_hazard_key(std::string_view key);

// Rate at radius r (1/ms). Throws HardThresholdHasNoRate for HardThreshold.
double hazard(const HazardModel& h, double r);

// Upper bound of the rate over radii in [0, r_max].
double hazard_upper_bound(const HazardModel& h, double r_max);

// Exact draw of R_u given R_0 = s for the standard 2-dof radial OU process:
// R_u^2 = v * chi2'(2, delta), v = (1 - e^{-2u})/2, delta = s^2 e^{-2u}/v.
double radial_transition_sample(double s, double u, Rng& rng);

// Transition density f_u(r, s) of the radial OU process (log-space Bessel term).
double transition_density_r(double r, double s, double u);

// Monte Carlo estimate of the ISI density g(t) from `paths` exact skeletons of
// R_{lambda s} on an n-interval grid over [0, t], trapezoidal hazard integral.
double isi_density(const HazardModel& h, double lambda, double t, std::size_t paths, std::size_t n,
                   std::uint64_t seed);

// Same estimator for P(T > t).
double survival(const HazardModel& h, double lambda, double t, std::size_t paths, std::size_t n,
                std::uint64_t seed);

struct IsiCurve {
    std::vector<double> t;
    std::vector<double> density;
    std::vector<double> survival;

    // 1 - survival, linearly interpolated; 1 - survival.back() beyond the grid.
    double cdf(double x) const;
    // Mean of min(T, t.back()) by trapezoidal integration of the survival.
    double truncated_mean() const;
};

// Density and survival on the uniform grid t_k = k t_max / n_steps sharing
// one set of skeletons. Aggregation order is fixed, so the result does not
// depend on `workers`.
IsiCurve isi_curve(const HazardModel& h, double lambda, double t_max, std::size_t n_steps, std::size_t paths,
                   std::uint64_t seed, unsigned workers = 0);

void write_density_csv(std::ostream& out, const IsiCurve& curve);
void write_survival_csv(std::ostream& out, const IsiCurve& curve);

// E[exp(R_u / beta)] for R_0 = 0: 1 + sqrt(pi) a e^{a^2/4} Phi(a/sqrt 2),
// a = sqrt(1 - e^{-2u}) / beta.
double expected_exp_radius(double beta, double u);

enum class HazardIntegrand {
    // sqrt(pi) e^{-alpha/beta} (g e^{g^2/4} Phi(g) + 1), as published.
    published,
    // e^{-alpha/beta} E[exp(R_{lambda s}/beta)], from expected_exp_radius.
    exact,
};

// Cumulative hazard A(t) of the exponential hazard from R_0 = 0, t in ms.
double cumulative_hazard_theoretical(double alpha, double beta, double lambda, double t,
                                     HazardIntegrand integrand = HazardIntegrand::published);

// A at each of the ascending times, integrating piecewise.
std::vector<double> cumulative_hazard_curve(double alpha, double beta, double lambda, std::span<const double> times,
                                            HazardIntegrand integrand = HazardIntegrand::published);

// Mean first-passage time of R from 0 to S in OU time units:
// (S^2/2) 2F2(1,1;2,2;S^2). Divide by lambda for ms.
double mean_first_passage(double threshold);

// Threshold S in (0, 10] whose mean first-passage time equals `target`
// (OU time units), by bisection. Throws NoConvergence when out of range.
double threshold_for_mean(double target);

struct LifConfig {
    double dt = 0.1;        // ms
    double t_max = 2.0e4;   // ms; replicates without a spike are censored here
    std::uint64_t seed = 1;
    // Per-step bound margin in units of the per-step OU standard deviation;
    // the bound fails with probability about exp(-k^2/2) per step.
    double bound_sigmas = 5.5;

    void validate() const;
};

// Radial OU with state-dependent Poisson firing and reset to 0, simulated on
// exact transitions. Soft hazards fire by thinning against a per-step bound;
// the hard threshold fires on first passage, using a Brownian-bridge
// crossing test between skeleton points. Throws ThinningBoundExceeded.
ISISample simulate_lif(const HazardModel& h, double lambda, std::size_t n, const LifConfig& cfg,
                       unsigned workers = 0);

}  // namespace mlif
