#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "mlif/isi_sample.hpp"
#include "mlif/linearization.hpp"
#include "mlif/ou_approx.hpp"
#include "mlif/radial_lif.hpp"
#include "mlif/sde.hpp"

namespace mlif {

// ---------------------------------------------------------------------------
// Spectral estimation

// Raw periodogram (dt / (2 pi N)) |sum_n x_n e^{-i f n dt}|^2 at the Fourier
// frequencies f_k = 2 pi k / (N dt), k = 0..N/2 (rad/ms for dt in ms).
SpectralDensity periodogram(std::span<const double> x, double dt);

struct SpectrumOptions {
    std::size_t min_segments = 20;
    double min_duration = 450.0;  // ms
};

// Averages the raw periodograms of equally sampled series after truncating
// them to a common length. No smoothing or tapering. Series shorter than
// min_duration are skipped; throws InsufficientSegments when fewer than
// min_segments remain.
SpectralDensity estimate_spectrum(std::span<const std::vector<double>> series, double dt,
                                  const SpectrumOptions& opts = {});

// Coordinate `coord` (0 = v, 1 = w) of quiescent segments.
SpectralDensity estimate_spectrum(std::span<const Path> segments, int coord, const SpectrumOptions& opts = {});

// Rescales so the maximum matches the X^a spectrum's maximum on the same grid.
void scale_to_theory(SpectralDensity& empirical, const LinearizedSystem& sys);

// ---------------------------------------------------------------------------
// Conditional firing probability along L = {v = V_eq, w < W_eq}

struct LimitCycleCrossings {
    double unstable_l = 0.0;  // distance below W_eq where the unstable cycle crosses L
    double stable_l = 0.0;    // same for the stable (firing) cycle
    std::size_t unstable_turns = 0;
    std::size_t stable_turns = 0;
};

struct LimitCycleOptions {
    double dt = 0.01;            // RK4 step, ms
    double tolerance = 1e-9;     // successive Poincare-crossing difference
    std::size_t max_turns = 5000;
};

// Stable cycle: forward integration from outside it. Unstable cycle: the
// time-reversed system, which makes it attracting. Throws NoConvergence.
LimitCycleCrossings locate_limit_cycles(const MLParameters& p, const State2& eq, const LimitCycleOptions& opts = {});

struct FiringTrialOptions {
    double dt = 0.01;           // ms
    double cap_periods = 3.0;   // trial length cap in rotation periods
    BoundaryPolicy boundary = BoundaryPolicy::reflect;
    double spike_threshold = 0.0;
};

// One trial from (V_eq, W_eq - l): true when v crosses the threshold before
// the angle in Q^{-1}-coordinates completes a full turn (or the cap expires).
bool first_cycle_fires(const MLParameters& p, const LinearizedSystem& sys, double l, const FiringTrialOptions& opts,
                       Rng& rng);

struct FiringPoint {
    double l = 0.0;
    double p_hat = 0.0;
    std::size_t n_trials = 0;
    std::size_t fired = 0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
};

// Frequency of firing over n_trials; trial k uses replicate_seed(seed, k).
FiringPoint firing_probability(const MLParameters& p, const LinearizedSystem& sys, double l, std::size_t n_trials,
                               std::uint64_t seed, const FiringTrialOptions& opts = {}, unsigned workers = 0);

// 95% Wilson score interval.
std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);

struct SigmoidFit {
    double alpha = 0.0;
    double beta = 0.0;
    double sse = 0.0;
    double gradient_norm = 0.0;
    std::size_t iterations = 0;
};

// Least squares for p(l) = 1 / (1 + exp((alpha - l)/beta)): coarse grid, then
// Levenberg-Marquardt. Optional weights multiply squared residuals.
// Throws DegenerateData with fewer than 3 points strictly inside (0, 1).
SigmoidFit fit_sigmoid(std::span<const double> l, std::span<const double> p_hat,
                       std::span<const double> weights = {});

double sigmoid(double l, double alpha, double beta);

struct FiringProbabilityConfig {
    std::size_t n_trials = 1000;
    std::size_t grid_points = 25;
    double divisions = 20.0;  // grid step = stable-cycle distance / divisions
    std::uint64_t seed = 1;
    bool weighted = false;    // weight the fit by inverse Wilson variance
    FiringTrialOptions trial;
    LimitCycleOptions cycles;
};

struct FiringProbabilityFit {
    double sigma_star = 0.0;
    std::vector<FiringPoint> grid;
    LimitCycleCrossings cycles;
    SigmoidFit fit;
    double alpha_hat = 0.0;
    double beta_hat = 0.0;
    double alpha_star = 0.0;  // alpha_hat sqrt(2 lambda)/sigma
    double beta_star = 0.0;
};

// Grid l_i = i delta, i = 1..grid_points, delta = stable_l / divisions.
// Grid point i draws its trials from stream_seed(cfg.seed, i).
FiringProbabilityFit estimate_firing_probability(const MLParameters& p, const FiringProbabilityConfig& cfg,
                                                 unsigned workers = 0);

// CSV `l,p_hat,n`.
void write_firing_grid_csv(std::ostream& out, const FiringProbabilityFit& fit);

// ---------------------------------------------------------------------------
// Survival analysis

struct CumulativeHazardCurve {
    std::vector<double> times;   // distinct event times, ascending
    std::vector<double> values;  // estimate right after each event time

    // Right-continuous step function, 0 before the first event.
    double value_at(double t) const;
};

// Nelson-Aalen: sum over event times of d_i / n_i. Censored times leave the
// risk set without a jump; events precede censorings at equal times.
CumulativeHazardCurve nelson_aalen(const ISISample& sample);

struct HazardFitPoint {
    double alpha = 0.0;
    double beta = 0.0;
    double objective = 0.0;
};

struct HazardFitOptions {
    std::size_t grid_points = 60;
    double beta_min = 0.05;
    double beta_max = 3.0;
    std::size_t coarse_betas = 60;
    std::size_t max_iterations = 200;
    HazardIntegrand integrand = HazardIntegrand::published;
};

struct HazardFit {
    double alpha = 0.0;
    double beta = 0.0;
    double objective = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    std::vector<double> grid;               // evaluation times, log-spaced
    std::vector<HazardFitPoint> coarse;     // profile over beta
};

// Sum of squared differences between A(t; alpha, beta) and the estimate on `grid`.
double hazard_fit_objective(const CumulativeHazardCurve& curve, double lambda, double alpha, double beta,
                            std::span<const double> grid, HazardIntegrand integrand = HazardIntegrand::published);

// Least-squares calibration of the exponential hazard: coarse profile over
// beta (alpha solved in closed form for each beta), Brent refinement of the
// profile, then a Levenberg-Marquardt polish in (alpha, beta). Never returns a
// point worse than the best coarse point. `converged` is false when the
// profile minimum sits on the edge of the beta range.
HazardFit fit_exponential_hazard(const CumulativeHazardCurve& curve, double lambda, const HazardFitOptions& opts = {});

// ---------------------------------------------------------------------------
// ISI comparison

struct IsiComparison {
    double ks_distance = 0.0;
    double mean_diff = 0.0;       // mean(a) - mean(b)
    double variance_ratio = 0.0;  // var(a) / var(b)
};

// Two-sample comparison on uncensored times.
IsiComparison compare_isi(const ISISample& a, const ISISample& b);

// Sample against a density/survival curve; curve moments are truncated at its grid end.
IsiComparison compare_isi(const ISISample& a, const IsiCurve& b);

// Linear-interpolation quantile (type 7) of the uncensored times.
double quantile(const ISISample& sample, double q);

}  // namespace mlif
