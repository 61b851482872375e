#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "mlif/isi_sample.hpp"
#include "mlif/linalg.hpp"
#include "mlif/ml_model.hpp"
#include "mlif/random.hpp"

namespace mlif {

// Uniformly sampled trajectory: states[i] is the state at t0 + i * dt.
template <class State>
struct BasicPath {
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<State> states;

    std::size_t size() const { return states.size(); }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double duration() const { return states.empty() ? 0.0 : dt * static_cast<double>(states.size() - 1); }
};

using Path = BasicPath<State2>;
using VecPath = BasicPath<Vec2>;

enum class BoundaryPolicy { reflect, clamp };

struct SimConfig {
    double dt = 0.01;      // ms
    double t_max = 1000.0; // ms
    std::uint64_t seed = 1;
    BoundaryPolicy boundary = BoundaryPolicy::reflect;
    std::size_t record_stride = 1;
    // Stop after the first recorded sample with v >= spike_threshold.
    bool stop_at_spike = false;
    double spike_threshold = 0.0;

    // Throws InvalidConfig.
    void validate() const;
};

struct SimStats {
    std::size_t steps = 0;
    std::size_t boundary_events = 0;
};

// Distance of the reflecting/clamping barrier from 0 and 1.
inline constexpr double kBoundaryEpsilon = 1e-9;

// One Euler-Maruyama step of the stochastic Morris-Lecar model, noise on w
// only, with the boundary policy applied to w.
class MlStepper {
public:
    MlStepper(const MLParameters& p, double dt, BoundaryPolicy policy);

    State2 step(const State2& s, Rng& rng, std::size_t& boundary_events) const;

private:
    double apply_boundary(double w) const;

    const MLParameters& p_;
    double dt_;
    double sqrt_dt_;
    BoundaryPolicy policy_;
};

// Euler-Maruyama path of the stochastic Morris-Lecar model (noise on w only).
Path simulate_ml(const MLParameters& p, const State2& x0, const SimConfig& cfg, SimStats* stats = nullptr);

// Time of the first upward crossing of v = threshold, linearly interpolated
// inside the step.
std::optional<double> detect_spike(const Path& path, double v_threshold = 0.0);

// First spike time of one Euler-Maruyama run from x0 without recording the
// path; nullopt when no spike occurs before cfg.t_max.
std::optional<double> first_spike_time(const MLParameters& p, const State2& x0, const SimConfig& cfg,
                                       SimStats* stats = nullptr);

// n firing times, each from a fresh run started at the equilibrium; replicate
// i uses replicate_seed(cfg.seed, i). Runs without a spike are censored at t_max.
ISISample simulate_isi_ml(const MLParameters& p, std::size_t n, const SimConfig& cfg, unsigned workers = 0);

// Maximal sub-paths that stay below v_threshold and last at least min_len,
// re-centred on `eq`. The first segment starts at the path start; later ones
// at the first return of v to within `reentry_band` mV of eq.v after a spike.
std::vector<Path> extract_quiescent_segments(const Path& path, double min_len, const State2& eq,
                                             double v_threshold = 0.0, double reentry_band = 1.0);

// Euler-Maruyama for dX = M X dt + G dB.
VecPath simulate_linear(const Mat2& m, const Mat2& g, const Vec2& x0, const SimConfig& cfg);

// CSV with header `t,v,w`.
void write_path_csv(std::ostream& out, const Path& path);
// Same layout for 2-vector paths; the coordinates are written as v and w.
void write_path_csv(std::ostream& out, const VecPath& path);

}  // namespace mlif
