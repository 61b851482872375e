#include "mlif/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "mlif/errors.hpp"
#include "mlif/parallel.hpp"

namespace mlif {

namespace {

std::size_t step_count(const SimConfig& cfg) {
    return static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
}

void check_start(const State2& x0) {
    if (!(x0.w > 0.0 && x0.w < 1.0)) throw InvalidConfig("initial w must lie in (0, 1)");
    if (!std::isfinite(x0.v)) throw InvalidConfig("initial v must be finite");
}

}  // namespace

MlStepper::MlStepper(const MLParameters& p, double dt, BoundaryPolicy policy)
    : p_(p), dt_(dt), sqrt_dt_(std::sqrt(dt)), policy_(policy) {}

State2 MlStepper::step(const State2& s, Rng& rng, std::size_t& boundary_events) const {
    const Drift d = drift(s, p_);
    State2 next{s.v + d.dv * dt_, s.w + d.dw * dt_};
    if (p_.sigma_star > 0.0) next.w += diffusion_w(s, p_) * sqrt_dt_ * rng.normal();
    if (next.w <= kBoundaryEpsilon || next.w >= 1.0 - kBoundaryEpsilon) {
        ++boundary_events;
        next.w = apply_boundary(next.w);
    }
    return next;
}

double MlStepper::apply_boundary(double w) const {
    constexpr double lo = kBoundaryEpsilon, hi = 1.0 - kBoundaryEpsilon;
    if (policy_ == BoundaryPolicy::reflect) {
        if (w <= lo) w = 2.0 * lo - w;
        if (w >= hi) w = 2.0 * hi - w;
    }
    return std::clamp(w, lo, hi);
}

void SimConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidConfig("dt must be positive");
    if (!(t_max >= dt) || !std::isfinite(t_max)) throw InvalidConfig("t_max must be at least dt");
    if (record_stride == 0) throw InvalidConfig("record_stride must be positive");
}

Path simulate_ml(const MLParameters& p, const State2& x0, const SimConfig& cfg, SimStats* stats) {
    cfg.validate();
    p.validate();
    check_start(x0);
    const std::size_t n = step_count(cfg);
    Path path{cfg.dt * static_cast<double>(cfg.record_stride), 0.0, {}};
    path.states.reserve(n / cfg.record_stride + 1);
    path.states.push_back(x0);

    Rng rng(cfg.seed);
    MlStepper stepper(p, cfg.dt, cfg.boundary);
    SimStats local;
    State2 s = x0;
    for (std::size_t i = 1; i <= n; ++i) {
        s = stepper.step(s, rng, local.boundary_events);
        ++local.steps;
        if (i % cfg.record_stride == 0) {
            path.states.push_back(s);
            if (cfg.stop_at_spike && s.v >= cfg.spike_threshold) break;
        }
    }
    if (stats) *stats = local;
    return path;
}

std::optional<double> detect_spike(const Path& path, double v_threshold) {
    for (std::size_t i = 1; i < path.states.size(); ++i) {
        const double a = path.states[i - 1].v, b = path.states[i].v;
        if (a < v_threshold && b >= v_threshold)
            return path.time(i - 1) + path.dt * (v_threshold - a) / (b - a);
    }
    return std::nullopt;
}

std::optional<double> first_spike_time(const MLParameters& p, const State2& x0, const SimConfig& cfg,
                                       SimStats* stats) {
    cfg.validate();
    check_start(x0);
    const std::size_t n = step_count(cfg);
    Rng rng(cfg.seed);
    MlStepper stepper(p, cfg.dt, cfg.boundary);
    SimStats local;
    State2 s = x0;
    std::optional<double> spike;
    for (std::size_t i = 1; i <= n; ++i) {
        const State2 next = stepper.step(s, rng, local.boundary_events);
        ++local.steps;
        if (s.v < cfg.spike_threshold && next.v >= cfg.spike_threshold) {
            spike = cfg.dt * (static_cast<double>(i - 1) + (cfg.spike_threshold - s.v) / (next.v - s.v));
            break;
        }
        s = next;
    }
    if (stats) *stats = local;
    return spike;
}

ISISample simulate_isi_ml(const MLParameters& p, std::size_t n, const SimConfig& cfg, unsigned workers) {
    if (n == 0) throw InvalidConfig("n must be at least 1");
    cfg.validate();
    p.validate();
    const State2 eq = equilibrium(p);
    ISISample out;
    out.model_tag = "ml";
    out.seed = cfg.seed;
    out.times.assign(n, 0.0);
    std::vector<char> censored(n, 0);
    parallel_for(n, workers, [&](std::size_t i) {
        SimConfig rc = cfg;
        rc.seed = replicate_seed(cfg.seed, i);
        if (auto t = first_spike_time(p, eq, rc)) {
            out.times[i] = *t;
        } else {
            out.times[i] = cfg.t_max;
            censored[i] = 1;
        }
    });
    out.censored.assign(censored.begin(), censored.end());
    return out;
}

std::vector<Path> extract_quiescent_segments(const Path& path, double min_len, const State2& eq,
                                             double v_threshold, double reentry_band) {
    if (!(min_len > 0.0)) throw InvalidConfig("min_len must be positive");
    std::vector<Path> out;
    const auto& st = path.states;
    auto emit = [&](std::size_t begin, std::size_t end) {  // [begin, end)
        if (end <= begin) return;
        if (path.dt * static_cast<double>(end - begin - 1) < min_len) return;
        Path seg{path.dt, path.time(begin), {}};
        seg.states.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) seg.states.push_back({st[i].v - eq.v, st[i].w - eq.w});
        out.push_back(std::move(seg));
    };

    bool inside = !st.empty() && st[0].v < v_threshold;
    std::size_t start = 0;
    for (std::size_t i = 0; i < st.size(); ++i) {
        if (inside) {
            if (st[i].v >= v_threshold) {
                emit(start, i);
                inside = false;
            }
        } else if (st[i].v < v_threshold && std::abs(st[i].v - eq.v) <= reentry_band) {
            inside = true;
            start = i;
        }
    }
    if (inside) emit(start, st.size());
    return out;
}

VecPath simulate_linear(const Mat2& m, const Mat2& g, const Vec2& x0, const SimConfig& cfg) {
    cfg.validate();
    const std::size_t n = step_count(cfg);
    VecPath path{cfg.dt * static_cast<double>(cfg.record_stride), 0.0, {}};
    path.states.reserve(n / cfg.record_stride + 1);
    path.states.push_back(x0);
    Rng rng(cfg.seed);
    const double sq = std::sqrt(cfg.dt);
    Vec2 x = x0;
    for (std::size_t i = 1; i <= n; ++i) {
        const Vec2 db(sq * rng.normal(), sq * rng.normal());
        x = x + cfg.dt * (m * x) + g * db;
        if (i % cfg.record_stride == 0) path.states.push_back(x);
    }
    return path;
}

void write_path_csv(std::ostream& out, const Path& path) {
    out << "t,v,w\n";
    char buf[96];
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", path.time(i), path.states[i].v, path.states[i].w);
        out << buf;
    }
}

void write_path_csv(std::ostream& out, const VecPath& path) {
    out << "t,v,w\n";
    char buf[96];
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", path.time(i), path.states[i](0), path.states[i](1));
        out << buf;
    }
}

}  // namespace mlif
