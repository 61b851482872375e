#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>
#include <tuple>

#include "mlif/errors.hpp"
#include "mlif/estimation.hpp"
#include "mlif/parallel.hpp"

namespace mlif {

namespace {

State2 rk4_step(const MLParameters& p, const State2& s, double h) {
    auto f = [&](const State2& x) { return drift(x, p); };
    const Drift k1 = f(s);
    const Drift k2 = f({s.v + 0.5 * h * k1.dv, s.w + 0.5 * h * k1.dw});
    const Drift k3 = f({s.v + 0.5 * h * k2.dv, s.w + 0.5 * h * k2.dw});
    const Drift k4 = f({s.v + h * k3.dv, s.w + h * k3.dw});
    return {s.v + h / 6.0 * (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv),
            s.w + h / 6.0 * (k1.dw + 2 * k2.dw + 2 * k3.dw + k4.dw)};
}

// Iterates the Poincare map of L until successive crossings agree. A negative
// step integrates the time-reversed system.
double converge_on_line(const MLParameters& p, const State2& eq, double l0, double h,
                        const LimitCycleOptions& opts, std::size_t& turns) {
    State2 s{eq.v, eq.w - l0};
    double prev = std::numeric_limits<double>::quiet_NaN();
    turns = 0;
    // Generous step budget: 100 000 steps per turn.
    const std::size_t max_steps = opts.max_turns * 100000;
    for (std::size_t i = 0; i < max_steps; ++i) {
        const State2 next = rk4_step(p, s, h);
        const double a = s.v - eq.v, b = next.v - eq.v;
        if (a != 0.0 && ((a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0))) {
            const double frac = a / (a - b);
            const double w = s.w + frac * (next.w - s.w);
            if (w < eq.w) {
                const double l = eq.w - w;
                ++turns;
                if (!std::isnan(prev) && std::abs(l - prev) < opts.tolerance) return l;
                if (turns >= opts.max_turns) break;
                prev = l;
            }
        }
        s = next;
        if (!std::isfinite(s.v) || !std::isfinite(s.w)) break;
    }
    throw NoConvergence("limit cycle crossing of L did not converge");
}

}  // namespace

LimitCycleCrossings locate_limit_cycles(const MLParameters& p, const State2& eq, const LimitCycleOptions& opts) {
    if (!(opts.dt > 0.0)) throw InvalidConfig("dt must be positive");
    LimitCycleCrossings out;
    // Start well outside the firing cycle, close to w = 0.
    out.stable_l = converge_on_line(p, eq, 0.9 * eq.w, opts.dt, opts, out.stable_turns);
    out.unstable_l = converge_on_line(p, eq, 0.5 * out.stable_l, -opts.dt, opts, out.unstable_turns);
    if (!(out.unstable_l > 0.0 && out.unstable_l < out.stable_l))
        throw NoConvergence("limit cycles are not nested as expected around the equilibrium");
    return out;
}

bool first_cycle_fires(const MLParameters& p, const LinearizedSystem& sys, double l, const FiringTrialOptions& opts,
                       Rng& rng) {
    const State2& eq = sys.eq;
    State2 s{eq.v, eq.w - l};
    auto angle_of = [&](const State2& x) {
        const Vec2 y = sys.q_inv * Vec2(x.v - eq.v, x.w - eq.w);
        return std::atan2(y(1), y(0));
    };
    const MlStepper stepper(p, opts.dt, opts.boundary);
    const auto steps = static_cast<std::size_t>(std::ceil(opts.cap_periods * sys.period() / opts.dt));
    std::size_t boundary_events = 0;
    double angle = angle_of(s), turned = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        s = stepper.step(s, rng, boundary_events);
        if (s.v >= opts.spike_threshold) return true;
        const double a = angle_of(s);
        double d = a - angle;
        if (d > std::numbers::pi) d -= 2.0 * std::numbers::pi;
        if (d < -std::numbers::pi) d += 2.0 * std::numbers::pi;
        turned += d;
        angle = a;
        if (std::abs(turned) >= 2.0 * std::numbers::pi) return false;
    }
    return false;
}

std::pair<double, double> wilson_interval(std::size_t successes, std::size_t n, double z) {
    if (n == 0) return {0.0, 1.0};
    const double nn = static_cast<double>(n);
    const double ph = static_cast<double>(successes) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (ph + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(ph * (1.0 - ph) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

FiringPoint firing_probability(const MLParameters& p, const LinearizedSystem& sys, double l, std::size_t n_trials,
                               std::uint64_t seed, const FiringTrialOptions& opts, unsigned workers) {
    if (n_trials == 0) throw InvalidConfig("n_trials must be positive");
    if (!(opts.dt > 0.0)) throw InvalidConfig("dt must be positive");
    std::vector<char> fired(n_trials, 0);
    parallel_for(n_trials, workers, [&](std::size_t k) {
        Rng rng(replicate_seed(seed, k));
        fired[k] = first_cycle_fires(p, sys, l, opts, rng) ? 1 : 0;
    });
    FiringPoint pt;
    pt.l = l;
    pt.n_trials = n_trials;
    for (char f : fired) pt.fired += static_cast<std::size_t>(f);
    pt.p_hat = static_cast<double>(pt.fired) / static_cast<double>(n_trials);
    std::tie(pt.wilson_lo, pt.wilson_hi) = wilson_interval(pt.fired, n_trials);
    return pt;
}

double sigmoid(double l, double alpha, double beta) {
    return 1.0 / (1.0 + std::exp((alpha - l) / beta));
}

SigmoidFit fit_sigmoid(std::span<const double> l, std::span<const double> p_hat, std::span<const double> weights) {
    const std::size_t n = l.size();
    if (p_hat.size() != n) throw InvalidConfig("l and p_hat must have the same length");
    if (!weights.empty() && weights.size() != n) throw InvalidConfig("weights must match the data length");
    std::size_t interior = 0;
    for (double v : p_hat) interior += (v > 0.0 && v < 1.0) ? 1 : 0;
    if (interior < 3) throw DegenerateData("sigmoid fit needs at least 3 estimates strictly inside (0, 1)");

    auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
    auto sse_of = [&](double a, double b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = sigmoid(l[i], a, b) - p_hat[i];
            s += weight(i) * r * r;
        }
        return s;
    };

    const auto [lmin_it, lmax_it] = std::minmax_element(l.begin(), l.end());
    const double lmin = *lmin_it, lmax = *lmax_it;
    const double span = std::max(lmax - lmin, 1e-12);
    SigmoidFit best;
    best.sse = std::numeric_limits<double>::infinity();
    constexpr int kCoarse = 41;
    for (int i = 0; i < kCoarse; ++i) {
        const double a = lmin + span * i / (kCoarse - 1);
        for (int j = 0; j < kCoarse; ++j) {
            const double b = span * 1e-3 * std::pow(1e3, static_cast<double>(j) / (kCoarse - 1));
            const double s = sse_of(a, b);
            if (s < best.sse) {
                best.sse = s;
                best.alpha = a;
                best.beta = b;
            }
        }
    }

    // Levenberg-Marquardt on (alpha, beta) for 0.5 * sum w r^2.
    double a = best.alpha, b = best.beta, sse = best.sse, mu = 1e-3;
    double grad_norm = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < 2000; ++it) {
        double h11 = 0, h12 = 0, h22 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double s = sigmoid(l[i], a, b);
            const double ds = s * (1.0 - s);
            const double ja = -ds / b;
            const double jb = ds * (a - l[i]) / (b * b);
            const double r = s - p_hat[i];
            const double w = weight(i);
            h11 += w * ja * ja;
            h12 += w * ja * jb;
            h22 += w * jb * jb;
            g1 += w * ja * r;
            g2 += w * jb * r;
        }
        grad_norm = std::hypot(g1, g2);
        if (grad_norm < 1e-10) break;
        bool improved = false;
        while (mu < 1e20) {
            const double d11 = h11 * (1.0 + mu), d22 = h22 * (1.0 + mu);
            const double det = d11 * d22 - h12 * h12;
            if (det <= 0.0) {
                mu *= 10.0;
                continue;
            }
            const double da = -(d22 * g1 - h12 * g2) / det;
            const double db = -(d11 * g2 - h12 * g1) / det;
            const double na = a + da, nb = b + db;
            if (nb > 0.0) {
                const double ns = sse_of(na, nb);
                if (ns <= sse) {
                    const bool moved = na != a || nb != b;
                    a = na;
                    b = nb;
                    sse = ns;
                    mu = std::max(mu / 3.0, 1e-12);
                    improved = moved;
                    break;
                }
            }
            mu *= 4.0;
        }
        if (!improved) break;
    }
    best.alpha = a;
    best.beta = b;
    best.sse = sse;
    best.gradient_norm = grad_norm;
    best.iterations = it;
    return best;
}

FiringProbabilityFit estimate_firing_probability(const MLParameters& p, const FiringProbabilityConfig& cfg,
                                                 unsigned workers) {
    if (cfg.grid_points < 3) throw InvalidConfig("grid_points must be at least 3");
    if (!(cfg.divisions > 0.0)) throw InvalidConfig("divisions must be positive");
    const LinearizedSystem sys = build_linearized(p);
    FiringProbabilityFit out;
    out.sigma_star = p.sigma_star;
    out.cycles = locate_limit_cycles(p, sys.eq, cfg.cycles);
    const double delta = out.cycles.stable_l / cfg.divisions;
    for (std::size_t i = 1; i <= cfg.grid_points; ++i)
        out.grid.push_back(firing_probability(p, sys, delta * static_cast<double>(i), cfg.n_trials,
                                              stream_seed(cfg.seed, i), cfg.trial, workers));

    std::vector<double> ls, ps, ws;
    for (const auto& g : out.grid) {
        ls.push_back(g.l);
        ps.push_back(g.p_hat);
        // Inverse variance from the Wilson half-width, which stays positive at 0 and 1.
        const double half = 0.5 * (g.wilson_hi - g.wilson_lo) / 1.959963984540054;
        ws.push_back(1.0 / (half * half));
    }
    out.fit = fit_sigmoid(ls, ps, cfg.weighted ? std::span<const double>(ws) : std::span<const double>{});
    out.alpha_hat = out.fit.alpha;
    out.beta_hat = out.fit.beta;
    out.alpha_star = radius_on_line(sys, out.alpha_hat);
    out.beta_star = radius_on_line(sys, out.beta_hat);
    return out;
}

void write_firing_grid_csv(std::ostream& out, const FiringProbabilityFit& fit) {
    out << "l,p_hat,n\n";
    char buf[96];
    for (const auto& g : fit.grid) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%zu\n", g.l, g.p_hat, g.n_trials);
        out << buf;
    }
}

}  // namespace mlif
