#include "mlif/radial_lif.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

#include "mlif/errors.hpp"
#include "mlif/parallel.hpp"
#include "mlif/quadrature.hpp"
#include "mlif/specfun.hpp"

namespace mlif {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double read_number(const KeyValues& kv, std::string_view key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("missing hazard key '" + std::string(key) + "'");
    double value = 0.0;
    const auto& s = it->second;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw ParseError("invalid number for '" + std::string(key) + "': '" + s + "'");
    return value;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Per-coordinate standard deviation of one exact OU step of length du.
double ou_step_sd(double du) { return std::sqrt(-0.5 * std::expm1(-2.0 * du)); }

// Fixed partition of `paths` into blocks; each block is summed in index order
// and blocks are combined in order, so sums are independent of scheduling.
constexpr std::size_t kBlocks = 64;

}  // namespace

void validate(const HazardModel& h) {
    std::visit(overloaded{
                   [](const LogisticHazard& l) {
                       if (!(l.beta_star > 0.0)) throw InvalidParameters("logistic beta_star must be positive");
                       if (!(l.base_rate >= 0.0)) throw InvalidParameters("logistic base_rate must be nonnegative");
                       if (std::isnan(l.alpha_star)) throw InvalidParameters("logistic alpha_star is NaN");
                   },
                   [](const ExponentialHazard& e) {
                       if (!(e.beta > 0.0)) throw InvalidParameters("exponential beta must be positive");
                       if (!std::isfinite(e.alpha)) throw InvalidParameters("exponential alpha must be finite");
                   },
                   [](const HardThreshold& t) {
                       if (!(t.threshold > 0.0)) throw InvalidParameters("threshold must be positive");
                   },
               },
               h);
}

std::string hazard_tag(const HazardModel& h) {
    return std::visit(overloaded{
                          [](const LogisticHazard&) { return std::string("logistic"); },
                          [](const ExponentialHazard&) { return std::string("exponential"); },
                          [](const HardThreshold&) { return std::string("hard"); },
                      },
                      h);
}

bool is_hazard_key(std::string_view key) {
    for (auto k : {"hazard", "alpha_star", "beta_star", "base_rate", "alpha", "beta", "threshold"})
        if (key == k) return true;
    return false;
}

HazardModel hazard_model_from(const KeyValues& kv) {
    const auto kind = kv.find("hazard");
    if (kind == kv.end()) throw ParseError("missing key 'hazard'");
    auto expect_only = [&](std::initializer_list<std::string_view> allowed) {
        for (const auto& [k, v] : kv) {
            if (k == "hazard") continue;
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw ParseError("key '" + k + "' does not apply to hazard '" + kind->second + "'");
        }
    };
    HazardModel h;
    if (kind->second == "logistic") {
        expect_only({"alpha_star", "beta_star", "base_rate"});
        h = LogisticHazard{read_number(kv, "alpha_star"), read_number(kv, "beta_star"), read_number(kv, "base_rate")};
    } else if (kind->second == "exponential") {
        expect_only({"alpha", "beta"});
        h = ExponentialHazard{read_number(kv, "alpha"), read_number(kv, "beta")};
    } else if (kind->second == "hard") {
        expect_only({"threshold"});
        h = HardThreshold{read_number(kv, "threshold")};
    } else {
        throw ParseError("unknown hazard kind '" + kind->second + "'");
    }
    validate(h);
    return h;
}

KeyValues to_key_values(const HazardModel& h) {
    return std::visit(overloaded{
                          [](const LogisticHazard& l) {
                              return KeyValues{{"hazard", "logistic"},
                                               {"alpha_star", num(l.alpha_star)},
                                               {"beta_star", num(l.beta_star)},
                                               {"base_rate", num(l.base_rate)}};
                          },
                          [](const ExponentialHazard& e) {
                              return KeyValues{{"hazard", "exponential"}, {"alpha", num(e.alpha)}, {"beta", num(e.beta)}};
                          },
                          [](const HardThreshold& t) {
                              return KeyValues{{"hazard", "hard"}, {"threshold", num(t.threshold)}};
                          },
                      },
                      h);
}

double hazard(const HazardModel& h, double r) {
    return std::visit(overloaded{
                          [r](const LogisticHazard& l) {
                              if (l.base_rate == 0.0) return 0.0;
                              return l.base_rate / (1.0 + std::exp((l.alpha_star - r) / l.beta_star));
                          },
                          [r](const ExponentialHazard& e) { return std::exp((r - e.alpha) / e.beta); },
                          [](const HardThreshold&) -> double {
                              throw HardThresholdHasNoRate("the hard threshold fires on first passage and has no rate");
                          },
                      },
                      h);
}

double hazard_upper_bound(const HazardModel& h, double r_max) {
    return std::visit(overloaded{
                          [](const LogisticHazard& l) { return l.base_rate; },
                          [r_max](const ExponentialHazard& e) { return std::exp((r_max - e.alpha) / e.beta); },
                          [](const HardThreshold&) -> double {
                              throw HardThresholdHasNoRate("the hard threshold fires on first passage and has no rate");
                          },
                      },
                      h);
}

double radial_transition_sample(double s, double u, Rng& rng) {
    const double v = -0.5 * std::expm1(-2.0 * u);
    const double delta = s * s * std::exp(-2.0 * u) / v;
    return std::sqrt(v * sample_noncentral_chi2_2(delta, rng));
}

double transition_density_r(double r, double s, double u) {
    if (!(r > 0.0)) return 0.0;
    const double one_minus = -std::expm1(-2.0 * u);
    const double e2 = std::exp(-2.0 * u);
    const double log_f = std::log(2.0 * r / one_minus) - (r * r + s * s * e2) / one_minus +
                         log_i0(r * s / std::sinh(u));
    return std::exp(log_f);
}

namespace {

struct SkeletonSums {
    std::vector<double> density;
    std::vector<double> survival;
};

// Walks one exact skeleton on n intervals of length du (OU time) / dt (ms) and
// adds alpha(R_k) e^{-I_k} and e^{-I_k} at every grid index k.
void accumulate_skeleton(const HazardModel& h, double du, double dt, std::size_t n, Rng& rng,
                         SkeletonSums& sums) {
    double r = 0.0;
    double a_prev = hazard(h, r);
    double integral = 0.0;
    sums.density[0] += a_prev;
    sums.survival[0] += 1.0;
    for (std::size_t k = 1; k <= n; ++k) {
        r = radial_transition_sample(r, du, rng);
        const double a = hazard(h, r);
        integral += 0.5 * dt * (a + a_prev);
        const double surv = std::exp(-integral);
        sums.density[k] += a * surv;
        sums.survival[k] += surv;
        a_prev = a;
    }
}

SkeletonSums skeleton_average(const HazardModel& h, double lambda, double t, std::size_t n, std::size_t paths,
                              std::uint64_t seed, unsigned workers) {
    validate(h);
    if (!(lambda > 0.0)) throw InvalidParameters("lambda must be positive");
    if (paths == 0) throw InvalidConfig("at least one path is required");
    if (n < 1) throw InvalidConfig("at least one grid interval is required");
    const double dt = t / static_cast<double>(n);
    const double du = lambda * dt;

    const std::size_t blocks = std::min(kBlocks, paths);
    std::vector<SkeletonSums> partial(blocks, SkeletonSums{std::vector<double>(n + 1, 0.0),
                                                           std::vector<double>(n + 1, 0.0)});
    parallel_for(blocks, workers, [&](std::size_t b) {
        for (std::size_t m = b; m < paths; m += blocks) {
            Rng rng(replicate_seed(seed, m));
            accumulate_skeleton(h, du, dt, n, rng, partial[b]);
        }
    });
    SkeletonSums total{std::vector<double>(n + 1, 0.0), std::vector<double>(n + 1, 0.0)};
    for (const auto& p : partial) {
        for (std::size_t k = 0; k <= n; ++k) {
            total.density[k] += p.density[k];
            total.survival[k] += p.survival[k];
        }
    }
    const double inv = 1.0 / static_cast<double>(paths);
    for (std::size_t k = 0; k <= n; ++k) {
        total.density[k] *= inv;
        total.survival[k] *= inv;
    }
    return total;
}

}  // namespace

double isi_density(const HazardModel& h, double lambda, double t, std::size_t paths, std::size_t n,
                   std::uint64_t seed) {
    if (!(t >= 0.0)) throw InvalidConfig("t must be nonnegative");
    if (n < 2) throw InvalidConfig("the trapezoidal grid needs n >= 2");
    if (t == 0.0) return hazard(h, 0.0);
    return skeleton_average(h, lambda, t, n, paths, seed, 1).density[n];
}

double survival(const HazardModel& h, double lambda, double t, std::size_t paths, std::size_t n,
                std::uint64_t seed) {
    if (!(t >= 0.0)) throw InvalidConfig("t must be nonnegative");
    if (n < 2) throw InvalidConfig("the trapezoidal grid needs n >= 2");
    if (t == 0.0) return 1.0;
    return skeleton_average(h, lambda, t, n, paths, seed, 1).survival[n];
}

IsiCurve isi_curve(const HazardModel& h, double lambda, double t_max, std::size_t n_steps, std::size_t paths,
                   std::uint64_t seed, unsigned workers) {
    if (!(t_max > 0.0)) throw InvalidConfig("t_max must be positive");
    auto sums = skeleton_average(h, lambda, t_max, n_steps, paths, seed, workers);
    IsiCurve c;
    c.t.resize(n_steps + 1);
    for (std::size_t k = 0; k <= n_steps; ++k) c.t[k] = t_max * static_cast<double>(k) / static_cast<double>(n_steps);
    c.density = std::move(sums.density);
    c.survival = std::move(sums.survival);
    return c;
}

double IsiCurve::cdf(double x) const {
    if (t.empty()) throw DegenerateData("empty ISI curve");
    if (x <= t.front()) return 1.0 - survival.front();
    if (x >= t.back()) return 1.0 - survival.back();
    const auto it = std::upper_bound(t.begin(), t.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - t.begin());
    const double w = (x - t[k - 1]) / (t[k] - t[k - 1]);
    return 1.0 - ((1.0 - w) * survival[k - 1] + w * survival[k]);
}

double IsiCurve::truncated_mean() const {
    double m = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) m += 0.5 * (t[k] - t[k - 1]) * (survival[k] + survival[k - 1]);
    return m;
}

void write_density_csv(std::ostream& out, const IsiCurve& curve) {
    out << "t,density\n";
    char buf[64];
    for (std::size_t k = 0; k < curve.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", curve.t[k], curve.density[k]);
        out << buf;
    }
}

void write_survival_csv(std::ostream& out, const IsiCurve& curve) {
    out << "t,survival\n";
    char buf[64];
    for (std::size_t k = 0; k < curve.t.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", curve.t[k], curve.survival[k]);
        out << buf;
    }
}

double expected_exp_radius(double beta, double u) {
    const double a = std::sqrt(-std::expm1(-2.0 * u)) / beta;
    return 1.0 + std::sqrt(std::numbers::pi) * a * std::exp(0.25 * a * a) * norm_cdf(a / std::numbers::sqrt2);
}

namespace {

// Integrand of A(t) in ms, evaluated in log space so that small beta does
// not overflow e^{g^2/4} before the e^{-alpha/beta} factor is applied.
double hazard_integrand(double alpha, double beta, double lambda, double s, HazardIntegrand kind) {
    const double g = std::sqrt(-std::expm1(-2.0 * lambda * s)) / beta;
    const double base = -alpha / beta;
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    if (g == 0.0) return (kind == HazardIntegrand::published ? sqrt_pi : 1.0) * std::exp(base);
    if (kind == HazardIntegrand::published)
        return sqrt_pi * (std::exp(base + std::log(g) + 0.25 * g * g + std::log(norm_cdf(g))) + std::exp(base));
    return std::exp(base) +
           sqrt_pi * std::exp(base + std::log(g) + 0.25 * g * g + std::log(norm_cdf(g / std::numbers::sqrt2)));
}

void check_hazard_args(double alpha, double beta, double lambda) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !(lambda > 0.0))
        throw InvalidParameters("cumulative hazard needs alpha, beta, lambda > 0");
}

}  // namespace

double cumulative_hazard_theoretical(double alpha, double beta, double lambda, double t, HazardIntegrand integrand) {
    check_hazard_args(alpha, beta, lambda);
    if (!(t >= 0.0)) throw InvalidConfig("t must be nonnegative");
    if (t == 0.0) return 0.0;
    auto f = [&](double s) { return hazard_integrand(alpha, beta, lambda, s, integrand); };
    return integrate(f, 0.0, t, 1e-12);
}

std::vector<double> cumulative_hazard_curve(double alpha, double beta, double lambda, std::span<const double> times,
                                            HazardIntegrand integrand) {
    check_hazard_args(alpha, beta, lambda);
    std::vector<double> out;
    out.reserve(times.size());
    auto f = [&](double s) { return hazard_integrand(alpha, beta, lambda, s, integrand); };
    double prev_t = 0.0, acc = 0.0;
    for (double t : times) {
        if (t < prev_t) throw InvalidConfig("times must be ascending and nonnegative");
        if (t > prev_t) acc += integrate(f, prev_t, t, 1e-11);
        out.push_back(acc);
        prev_t = t;
    }
    return out;
}

double mean_first_passage(double threshold) {
    if (!(threshold > 0.0)) throw InvalidParameters("threshold must be positive");
    const double x = threshold * threshold;
    return 0.5 * x * hyp2f2_1122(x);
}

double threshold_for_mean(double target) {
    constexpr double hi_limit = 10.0;
    if (!(target > 0.0)) throw InvalidParameters("target mean must be positive");
    if (target >= mean_first_passage(hi_limit))
        throw NoConvergence("target mean is beyond the threshold search range (0, 10]");
    double lo = 0.0, hi = hi_limit;
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mean_first_passage(mid) < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

void LifConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    if (!(t_max >= dt)) throw InvalidConfig("t_max must be at least dt");
    if (!(bound_sigmas > 0.0)) throw InvalidConfig("bound_sigmas must be positive");
}

namespace {

struct Firing {
    double time_ms;
    bool censored;
};

Firing run_hard(double threshold, double lambda, const LifConfig& cfg, Rng& rng) {
    const double du = lambda * cfg.dt;
    const auto n = static_cast<std::size_t>(std::ceil(cfg.t_max / cfg.dt));
    double r = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double next = radial_transition_sample(r, du, rng);
        const double u0 = du * static_cast<double>(k);
        if (next >= threshold) {
            const double frac = (threshold - r) / (next - r);
            return {(u0 + frac * du) / lambda, false};
        }
        // Probability that a unit-diffusion bridge between r and next touched
        // the threshold inside the step.
        const double p_cross = std::exp(-2.0 * (threshold - r) * (threshold - next) / du);
        if (rng.uniform() < p_cross) return {(u0 + 0.5 * du) / lambda, false};
        r = next;
    }
    return {cfg.t_max, true};
}

Firing run_thinning(const HazardModel& h, double lambda, const LifConfig& cfg, Rng& rng) {
    const double du_max = lambda * cfg.dt;
    const double u_end = lambda * cfg.t_max;
    const double margin = cfg.bound_sigmas * ou_step_sd(du_max);
    double u = 0.0, r = 0.0;
    while (u < u_end) {
        const double du = std::min(du_max, u_end - u);
        const double bound = hazard_upper_bound(h, r + margin);  // 1/ms
        if (!(bound > 0.0)) {
            r = radial_transition_sample(r, du, rng);
            u += du;
            continue;
        }
        const double wait = rng.exponential(bound / lambda);  // OU time
        if (wait >= du) {
            r = radial_transition_sample(r, du, rng);
            u += du;
            continue;
        }
        r = radial_transition_sample(r, wait, rng);
        u += wait;
        const double rate = hazard(h, r);
        if (rate > bound * (1.0 + 1e-12)) {
            char msg[160];
            std::snprintf(msg, sizeof msg, "hazard %.6g at r = %.6g exceeds the step bound %.6g", rate, r, bound);
            throw ThinningBoundExceeded(msg);
        }
        if (rng.uniform() * bound < rate) return {u / lambda, false};
    }
    return {cfg.t_max, true};
}

}  // namespace

ISISample simulate_lif(const HazardModel& h, double lambda, std::size_t n, const LifConfig& cfg, unsigned workers) {
    validate(h);
    cfg.validate();
    if (!(lambda > 0.0)) throw InvalidParameters("lambda must be positive");
    if (n == 0) throw InvalidConfig("n must be at least 1");
    ISISample out;
    out.model_tag = "lif-" + hazard_tag(h);
    out.seed = cfg.seed;
    out.times.assign(n, 0.0);
    std::vector<char> censored(n, 0);
    parallel_for(n, workers, [&](std::size_t i) {
        Rng rng(replicate_seed(cfg.seed, i));
        const Firing f = std::holds_alternative<HardThreshold>(h)
                             ? run_hard(std::get<HardThreshold>(h).threshold, lambda, cfg, rng)
                             : run_thinning(h, lambda, cfg, rng);
        out.times[i] = f.time_ms;
        censored[i] = f.censored ? 1 : 0;
    });
    out.censored.assign(censored.begin(), censored.end());
    return out;
}

}  // namespace mlif
