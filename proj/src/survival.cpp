#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "mlif/errors.hpp"
#include "mlif/estimation.hpp"

namespace mlif {

double CumulativeHazardCurve::value_at(double t) const {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return 0.0;
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
}

CumulativeHazardCurve nelson_aalen(const ISISample& sample) {
    const std::size_t n = sample.size();
    if (sample.censored.size() != n) throw InvalidConfig("censoring flags must match the sample size");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sample.times[a] != sample.times[b]) return sample.times[a] < sample.times[b];
        return !sample.censored[a] && sample.censored[b];
    });

    CumulativeHazardCurve out;
    double total = 0.0;
    std::size_t at_risk = n, i = 0;
    while (i < n) {
        const double t = sample.times[order[i]];
        std::size_t events = 0, leaving = 0;
        while (i < n && sample.times[order[i]] == t) {
            if (!sample.censored[order[i]]) ++events;
            ++leaving;
            ++i;
        }
        if (events > 0) {
            total += static_cast<double>(events) / static_cast<double>(at_risk);
            out.times.push_back(t);
            out.values.push_back(total);
        }
        at_risk -= leaving;
    }
    return out;
}

namespace {

std::vector<double> targets_on(const CumulativeHazardCurve& curve, std::span<const double> grid) {
    std::vector<double> y(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) y[i] = curve.value_at(grid[i]);
    return y;
}

std::vector<double> log_grid(const CumulativeHazardCurve& curve, std::size_t points) {
    if (curve.times.size() < 2) throw DegenerateData("hazard fit needs at least two distinct event times");
    const double lo = curve.times.front(), hi = curve.times.back();
    if (!(lo > 0.0) || !(hi > lo)) throw DegenerateData("event times must be positive and distinct");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1));
    return g;
}

double sse(std::span<const double> model, std::span<const double> target) {
    double s = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        const double r = model[i] - target[i];
        s += r * r;
    }
    return s;
}

}  // namespace

double hazard_fit_objective(const CumulativeHazardCurve& curve, double lambda, double alpha, double beta,
                            std::span<const double> grid, HazardIntegrand integrand) {
    const auto model = cumulative_hazard_curve(alpha, beta, lambda, grid, integrand);
    return sse(model, targets_on(curve, grid));
}

HazardFit fit_exponential_hazard(const CumulativeHazardCurve& curve, double lambda, const HazardFitOptions& opts) {
    if (!(lambda > 0.0)) throw InvalidConfig("lambda must be positive");
    if (opts.grid_points < 2 || opts.coarse_betas < 3) throw InvalidConfig("grid sizes are too small");
    if (!(opts.beta_min > 0.0) || !(opts.beta_max > opts.beta_min)) throw InvalidConfig("invalid beta range");

    HazardFit fit;
    fit.grid = log_grid(curve, opts.grid_points);
    const auto target = targets_on(curve, fit.grid);

    // A = e^{-alpha/beta} F_beta(t) is linear in the prefactor, so alpha has a
    // closed form for each beta. F_beta is evaluated at alpha = beta.
    auto profile = [&](double beta) -> HazardFitPoint {
        auto shape = cumulative_hazard_curve(beta, beta, lambda, fit.grid, opts.integrand);
        double ff = 0.0, fy = 0.0;
        for (std::size_t i = 0; i < shape.size(); ++i) {
            shape[i] *= std::numbers::e;
            ff += shape[i] * shape[i];
            fy += shape[i] * target[i];
        }
        if (!(ff > 0.0) || !(fy > 0.0) || !std::isfinite(ff))
            return {std::numeric_limits<double>::quiet_NaN(), beta, std::numeric_limits<double>::infinity()};
        const double c = fy / ff;
        double obj = 0.0;
        for (std::size_t i = 0; i < shape.size(); ++i) obj += (c * shape[i] - target[i]) * (c * shape[i] - target[i]);
        return {-beta * std::log(c), beta, obj};
    };

    const double log_lo = std::log(opts.beta_min), log_hi = std::log(opts.beta_max);
    const double step = (log_hi - log_lo) / static_cast<double>(opts.coarse_betas - 1);
    std::size_t best = 0;
    for (std::size_t j = 0; j < opts.coarse_betas; ++j) {
        fit.coarse.push_back(profile(std::exp(log_lo + step * static_cast<double>(j))));
        if (fit.coarse[j].objective < fit.coarse[best].objective) best = j;
    }
    if (!std::isfinite(fit.coarse[best].objective))
        throw DegenerateData("no admissible starting point for the hazard fit");
    HazardFitPoint current = fit.coarse[best];

    // Refine beta on the profiled objective between the coarse neighbours.
    const double a = log_lo + step * static_cast<double>(best == 0 ? 0 : best - 1);
    const double b = log_lo + step * static_cast<double>(std::min(best + 1, opts.coarse_betas - 1));
    std::uintmax_t brent_iter = opts.max_iterations;
    const auto [log_beta, obj] = boost::math::tools::brent_find_minima(
        [&](double lb) { return profile(std::exp(lb)).objective; }, a, b, 40, brent_iter);
    if (obj < current.objective) current = profile(std::exp(log_beta));
    fit.iterations = static_cast<std::size_t>(brent_iter);
    fit.converged = brent_iter < opts.max_iterations && best > 0 && best + 1 < opts.coarse_betas;

    // Levenberg-Marquardt polish in (alpha, beta); only improvements are kept.
    if (current.alpha > 0.0) {
        auto residuals = [&](double al, double be) {
            auto m = cumulative_hazard_curve(al, be, lambda, fit.grid, opts.integrand);
            for (std::size_t i = 0; i < m.size(); ++i) m[i] -= target[i];
            return m;
        };
        double mu = 1e-3;
        for (std::size_t it = 0; it < opts.max_iterations; ++it) {
            const double al = current.alpha, be = current.beta;
            const auto r = residuals(al, be);
            const double ha = 1e-6 * std::max(1.0, std::abs(al)), hb = 1e-6 * be;
            const auto ra = residuals(al + ha, be), rb = residuals(al, be + hb);
            double h11 = 0, h12 = 0, h22 = 0, g1 = 0, g2 = 0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                const double ja = (ra[i] - r[i]) / ha, jb = (rb[i] - r[i]) / hb;
                h11 += ja * ja;
                h12 += ja * jb;
                h22 += jb * jb;
                g1 += ja * r[i];
                g2 += jb * r[i];
            }
            bool accepted = false;
            while (mu < 1e12) {
                const double d11 = h11 * (1.0 + mu), d22 = h22 * (1.0 + mu);
                const double det = d11 * d22 - h12 * h12;
                if (det > 0.0) {
                    const double na = al - (d22 * g1 - h12 * g2) / det;
                    const double nb = be - (d11 * g2 - h12 * g1) / det;
                    if (na > 0.0 && nb > 0.0) {
                        const double nobj = hazard_fit_objective(curve, lambda, na, nb, fit.grid, opts.integrand);
                        if (nobj < current.objective) {
                            const double rel = (current.objective - nobj) / current.objective;
                            current = {na, nb, nobj};
                            mu = std::max(mu / 3.0, 1e-12);
                            accepted = rel > 1e-12;
                            break;
                        }
                    }
                }
                mu *= 4.0;
            }
            if (!accepted) break;
        }
    }
    fit.alpha = current.alpha;
    fit.beta = current.beta;
    fit.objective = current.objective;
    return fit;
}

namespace {

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
};

Moments moments_of(std::span<const double> x) {
    Moments m;
    if (x.empty()) return m;
    m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    if (x.size() > 1) {
        double ss = 0.0;
        for (double v : x) ss += (v - m.mean) * (v - m.mean);
        m.variance = ss / static_cast<double>(x.size() - 1);
    }
    return m;
}

std::vector<double> sorted_uncensored(const ISISample& s) {
    auto x = s.uncensored_times();
    if (x.empty()) throw DegenerateData("sample has no uncensored firing times");
    std::sort(x.begin(), x.end());
    return x;
}

}  // namespace

IsiComparison compare_isi(const ISISample& a, const ISISample& b) {
    const auto x = sorted_uncensored(a);
    const auto y = sorted_uncensored(b);
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        const double t = std::min(x[i], y[j]);
        while (i < x.size() && x[i] == t) ++i;
        while (j < y.size() && y[j] == t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
    }
    const Moments ma = moments_of(x), mb = moments_of(y);
    return {d, ma.mean - mb.mean, mb.variance > 0.0 ? ma.variance / mb.variance : 0.0};
}

IsiComparison compare_isi(const ISISample& a, const IsiCurve& b) {
    const auto x = sorted_uncensored(a);
    if (b.t.size() < 2) throw DegenerateData("curve needs at least two grid points");
    const double nx = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = b.cdf(x[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / nx - f), std::abs(static_cast<double>(i) / nx - f)});
    }
    // Moments of min(T, t_end): E = int S, E[.^2] = 2 int t S.
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t k = 1; k < b.t.size(); ++k) {
        const double h = b.t[k] - b.t[k - 1];
        m1 += 0.5 * h * (b.survival[k] + b.survival[k - 1]);
        m2 += h * (b.t[k] * b.survival[k] + b.t[k - 1] * b.survival[k - 1]);
    }
    const double var_b = m2 - m1 * m1;
    const Moments ma = moments_of(x);
    return {d, ma.mean - m1, var_b > 0.0 ? ma.variance / var_b : 0.0};
}

double quantile(const ISISample& sample, double q) {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidConfig("quantile level must lie in [0, 1]");
    const auto x = sorted_uncensored(sample);
    const double h = q * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

}  // namespace mlif
