#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mlif/errors.hpp"
#include "mlif/estimation.hpp"
#include "mlif/linearization.hpp"
#include "mlif/radial_lif.hpp"

using namespace mlif;

namespace {

constexpr double kLambda = 0.009404956194912495;

double density_mass(double s, double u) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double r) { return transition_density_r(r, s, u); }, 0.0,
                       std::numeric_limits<double>::infinity());
}

double density_moment(double s, double u) {
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double r) { return r * transition_density_r(r, s, u); }, 0.0,
                       std::numeric_limits<double>::infinity());
}

double density_cdf(double x, double s, double u) {
    boost::math::quadrature::tanh_sinh<double> q;
    return q.integrate([&](double r) { return transition_density_r(r, s, u); }, 0.0, x);
}

LogisticHazard constant_rate(double c) { return {-1e6, 1.0, c}; }

}  // namespace

TEST_CASE("hazard shapes") {
    const double base = 0.0803 / (2 * std::numbers::pi);
    const HazardModel logistic = LogisticHazard{1.39, 0.27, base};
    CHECK(hazard(logistic, 1.39) == doctest::Approx(base / 2));
    CHECK(hazard(logistic, 1e3) == doctest::Approx(base));
    for (double r = 0.0; r < 20.0; r += 0.1) REQUIRE(hazard(logistic, r) <= base);
    CHECK(hazard(ExponentialHazard{6.31, 0.76}, 6.31) == 1.0);
    CHECK(hazard(ExponentialHazard{6.31, 0.76}, 7.07) == doctest::Approx(std::exp(1.0)));
    CHECK_THROWS_AS(hazard(HardThreshold{2.0}, 1.0), HardThresholdHasNoRate);
    CHECK(hazard(LogisticHazard{1.0, 0.2, 0.0}, 10.0) == 0.0);
    CHECK_THROWS_AS(validate(HazardModel{ExponentialHazard{1.0, 0.0}}), InvalidParameters);
    CHECK_THROWS_AS(validate(HazardModel{HardThreshold{-1.0}}), InvalidParameters);
}

TEST_CASE("hazard configuration round trip") {
    const HazardModel h = ExponentialHazard{6.31, 0.76};
    const HazardModel back = hazard_model_from(to_key_values(h));
    REQUIRE(std::holds_alternative<ExponentialHazard>(back));
    CHECK(std::get<ExponentialHazard>(back).alpha == 6.31);
    CHECK(std::get<ExponentialHazard>(back).beta == 0.76);
    const HazardModel lg = hazard_model_from(to_key_values(HazardModel{LogisticHazard{1.39, 0.27, 0.0128}}));
    CHECK(std::get<LogisticHazard>(lg).base_rate == 0.0128);
    CHECK(hazard_tag(HardThreshold{2.97}) == "hard");
    CHECK_THROWS_AS(hazard_model_from(parse_key_values("hazard = hard\nbeta = 1\n")), ParseError);
    CHECK_THROWS_AS(hazard_model_from(parse_key_values("hazard = soft\n")), ParseError);
    CHECK_THROWS_AS(hazard_model_from(parse_key_values("alpha = 1\n")), ParseError);
}

TEST_CASE("transition sampler from the origin") {
    constexpr int n = 100000;
    for (double u : {0.1, 1.0}) {
        Rng rng(31);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = radial_transition_sample(0.0, u, rng);
            acc += r * r;
        }
        const double mean = -std::expm1(-2 * u);
        CHECK(std::abs(acc / n - mean) < 3.0 * mean / std::sqrt(double(n)));
    }
}

TEST_CASE("stationary Rayleigh law") {
    constexpr int n = 100000;
    Rng rng(8);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double r = radial_transition_sample(1.7, 30.0, rng);
        s1 += r;
        s2 += r * r;
    }
    CHECK(s1 / n == doctest::Approx(std::sqrt(std::numbers::pi) / 2).epsilon(0.01));
    CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.015));
    for (double r = 0.05; r < 4.0; r += 0.1)
        CHECK(std::abs(transition_density_r(r, 0.7, 20.0) - 2 * r * std::exp(-r * r)) < 1e-6);
}

TEST_CASE("transition density normalization and first moment") {
    for (double u : {0.1, 1.0, 5.0})
        for (double s : {0.0, 0.5, 2.0}) {
            CAPTURE(u);
            CAPTURE(s);
            CHECK(std::abs(density_mass(s, u) - 1.0) < 1e-8);
            constexpr int n = 200000;
            Rng rng(replicate_seed(40, static_cast<std::uint64_t>(100 * u + 10 * s)));
            double s1 = 0, s2 = 0;
            for (int i = 0; i < n; ++i) {
                const double r = radial_transition_sample(s, u, rng);
                s1 += r;
                s2 += r * r;
            }
            const double mean = s1 / n, sd = std::sqrt(s2 / n - mean * mean);
            CHECK(std::abs(mean - density_moment(s, u)) < 3.0 * sd / std::sqrt(double(n)));
        }
}

TEST_CASE("transition density in the large-argument regime") {
    // r s / sinh(u) far above 30 exercises the log-space Bessel term.
    const double s = 40.0, u = 0.01;
    boost::math::quadrature::tanh_sinh<double> q;
    const double mass = q.integrate([&](double r) { return transition_density_r(r, s, u); }, 35.0, 45.0);
    CHECK(std::abs(mass - 1.0) < 1e-8);
    CHECK(std::isfinite(transition_density_r(s, s, u)));
}

TEST_CASE("sampler agrees with the density CDF") {
    constexpr int n = 20000;
    const double s = 0.5, u = 1.0;
    Rng rng(77);
    std::vector<double> x(n);
    for (double& v : x) v = radial_transition_sample(s, u, rng);
    std::sort(x.begin(), x.end());
    double d = 0.0;
    for (int i = 0; i < n; i += 37) {
        const double f = density_cdf(x[i], s, u);
        d = std::max({d, std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)});
    }
    CHECK(d < 1.63 / std::sqrt(double(n)));
}

TEST_CASE("constant hazard gives the exponential law") {
    const HazardModel h = constant_rate(0.01);
    const std::size_t paths = 400;
    for (double t : {50.0, 200.0}) {
        CHECK(survival(h, kLambda, t, paths, 20, 1) == doctest::Approx(std::exp(-0.01 * t)).epsilon(1e-12));
        CHECK(isi_density(h, kLambda, t, paths, 20, 1) == doctest::Approx(0.01 * std::exp(-0.01 * t)).epsilon(1e-12));
    }
    CHECK(survival(h, kLambda, 0.0, paths, 20, 1) == 1.0);
    CHECK(isi_density(h, kLambda, 0.0, paths, 20, 1) == doctest::Approx(0.01));
}

TEST_CASE("logistic ISI curve self-consistency") {
    const HazardModel h = LogisticHazard{1.39, 0.27, 0.0803 / (2 * std::numbers::pi)};
    constexpr std::size_t paths = 2000;
    const IsiCurve c = isi_curve(h, kLambda, 3000.0, 600, paths, 5, 2);
    CHECK(c.survival[0] == 1.0);
    double integral = 0.0;
    for (std::size_t k = 1; k < c.t.size(); ++k) {
        REQUIRE(c.survival[k] <= c.survival[k - 1]);
        REQUIRE(c.density[k] >= 0.0);
        integral += 0.5 * (c.t[k] - c.t[k - 1]) * (c.density[k] + c.density[k - 1]);
    }
    CHECK(std::abs(integral + c.survival.back() - 1.0) < 3.0 / std::sqrt(double(paths)));
    // -dS/dt from the shared skeletons against the density.
    for (std::size_t k : {20u, 100u, 300u}) {
        const double deriv = -(c.survival[k + 1] - c.survival[k - 1]) / (c.t[k + 1] - c.t[k - 1]);
        CHECK(std::abs(deriv - c.density[k]) < 0.05 * c.density[k]);
    }
    const IsiCurve c1 = isi_curve(h, kLambda, 3000.0, 600, paths, 5, 1);
    CHECK(c1.density == c.density);
    CHECK(c.survival[150] == doctest::Approx(survival(h, kLambda, c.t[150], paths, 150, 5)).epsilon(1e-12));

    std::ostringstream os;
    write_density_csv(os, c);
    CHECK(os.str().rfind("t,density\n", 0) == 0);
    std::ostringstream ss;
    write_survival_csv(ss, c);
    CHECK(ss.str().rfind("t,survival\n", 0) == 0);
}

TEST_CASE("logistic jump-diffusion matches the ISI curve") {
    const HazardModel h = LogisticHazard{1.39, 0.27, 0.0803 / (2 * std::numbers::pi)};
    LifConfig cfg;
    cfg.seed = 9;
    cfg.t_max = 1.0e4;
    const ISISample sample = simulate_lif(h, kLambda, 1000, cfg, 2);
    CHECK(sample.model_tag == "lif-logistic");
    const IsiCurve c = isi_curve(h, kLambda, 1.0e4, 2000, 1000, 10, 2);
    // Two independent estimators of the same law.
    CHECK(compare_isi(sample, c).ks_distance < 0.05);
    const ISISample again = simulate_lif(h, kLambda, 1000, cfg, 1);
    CHECK(again.times == sample.times);
}

TEST_CASE("zero hazard never fires") {
    LifConfig cfg;
    cfg.t_max = 500.0;
    const ISISample s = simulate_lif(LogisticHazard{1.0, 0.3, 0.0}, kLambda, 20, cfg);
    CHECK(s.uncensored_count() == 0);
    for (double t : s.times) CHECK(t == 500.0);
}

TEST_CASE("exponential hazard thinning stays within its bound") {
    LifConfig cfg;
    cfg.t_max = 2.0e4;
    cfg.seed = 4;
    ISISample s;
    CHECK_NOTHROW(s = simulate_lif(ExponentialHazard{3.0, 0.5}, kLambda, 200, cfg));
    CHECK(s.uncensored_count() > 150);
    // A one-sigma margin is too tight and must be reported.
    cfg.bound_sigmas = 0.1;
    CHECK_THROWS_AS(simulate_lif(ExponentialHazard{3.0, 0.5}, kLambda, 200, cfg), ThinningBoundExceeded);
}

TEST_CASE("mean first passage") {
    CHECK(mean_first_passage(1e-4) == doctest::Approx(0.5e-8).epsilon(1e-6));
    CHECK(mean_first_passage(1.0) == doctest::Approx(0.659).epsilon(1e-3));
    double prev = 0.0;
    for (int i = 1; i <= 50; ++i) {
        const double v = mean_first_passage(0.1 * i);
        REQUIRE(v > prev);
        prev = v;
    }
    CHECK(threshold_for_mean(mean_first_passage(2.2)) == doctest::Approx(2.2).epsilon(1e-10));
    CHECK_THROWS_AS(threshold_for_mean(1e60), NoConvergence);
}

TEST_CASE("hard threshold first passage matches the closed form") {
    LifConfig cfg;
    cfg.t_max = 1.0e6;
    cfg.seed = 2;
    const ISISample s = simulate_lif(HardThreshold{1.0}, kLambda, 5000, cfg);
    REQUIRE(s.uncensored_count() == 5000);
    double m = s.mean_uncensored(), v = 0.0;
    for (double t : s.times) v += (t - m) * (t - m);
    const double se = std::sqrt(v / (s.size() - 1) / s.size());
    CHECK(std::abs(m - mean_first_passage(1.0) / kLambda) < 3.0 * se);
}

TEST_CASE("expected exponential of the radius") {
    // Monte Carlo oracle for E[exp(R_u / beta)] from R_0 = 0.
    const double beta = 0.8;
    for (double u : {0.2, 2.0}) {
        constexpr int n = 200000;
        Rng rng(55);
        double s = 0, ss = 0;
        for (int i = 0; i < n; ++i) {
            const double x = std::exp(radial_transition_sample(0.0, u, rng) / beta);
            s += x;
            ss += x * x;
        }
        const double mean = s / n, se = std::sqrt((ss / n - mean * mean) / n);
        CHECK(std::abs(expected_exp_radius(beta, u) - mean) < 3.0 * se);
    }
}

TEST_CASE("theoretical cumulative hazard") {
    const double a = 6.31, b = 0.76;
    const double t = 1e-3;
    CHECK(cumulative_hazard_theoretical(a, b, kLambda, t) ==
          doctest::Approx(std::sqrt(std::numbers::pi) * std::exp(-a / b) * t).epsilon(1e-3));
    CHECK(cumulative_hazard_theoretical(a, b, kLambda, t, HazardIntegrand::exact) ==
          doctest::Approx(std::exp(-a / b) * t).epsilon(1e-3));
    std::vector<double> times;
    for (int i = 1; i <= 40; ++i) times.push_back(25.0 * i);
    for (auto kind : {HazardIntegrand::published, HazardIntegrand::exact}) {
        const auto curve = cumulative_hazard_curve(a, b, kLambda, times, kind);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            REQUIRE(curve[i] > curve[i - 1]);
            // Positive, increasing integrand: increments grow.
            if (i >= 2) REQUIRE(curve[i] - curve[i - 1] >= curve[i - 1] - curve[i - 2]);
        }
        CHECK(curve[17] == doctest::Approx(cumulative_hazard_theoretical(a, b, kLambda, times[17], kind)).epsilon(1e-10));
    }
    // The published integrand sits above the exact expectation.
    CHECK(cumulative_hazard_theoretical(a, b, kLambda, 447.0) >
          cumulative_hazard_theoretical(a, b, kLambda, 447.0, HazardIntegrand::exact));
}
