#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mlif/errors.hpp"
#include "mlif/estimation.hpp"
#include "mlif/linearization.hpp"
#include "mlif/ml_model.hpp"
#include "mlif/ou_approx.hpp"
#include "mlif/parallel.hpp"
#include "mlif/radial_lif.hpp"
#include "mlif/sde.hpp"

#ifndef MLIF_VERSION
#define MLIF_VERSION "0.0.0"
#endif

namespace mlif::cli {
namespace {

using nlohmann::json;

struct Options {
    // Global flags.
    std::optional<double> sigma_star;
    std::optional<double> dt;
    std::optional<double> t_max;
    std::uint64_t seed = 1;
    std::optional<std::size_t> n;
    std::string out = ".";
    unsigned workers = 0;
    std::string model;
    std::string config_path;

    // Command-specific flags.
    std::optional<double> v0, w0;
    std::size_t stride = 1;
    int coord = 0;
    double min_duration = 450.0;
    std::size_t grid_points = 25;
    double divisions = 20.0;
    bool weighted = false;
    std::string isi_path;
    std::string integrand = "published";
    std::optional<double> alpha, beta, threshold;
    std::optional<double> target_mean;
    std::string time_unit = "ms";
    double s_max = 5.0;
    double s_step = 0.1;
    bool density = false;
    std::size_t paths = 1000;
    std::size_t grid_steps = 2000;
};

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t x) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

json to_json(const Mat2& m) { return json::array({{m(0, 0), m(0, 1)}, {m(1, 0), m(1, 1)}}); }

json to_json(const KeyValues& kv) {
    json j = json::object();
    for (const auto& [k, v] : kv) {
        try {
            j[k] = std::stod(v);
        } catch (const std::exception&) {
            j[k] = v;
        }
    }
    return j;
}

json frequency_json(double f) { return {{"rad_per_ms", f}, {"hz", f / (2.0 * std::numbers::pi) * 1000.0}}; }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidConfig("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collects the effective configuration and the files written by one run.
class Run {
public:
    Run(std::string command, const Options& opts, std::ostream& out)
        : command_(std::move(command)), opts_(opts), out_(out) {
        config["seed"] = opts.seed;
        load_config_file();
        params.validate();
    }

    MLParameters params;
    KeyValues hazard_keys;
    json config = json::object();

    void write(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(opts_.out);
        std::ofstream f(std::filesystem::path(opts_.out) / name, std::ios::binary);
        if (!f) throw InvalidConfig("cannot write '" + name + "' in '" + opts_.out + "'");
        f << content;
        outputs_.push_back(name);
    }

    template <class Writer>
    void write_with(const std::string& name, Writer&& w) {
        std::ostringstream ss;
        w(ss);
        write(name, ss.str());
    }

    void finish(const json& result, const std::string& result_name) {
        config["parameters"] = to_json(to_key_values(params));
        write(result_name, result.dump(2) + "\n");
        const std::string canonical = config.dump();
        json manifest = {{"command", command_},
                         {"version", MLIF_VERSION},
                         {"seed", opts_.seed},
                         {"config", config},
                         {"config_hash", hex64(fnv1a(canonical))},
                         {"outputs", outputs_}};
        std::filesystem::create_directories(opts_.out);
        std::ofstream f(std::filesystem::path(opts_.out) / "manifest.json", std::ios::binary);
        if (!f) throw InvalidConfig("cannot write manifest.json in '" + opts_.out + "'");
        f << manifest.dump(2) << "\n";
        out_ << result.dump(2) << "\n";
    }

private:
    void load_config_file() {
        KeyValues ml;
        if (!opts_.config_path.empty()) {
            for (auto& [k, v] : parse_key_values(read_file(opts_.config_path))) {
                if (is_ml_parameter_key(k))
                    ml.emplace(k, v);
                else if (is_hazard_key(k))
                    hazard_keys.emplace(k, v);
                else
                    throw ParseError("unknown configuration key '" + k + "'");
            }
        }
        params = ml_parameters_from(ml);
        if (opts_.sigma_star) params.sigma_star = *opts_.sigma_star;
    }

    std::string command_;
    const Options& opts_;
    std::ostream& out_;
    std::vector<std::string> outputs_;
};

// ---------------------------------------------------------------------------

void cmd_equilibrium(Run& run) {
    const State2 eq = equilibrium(run.params);
    const Drift d = drift(eq, run.params);
    run.finish({{"v_eq", eq.v}, {"w_eq", eq.w}, {"residual", {{"dv", d.dv}, {"dw", d.dw}}}}, "equilibrium.json");
}

void cmd_linearize(Run& run) {
    const LinearizedSystem sys = build_linearized(run.params);
    json r = {{"equilibrium", {{"v", sys.eq.v}, {"w", sys.eq.w}}},
              {"M", to_json(sys.m)},
              {"M_finite_difference", to_json(finite_difference_jacobian(run.params, sys.eq))},
              {"M_published_transcription", to_json(published_jacobian_transcription(run.params, sys.eq))},
              {"G", to_json(sys.g)},
              {"lambda", sys.lambda},
              {"omega", sys.omega},
              {"eigenvalues", {{"re", -sys.lambda}, {"im", sys.omega}}},
              {"period_ms", sys.period()},
              {"Q", to_json(sys.q)},
              {"Q_inv", to_json(sys.q_inv)},
              {"tau2", sys.tau2},
              {"sigma", sys.sigma},
              {"sigma_star", sys.sigma_star},
              {"noise_coefficient", noise_scale(run.params, sys.eq) /
                                        (run.params.sigma_star > 0.0 ? run.params.sigma_star : 1.0)},
              {"warnings", sys.warnings}};
    if (sys.sigma > 0.0) r["tau2_over_sigma2"] = sys.tau2 / (sys.sigma * sys.sigma);
    run.finish(r, "linearize.json");
}

void cmd_simulate(Run& run, const Options& o) {
    const std::string model = o.model.empty() ? "ml" : o.model;
    SimConfig cfg;
    cfg.dt = o.dt.value_or(0.01);
    cfg.t_max = o.t_max.value_or(1000.0);
    cfg.seed = o.seed;
    cfg.record_stride = o.stride;
    cfg.validate();
    run.config["model"] = model;
    run.config["dt"] = cfg.dt;
    run.config["t_max"] = cfg.t_max;
    run.config["stride"] = cfg.record_stride;
    json r = {{"model", model}};
    if (model == "ml") {
        State2 x0 = equilibrium(run.params);
        if (o.v0) x0.v = *o.v0;
        if (o.w0) x0.w = *o.w0;
        run.config["v0"] = x0.v;
        run.config["w0"] = x0.w;
        SimStats stats;
        const Path path = simulate_ml(run.params, x0, cfg, &stats);
        run.write_with("path.csv", [&](std::ostream& s) { write_path_csv(s, path); });
        const auto spike = detect_spike(path);
        r["samples"] = path.size();
        r["steps"] = stats.steps;
        r["boundary_events"] = stats.boundary_events;
        r["first_spike_ms"] = spike ? json(*spike) : json(nullptr);
    } else {
        const LinearizedSystem sys = build_linearized(run.params);
        VecPath path;
        if (model == "ou") {
            path = simulate_ou2d(cfg.dt, cfg.t_max, cfg.seed);
        } else {
            path = xa_path(sys, cfg.dt, cfg.t_max, cfg.seed,
                           model == "xa-sde" ? XaConstruction::sde : XaConstruction::rotation);
        }
        if (cfg.record_stride > 1) {
            VecPath thin{path.dt * static_cast<double>(cfg.record_stride), path.t0, {}};
            for (std::size_t i = 0; i < path.size(); i += cfg.record_stride) thin.states.push_back(path.states[i]);
            path = std::move(thin);
        }
        run.write_with("path.csv", [&](std::ostream& s) { write_path_csv(s, path); });
        r["samples"] = path.size();
    }
    run.finish(r, "simulate.json");
}

// First quiescent stretch of runs started at the equilibrium, taken in
// replicate order so the selection does not depend on scheduling.
std::vector<std::vector<double>> ml_segments(const MLParameters& p, const SimConfig& base, std::size_t wanted,
                                             double min_duration, int coord, unsigned workers,
                                             std::size_t& attempts) {
    const State2 eq = equilibrium(p);
    std::vector<std::vector<double>> out;
    const std::size_t batch = std::max<std::size_t>(wanted, 8);
    const std::size_t max_attempts = 50 * wanted;
    attempts = 0;
    while (out.size() < wanted && attempts < max_attempts) {
        std::vector<std::vector<double>> found(batch);
        parallel_for(batch, workers, [&](std::size_t k) {
            SimConfig cfg = base;
            cfg.seed = replicate_seed(base.seed, attempts + k);
            cfg.stop_at_spike = true;
            const Path path = simulate_ml(p, eq, cfg);
            const auto segs = extract_quiescent_segments(path, min_duration, eq);
            if (segs.empty() || segs.front().t0 != 0.0) return;
            std::vector<double> x;
            x.reserve(segs.front().size());
            for (const auto& s : segs.front().states) x.push_back(coord == 0 ? s.v : s.w);
            found[k] = std::move(x);
        });
        for (auto& x : found)
            if (!x.empty() && out.size() < wanted) out.push_back(std::move(x));
        attempts += batch;
    }
    return out;
}

void cmd_spectrum(Run& run, const Options& o) {
    const std::string model = o.model.empty() ? "ml" : o.model;
    const std::size_t wanted = o.n.value_or(20);
    const LinearizedSystem sys = build_linearized(run.params);
    SimConfig cfg;
    cfg.dt = o.dt.value_or(0.01);
    cfg.t_max = o.t_max.value_or(2000.0);
    cfg.seed = o.seed;
    cfg.record_stride = o.stride;
    cfg.validate();
    run.config["model"] = model;
    run.config["segments"] = wanted;
    run.config["dt"] = cfg.dt;
    run.config["t_max"] = cfg.t_max;
    run.config["stride"] = cfg.record_stride;
    run.config["coord"] = o.coord;
    run.config["min_duration"] = o.min_duration;

    const double sample_dt = cfg.dt * static_cast<double>(cfg.record_stride);
    std::vector<std::vector<double>> series;
    std::size_t attempts = wanted;
    if (model == "ml") {
        series = ml_segments(run.params, cfg, wanted, o.min_duration, o.coord, o.workers, attempts);
    } else {
        const auto construction = model == "xa-sde" ? XaConstruction::sde : XaConstruction::rotation;
        series.resize(wanted);
        parallel_for(wanted, o.workers, [&](std::size_t i) {
            const VecPath path = xa_path(sys, cfg.dt, cfg.t_max, replicate_seed(cfg.seed, i), construction);
            for (std::size_t k = 0; k < path.size(); k += cfg.record_stride)
                series[i].push_back(path.states[k](o.coord));
        });
    }
    SpectrumOptions sopts;
    sopts.min_segments = wanted;
    sopts.min_duration = o.min_duration;
    SpectralDensity emp = estimate_spectrum(series, sample_dt, sopts);
    scale_to_theory(emp, sys);
    const auto lin = theoretical_spectrum(sys, emp.freqs, SpectralDensity::Kind::linearized);
    const auto xa = theoretical_spectrum(sys, emp.freqs, SpectralDensity::Kind::xa);
    const std::vector<SpectralDensity> curves{emp, lin, xa};
    run.write_with("spectra.csv", [&](std::ostream& s) { write_spectra_csv(s, curves); });
    json r = {{"model", model},
              {"segments", series.size()},
              {"runs_attempted", attempts},
              {"segment_length_ms", sample_dt * static_cast<double>(emp.freqs.size() * 2 - 2)},
              {"bin_width", emp.freqs.size() > 1 ? emp.freqs[1] - emp.freqs[0] : 0.0},
              {"omega", frequency_json(sys.omega)},
              {"peak",
               {{"empirical", frequency_json(emp.peak_frequency())},
                {"linearized", frequency_json(lin.peak_frequency())},
                {"xa", frequency_json(xa.peak_frequency())}}}};
    run.finish(r, "spectrum.json");
}

void cmd_firing_prob(Run& run, const Options& o) {
    FiringProbabilityConfig cfg;
    cfg.n_trials = o.n.value_or(1000);
    cfg.grid_points = o.grid_points;
    cfg.divisions = o.divisions;
    cfg.seed = o.seed;
    cfg.weighted = o.weighted;
    cfg.trial.dt = o.dt.value_or(0.01);
    run.config["n_trials"] = cfg.n_trials;
    run.config["grid_points"] = cfg.grid_points;
    run.config["divisions"] = cfg.divisions;
    run.config["weighted"] = cfg.weighted;
    run.config["dt"] = cfg.trial.dt;
    const FiringProbabilityFit fit = estimate_firing_probability(run.params, cfg, o.workers);
    run.write_with("firing_grid.csv", [&](std::ostream& s) { write_firing_grid_csv(s, fit); });
    json grid = json::array();
    for (const auto& g : fit.grid)
        grid.push_back({{"l", g.l}, {"p_hat", g.p_hat}, {"n", g.n_trials}, {"wilson", {g.wilson_lo, g.wilson_hi}}});
    json r = {{"sigma_star", fit.sigma_star},
              {"alpha_hat", fit.alpha_hat},
              {"beta_hat", fit.beta_hat},
              {"alpha_star", fit.alpha_star},
              {"beta_star", fit.beta_star},
              {"sse", fit.fit.sse},
              {"gradient_norm", fit.fit.gradient_norm},
              {"unstable_cycle_l", fit.cycles.unstable_l},
              {"stable_cycle_l", fit.cycles.stable_l},
              {"grid", grid}};
    run.finish(r, "firing_fit.json");
}

HazardIntegrand parse_integrand(const std::string& s) {
    return s == "exact" ? HazardIntegrand::exact : HazardIntegrand::published;
}

ISISample ml_isi(Run& run, const Options& o, std::size_t n) {
    SimConfig cfg;
    cfg.dt = o.dt.value_or(0.01);
    cfg.t_max = o.t_max.value_or(2.0e4);
    cfg.seed = o.seed;
    cfg.validate();
    run.config["dt"] = cfg.dt;
    run.config["t_max"] = cfg.t_max;
    run.config["n"] = n;
    return simulate_isi_ml(run.params, n, cfg, o.workers);
}

void cmd_fit_hazard(Run& run, const Options& o) {
    const double lambda = build_linearized(run.params).lambda;
    ISISample sample;
    if (!o.isi_path.empty()) {
        std::istringstream in(read_file(o.isi_path));
        sample = read_isi_csv(in);
        run.config["isi_file"] = o.isi_path;
        run.config["isi_hash"] = hex64(fnv1a(in.str()));
    } else {
        sample = ml_isi(run, o, o.n.value_or(1000));
        run.write_with("isi.csv", [&](std::ostream& s) { write_isi_csv(s, sample); });
    }
    HazardFitOptions fopts;
    fopts.integrand = parse_integrand(o.integrand);
    run.config["integrand"] = o.integrand;
    const CumulativeHazardCurve na = nelson_aalen(sample);
    const HazardFit fit = fit_exponential_hazard(na, lambda, fopts);
    run.write_with("nelson_aalen.csv", [&](std::ostream& s) {
        s << "t,cumulative_hazard\n";
        char buf[64];
        for (std::size_t i = 0; i < na.times.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g\n", na.times[i], na.values[i]);
            s << buf;
        }
    });
    run.write_with("hazard_fit_curve.csv", [&](std::ostream& s) {
        const auto model = cumulative_hazard_curve(fit.alpha, fit.beta, lambda, fit.grid, fopts.integrand);
        s << "t,estimate,fitted\n";
        char buf[96];
        for (std::size_t i = 0; i < fit.grid.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", fit.grid[i], na.value_at(fit.grid[i]), model[i]);
            s << buf;
        }
    });
    json r = {{"alpha", fit.alpha},
              {"beta", fit.beta},
              {"objective", fit.objective},
              {"converged", fit.converged},
              {"iterations", fit.iterations},
              {"integrand", o.integrand},
              {"lambda", lambda},
              {"n", sample.size()},
              {"uncensored", sample.uncensored_count()},
              {"mean_ms", sample.mean_uncensored()}};
    run.finish(r, "hazard_fit.json");
}

HazardModel lif_hazard(Run& run, const Options& o, const std::string& model, const LinearizedSystem& sys) {
    const std::string kind = model.substr(4);  // after "lif-"
    KeyValues kv = run.hazard_keys;
    const std::string want = kind == "exp" ? "exponential" : kind;
    if (auto it = kv.find("hazard"); it != kv.end() && it->second != want)
        throw InvalidConfig("config hazard '" + it->second + "' does not match --model " + model);
    kv["hazard"] = want;
    auto set_default = [&](const char* key, double v) {
        if (!kv.contains(key)) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            kv[key] = buf;
        }
    };
    auto set_flag = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", *v);
            kv[key] = buf;
        }
    };
    if (want == "logistic") {
        set_flag("alpha_star", o.alpha);
        set_flag("beta_star", o.beta);
        set_default("alpha_star", 1.3922);
        set_default("beta_star", 0.2718);
        set_default("base_rate", sys.omega / (2.0 * std::numbers::pi));
    } else if (want == "exponential") {
        set_flag("alpha", o.alpha);
        set_flag("beta", o.beta);
        set_default("alpha", 6.31);
        set_default("beta", 0.76);
    } else {
        set_flag("threshold", o.threshold);
        const double target = o.target_mean.value_or(447.0);
        if (!kv.contains("threshold")) {
            run.config["target_mean_ms"] = target;
            set_default("threshold", threshold_for_mean(target * sys.lambda));
        }
    }
    return hazard_model_from(kv);
}

void cmd_isi(Run& run, const Options& o) {
    const std::string model = o.model.empty() ? "ml" : o.model;
    const std::size_t n = o.n.value_or(1000);
    run.config["model"] = model;
    ISISample sample;
    json r = {{"model", model}};
    if (model == "ml") {
        sample = ml_isi(run, o, n);
    } else {
        const LinearizedSystem sys = build_linearized(run.params);
        const HazardModel h = lif_hazard(run, o, model, sys);
        LifConfig cfg;
        cfg.dt = o.dt.value_or(0.1);
        cfg.t_max = o.t_max.value_or(2.0e4);
        cfg.seed = o.seed;
        run.config["dt"] = cfg.dt;
        run.config["t_max"] = cfg.t_max;
        run.config["n"] = n;
        run.config["hazard"] = to_json(to_key_values(h));
        run.config["lambda"] = sys.lambda;
        r["hazard"] = run.config["hazard"];
        sample = simulate_lif(h, sys.lambda, n, cfg, o.workers);
        if (o.density && !std::holds_alternative<HardThreshold>(h)) {
            run.config["density_paths"] = o.paths;
            run.config["density_steps"] = o.grid_steps;
            const IsiCurve curve = isi_curve(h, sys.lambda, cfg.t_max, o.grid_steps, o.paths,
                                             stream_seed(o.seed, 1), o.workers);
            run.write_with("isi_density.csv", [&](std::ostream& s) { write_density_csv(s, curve); });
            run.write_with("isi_survival.csv", [&](std::ostream& s) { write_survival_csv(s, curve); });
            r["density_truncated_mean_ms"] = curve.truncated_mean();
        }
    }
    run.write_with("isi.csv", [&](std::ostream& s) { write_isi_csv(s, sample); });
    r["n"] = sample.size();
    r["uncensored"] = sample.uncensored_count();
    if (sample.uncensored_count() > 0) {
        const auto x = sample.uncensored_times();
        double m = sample.mean_uncensored(), v = 0.0;
        for (double t : x) v += (t - m) * (t - m);
        r["mean_ms"] = m;
        r["sd_ms"] = x.size() > 1 ? std::sqrt(v / static_cast<double>(x.size() - 1)) : 0.0;
        r["quantiles_ms"] = {{"q05", quantile(sample, 0.05)},
                             {"q50", quantile(sample, 0.5)},
                             {"q95", quantile(sample, 0.95)}};
    }
    run.finish(r, "isi_summary.json");
}

void cmd_mean_passage(Run& run, const Options& o) {
    const double lambda = build_linearized(run.params).lambda;
    if (!(o.s_step > 0.0) || !(o.s_max > 0.0)) throw InvalidConfig("S grid needs positive --s-max and --s-step");
    run.config["s_max"] = o.s_max;
    run.config["s_step"] = o.s_step;
    run.config["time_unit"] = o.time_unit;
    const auto rows = static_cast<std::size_t>(std::floor(o.s_max / o.s_step + 1e-9));
    run.write_with("mean_passage.csv", [&](std::ostream& s) {
        s << "S,mean_ou,mean_ms\n";
        char buf[96];
        for (std::size_t i = 1; i <= rows; ++i) {
            const double S = o.s_step * static_cast<double>(i);
            const double e = mean_first_passage(S);
            std::snprintf(buf, sizeof buf, "%.6g,%.12g,%.12g\n", S, e, e / lambda);
            s << buf;
        }
    });
    json r = {{"lambda", lambda}, {"rows", rows}};
    if (o.target_mean) {
        run.config["target_mean"] = *o.target_mean;
        const double target_ou = o.time_unit == "ou" ? *o.target_mean : *o.target_mean * lambda;
        const double S = threshold_for_mean(target_ou);
        r["target_mean"] = *o.target_mean;
        r["time_unit"] = o.time_unit;
        r["threshold"] = S;
        r["mean_ou"] = mean_first_passage(S);
        r["mean_ms"] = mean_first_passage(S) / lambda;
    }
    run.finish(r, "mean_passage.json");
}

void add_global(CLI::App* s, Options& o) {
    s->add_option("--sigma-star", o.sigma_star, "Noise amplitude sigma* in [0, 1]");
    s->add_option("--dt", o.dt, "Time step (ms)")->check(CLI::PositiveNumber);
    s->add_option("--t-max", o.t_max, "Simulation horizon (ms)")->check(CLI::PositiveNumber);
    s->add_option("--seed", o.seed, "Base seed");
    s->add_option("--n", o.n, "Sample, segment or trial count")->check(CLI::PositiveNumber);
    s->add_option("--out", o.out, "Output directory");
    s->add_option("--workers", o.workers, "Worker threads (0 = all cores)");
    s->add_option("--config", o.config_path, "Key-value parameter file")->check(CLI::ExistingFile);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic Morris-Lecar and radial OU integrate-and-fire experiments", "mlif-cli"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", MLIF_VERSION);
    Options o;

    auto* eq = app.add_subcommand("equilibrium", "Stable equilibrium of the deterministic model");
    add_global(eq, o);

    auto* lin = app.add_subcommand("linearize", "Linearization, eigenstructure, Q and tau^2 as JSON");
    add_global(lin, o);

    auto* sim = app.add_subcommand("simulate", "Sample path as CSV t,v,w");
    add_global(sim, o);
    sim->add_option("--model", o.model, "ml | xa | xa-sde | ou")->check(CLI::IsMember({"ml", "xa", "xa-sde", "ou"}));
    sim->add_option("--v0", o.v0, "Initial v (mV), ml only");
    sim->add_option("--w0", o.w0, "Initial w, ml only");
    sim->add_option("--stride", o.stride, "Record every k-th step")->check(CLI::PositiveNumber);

    auto* spec = app.add_subcommand("spectrum", "Empirical and closed-form spectral densities");
    add_global(spec, o);
    spec->add_option("--model", o.model, "ml | xa | xa-sde")->check(CLI::IsMember({"ml", "xa", "xa-sde"}));
    spec->add_option("--stride", o.stride, "Sampling stride in steps")->check(CLI::PositiveNumber);
    spec->add_option("--coord", o.coord, "0 = v, 1 = w")->check(CLI::Range(0, 1));
    spec->add_option("--min-duration", o.min_duration, "Minimum segment length (ms)")->check(CLI::PositiveNumber);

    auto* fp = app.add_subcommand("firing-prob", "Conditional firing probability along the section line");
    add_global(fp, o);
    fp->add_option("--grid-points", o.grid_points, "Number of grid points")->check(CLI::Range(3, 1000));
    fp->add_option("--divisions", o.divisions, "Stable-cycle distance / grid step")->check(CLI::PositiveNumber);
    fp->add_flag("--weighted", o.weighted, "Weight the sigmoid fit by inverse Wilson variance");

    auto* fh = app.add_subcommand("fit-hazard", "Nelson-Aalen estimate and exponential hazard fit");
    add_global(fh, o);
    fh->add_option("--isi", o.isi_path, "ISI CSV to fit instead of simulating")->check(CLI::ExistingFile);
    fh->add_option("--integrand", o.integrand, "published | exact")->check(CLI::IsMember({"published", "exact"}));

    auto* isi = app.add_subcommand("isi", "Firing-time sample of the ML or LIF model");
    add_global(isi, o);
    isi->add_option("--model", o.model, "ml | lif-logistic | lif-exp | lif-hard")
        ->check(CLI::IsMember({"ml", "lif-logistic", "lif-exp", "lif-hard"}));
    isi->add_option("--alpha", o.alpha, "alpha (exp) or alpha* (logistic)");
    isi->add_option("--beta", o.beta, "beta (exp) or beta* (logistic)");
    isi->add_option("--threshold", o.threshold, "Hard threshold S")->check(CLI::PositiveNumber);
    isi->add_option("--target-mean", o.target_mean, "Mean ISI (ms) that sets S when --threshold is absent")
        ->check(CLI::PositiveNumber);
    isi->add_flag("--density", o.density, "Also write the Monte Carlo ISI density and survival");
    isi->add_option("--paths", o.paths, "Skeletons for --density")->check(CLI::PositiveNumber);
    isi->add_option("--grid-steps", o.grid_steps, "Grid intervals for --density")->check(CLI::Range(2, 10000000));

    auto* mp = app.add_subcommand("mean-passage", "Mean first-passage table and threshold solve");
    add_global(mp, o);
    mp->add_option("--target-mean", o.target_mean, "Target mean first-passage time")->check(CLI::PositiveNumber);
    mp->add_option("--time-unit", o.time_unit, "Unit of --target-mean: ms | ou")
        ->check(CLI::IsMember({"ms", "ou"}));
    mp->add_option("--s-max", o.s_max, "Largest S in the table");
    mp->add_option("--s-step", o.s_step, "S grid step");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsageError;
    }

    try {
        CLI::App* sub = app.get_subcommands().front();
        Run r(sub->get_name(), o, out);
        if (sub == eq) cmd_equilibrium(r);
        else if (sub == lin) cmd_linearize(r);
        else if (sub == sim) cmd_simulate(r, o);
        else if (sub == spec) cmd_spectrum(r, o);
        else if (sub == fp) cmd_firing_prob(r, o);
        else if (sub == fh) cmd_fit_hazard(r, o);
        else if (sub == isi) cmd_isi(r, o);
        else cmd_mean_passage(r, o);
    } catch (const Error& e) {
        err << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        err << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
        return kDomainError;
    }
    return kOk;
}

}  // namespace mlif::cli
