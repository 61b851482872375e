#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>

#include "mlif/errors.hpp"
#include "mlif/estimation.hpp"

namespace mlif {

namespace {

// FFTW planning is not thread-safe.
std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};

}  // namespace

SpectralDensity periodogram(std::span<const double> x, double dt) {
    if (x.size() < 2) throw DegenerateData("periodogram needs at least two samples");
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    const std::size_t n = x.size();
    const std::size_t bins = n / 2 + 1;

    std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    std::unique_ptr<fftw_complex, FftwFree> out(
        static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in.get());
    fftw_execute(plan);

    SpectralDensity sd;
    sd.kind = SpectralDensity::Kind::empirical;
    sd.freqs.resize(bins);
    sd.power.resize(bins);
    const double scale = dt / (2.0 * std::numbers::pi * static_cast<double>(n));
    const double df = 2.0 * std::numbers::pi / (static_cast<double>(n) * dt);
    for (std::size_t k = 0; k < bins; ++k) {
        const double re = out.get()[k][0], im = out.get()[k][1];
        sd.freqs[k] = df * static_cast<double>(k);
        sd.power[k] = scale * (re * re + im * im);
    }
    {
        std::lock_guard lock(fftw_plan_mutex());
        fftw_destroy_plan(plan);
    }
    return sd;
}

SpectralDensity estimate_spectrum(std::span<const std::vector<double>> series, double dt,
                                  const SpectrumOptions& opts) {
    if (!(dt > 0.0)) throw InvalidConfig("dt must be positive");
    std::vector<const std::vector<double>*> usable;
    for (const auto& s : series)
        if (s.size() >= 2 && dt * static_cast<double>(s.size() - 1) >= opts.min_duration) usable.push_back(&s);
    if (usable.size() < opts.min_segments || usable.empty())
        throw InsufficientSegments("need " + std::to_string(opts.min_segments) + " segments of at least " +
                                   std::to_string(opts.min_duration) + " ms, got " + std::to_string(usable.size()));

    std::size_t common = usable.front()->size();
    for (const auto* s : usable) common = std::min(common, s->size());

    SpectralDensity avg;
    for (const auto* s : usable) {
        const auto one = periodogram(std::span<const double>(s->data(), common), dt);
        if (avg.freqs.empty()) {
            avg = one;
        } else {
            for (std::size_t k = 0; k < avg.power.size(); ++k) avg.power[k] += one.power[k];
        }
    }
    for (auto& v : avg.power) v /= static_cast<double>(usable.size());
    avg.kind = SpectralDensity::Kind::empirical;
    return avg;
}

SpectralDensity estimate_spectrum(std::span<const Path> segments, int coord, const SpectrumOptions& opts) {
    if (coord != 0 && coord != 1) throw InvalidConfig("coord must be 0 (v) or 1 (w)");
    if (segments.empty()) throw InsufficientSegments("no segments");
    const double dt = segments.front().dt;
    std::vector<std::vector<double>> series;
    series.reserve(segments.size());
    for (const auto& seg : segments) {
        if (std::abs(seg.dt - dt) > 1e-12 * dt) throw InvalidConfig("segments must share one sampling step");
        std::vector<double> x;
        x.reserve(seg.states.size());
        for (const auto& s : seg.states) x.push_back(coord == 0 ? s.v : s.w);
        series.push_back(std::move(x));
    }
    return estimate_spectrum(series, dt, opts);
}

void scale_to_theory(SpectralDensity& empirical, const LinearizedSystem& sys) {
    const auto theory = theoretical_spectrum(sys, empirical.freqs, SpectralDensity::Kind::xa);
    const double target = theory.peak_power();
    const double current = empirical.peak_power();
    if (!(current > 0.0)) throw DegenerateData("empirical spectrum is identically zero");
    for (auto& v : empirical.power) v *= target / current;
}

}  // namespace mlif
