#include "mlif/ml_model.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <vector>

#include "mlif/errors.hpp"

namespace mlif {

namespace {

struct FieldRef {
    const char* key;
    double MLParameters::*member;
};

constexpr std::array<FieldRef, 14> kFields{{
    {"V1", &MLParameters::v1},
    {"V2", &MLParameters::v2},
    {"V3", &MLParameters::v3},
    {"V4", &MLParameters::v4},
    {"gCa", &MLParameters::g_ca},
    {"gK", &MLParameters::g_k},
    {"gL", &MLParameters::g_l},
    {"VCa", &MLParameters::v_ca},
    {"VK", &MLParameters::v_k},
    {"VL", &MLParameters::v_l},
    {"C", &MLParameters::c},
    {"phi", &MLParameters::phi},
    {"I", &MLParameters::i_app},
    {"sigma_star", &MLParameters::sigma_star},
}};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
    double value = 0.0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end || !std::isfinite(value))
        throw ParseError("invalid number for '" + std::string(key) + "': '" + std::string(text) + "'");
    return value;
}

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Gating half-width argument shared by alpha and beta.
struct GateTerms {
    double half_cosh;  // (phi/2) cosh((v - V3) / (2 V4))
    double tanh_z;     // tanh((v - V3) / V4)
};

GateTerms gate_terms(double v, const MLParameters& p) {
    const double z = (v - p.v3) / p.v4;
    return {0.5 * p.phi * std::cosh(0.5 * z), std::tanh(z)};
}

double bisect(const MLParameters& p, double lo, double hi) {
    auto f = [&](double v) { return drift({v, w_inf(v, p)}, p).dv; };
    double flo = f(lo);
    for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = f(mid);
        if (fmid == 0.0) return mid;
        if ((fmid < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void MLParameters::validate() const {
    for (const auto& f : kFields)
        if (!std::isfinite(this->*f.member))
            throw InvalidParameters(std::string("parameter ") + f.key + " is not finite");
    if (c <= 0.0) throw InvalidParameters("C must be positive");
    if (phi <= 0.0) throw InvalidParameters("phi must be positive");
    if (v2 == 0.0 || v4 == 0.0) throw InvalidParameters("V2 and V4 must be nonzero");
    if (g_ca < 0.0 || g_k < 0.0 || g_l < 0.0) throw InvalidParameters("conductances must be nonnegative");
    if (sigma_star < 0.0 || sigma_star > 1.0) throw InvalidParameters("sigma_star must lie in [0, 1]");
}

double m_inf(double v, const MLParameters& p) {
    return 0.5 * (1.0 + std::tanh((v - p.v1) / p.v2));
}

double alpha_rate(double v, const MLParameters& p) {
    const auto g = gate_terms(v, p);
    return g.half_cosh * (1.0 + g.tanh_z);
}

double beta_rate(double v, const MLParameters& p) {
    const auto g = gate_terms(v, p);
    return g.half_cosh * (1.0 - g.tanh_z);
}

double w_inf(double v, const MLParameters& p) {
    return 0.5 * (1.0 + std::tanh((v - p.v3) / p.v4));
}

Drift drift(const State2& s, const MLParameters& p) {
    const auto g = gate_terms(s.v, p);
    const double a = g.half_cosh * (1.0 + g.tanh_z);
    const double b = g.half_cosh * (1.0 - g.tanh_z);
    const double i_ion = -p.g_ca * m_inf(s.v, p) * (s.v - p.v_ca) - p.g_k * s.w * (s.v - p.v_k) -
                         p.g_l * (s.v - p.v_l) + p.i_app;
    return {i_ion / p.c, a * (1.0 - s.w) - b * s.w};
}

double diffusion_w(const State2& s, const MLParameters& p) {
    if (p.sigma_star == 0.0) return 0.0;
    const auto g = gate_terms(s.v, p);
    const double a = g.half_cosh * (1.0 + g.tanh_z);
    const double b = g.half_cosh * (1.0 - g.tanh_z);
    const double var = 2.0 * a * b / (a + b) * s.w * (1.0 - s.w);
    return var > 0.0 ? p.sigma_star * std::sqrt(var) : 0.0;
}

Mat2 finite_difference_jacobian(const MLParameters& p, const State2& s, double h) {
    const double hv = h * std::max(1.0, std::abs(s.v));
    const double hw = h * std::max(1.0, std::abs(s.w));
    const Drift vp = drift({s.v + hv, s.w}, p), vm = drift({s.v - hv, s.w}, p);
    const Drift wp = drift({s.v, s.w + hw}, p), wm = drift({s.v, s.w - hw}, p);
    Mat2 j;
    j << (vp.dv - vm.dv) / (2 * hv), (wp.dv - wm.dv) / (2 * hw),
         (vp.dw - vm.dw) / (2 * hv), (wp.dw - wm.dw) / (2 * hw);
    return j;
}

State2 equilibrium(const MLParameters& p, double scan_step) {
    p.validate();
    if (!(scan_step > 0.0)) throw InvalidConfig("scan_step must be positive");
    auto f = [&](double v) { return drift({v, w_inf(v, p)}, p).dv; };

    const double lo = std::min(p.v_k, p.v_ca), hi = std::max(p.v_k, p.v_ca);
    std::vector<State2> roots;
    double v_prev = lo, f_prev = f(lo);
    while (v_prev < hi) {
        const double v_next = std::min(hi, v_prev + scan_step);
        const double f_next = f(v_next);
        if (f_prev == 0.0) {
            roots.push_back({v_prev, w_inf(v_prev, p)});
        } else if ((f_prev < 0.0) != (f_next < 0.0) && f_next != 0.0) {
            const double v = bisect(p, v_prev, v_next);
            roots.push_back({v, w_inf(v, p)});
        }
        v_prev = v_next;
        f_prev = f_next;
    }
    if (f_prev == 0.0) roots.push_back({hi, w_inf(hi, p)});

    if (roots.empty())
        throw NoRootInBracket("f(v, w_inf(v)) does not change sign on [VK, VCa]");
    if (roots.size() == 1) return roots.front();

    std::optional<State2> stable;
    for (const auto& r : roots) {
        const Mat2 j = finite_difference_jacobian(p, r);
        if (j.trace() < 0.0 && j.determinant() > 0.0) {
            if (stable) throw NoRootInBracket("more than one stable equilibrium on [VK, VCa]");
            stable = r;
        }
    }
    if (!stable) throw NoRootInBracket("no stable equilibrium on [VK, VCa]");
    return *stable;
}

double sigma_star_of_channels(double n_channels, double w_eq) {
    if (!(n_channels > 0.0) || !(w_eq > 0.0 && w_eq < 1.0))
        throw InvalidParameters("sigma_star_of_channels needs N > 0 and w_eq in (0, 1)");
    return 1.0 / std::sqrt(w_eq * (1.0 - w_eq) * n_channels);
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues kv;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty key or value");
        if (!kv.emplace(std::string(key), std::string(value)).second)
            throw ParseError("line " + std::to_string(line_no) + ": duplicate key '" + std::string(key) + "'");
    }
    return kv;
}

std::string format_key_values(const KeyValues& kv) {
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

bool is_ml_parameter_key(std::string_view key) {
    for (const auto& f : kFields)
        if (key == f.key) return true;
    return false;
}

MLParameters ml_parameters_from(const KeyValues& kv) {
    MLParameters p;
    for (const auto& [key, value] : kv) {
        bool found = false;
        for (const auto& f : kFields) {
            if (key == f.key) {
                p.*f.member = parse_double(key, value);
                found = true;
                break;
            }
        }
        if (!found) throw ParseError("unknown parameter key '" + key + "'");
    }
    p.validate();
    return p;
}

MLParameters parse_ml_parameters(std::string_view text) {
    return ml_parameters_from(parse_key_values(text));
}

KeyValues to_key_values(const MLParameters& p) {
    KeyValues kv;
    for (const auto& f : kFields) kv.emplace(f.key, format_double(p.*f.member));
    return kv;
}

std::string format_ml_parameters(const MLParameters& p) {
    // Table order rather than map order reads better in files.
    std::string out;
    for (const auto& f : kFields) out += std::string(f.key) + " = " + format_double(p.*f.member) + "\n";
    return out;
}

}  // namespace mlif
