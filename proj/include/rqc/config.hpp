#pragma once

#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "format.hpp"
#include "kinematics.hpp"

namespace rqc {

inline constexpr double kPi = 3.14159265358979323846;

// All quantities in natural units (c = hbar = 1) with the target gap as the
// reference scale. Defaults: resonant fundamental mode (L = pi/Omega_B so
// omega_1 = Omega_B), target at the cavity center, coupling*|alpha| = 0.01,
// probe prepared with p = i/pi.

struct CavityConfig {
    double length = kPi;
    int modes = 24;
    static constexpr int coherent_mode = 1;
};

struct ProbeMotion {
    double acceleration = 1.0;
    double flight_time = 1.0;
};

struct ProbeConfig {
    double gap = 1.0;
    double coupling = 0.01;
    ProbeMotion motion;
    std::complex<double> prep_p{0.0, 1.0 / kPi};
    bool full_crossing = false;
};

struct TargetConfig {
    double gap = 1.0;
    double coupling = 0.01;
    double position = kPi / 2.0;
    double theta = kPi / 2.0;
    double phi = 0.0;
};

struct FieldState {
    std::complex<double> alpha{1.0, 0.0};
};

struct NumericsConfig {
    double quad_rel_tol = 1e-11;
    double quad_abs_tol = 1e-13;
    int panels_per_period = 8;
    double mode_tol = 1e-6;
    int max_modes = 192;
};

struct SimulationConfig {
    CavityConfig cavity;
    ProbeConfig probe;
    TargetConfig target;
    FieldState field;
    NumericsConfig numerics;
};

// --- key-value schema ------------------------------------------------------

inline std::vector<std::pair<std::string, std::string>> config_key_values(
    const SimulationConfig& c) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("cavity.length", format_double(c.cavity.length));
    kv.emplace_back("cavity.modes", format_int(c.cavity.modes));
    kv.emplace_back("probe.a", format_double(c.probe.motion.acceleration));
    kv.emplace_back("probe.T", format_double(c.probe.motion.flight_time));
    kv.emplace_back("probe.gap", format_double(c.probe.gap));
    kv.emplace_back("probe.coupling", format_double(c.probe.coupling));
    kv.emplace_back("probe.p_re", format_double(c.probe.prep_p.real()));
    kv.emplace_back("probe.p_im", format_double(c.probe.prep_p.imag()));
    kv.emplace_back("probe.full_crossing", c.probe.full_crossing ? "1" : "0");
    kv.emplace_back("target.x", format_double(c.target.position));
    kv.emplace_back("target.gap", format_double(c.target.gap));
    kv.emplace_back("target.coupling", format_double(c.target.coupling));
    kv.emplace_back("target.theta", format_double(c.target.theta));
    kv.emplace_back("target.phi", format_double(c.target.phi));
    kv.emplace_back("field.alpha_re", format_double(c.field.alpha.real()));
    kv.emplace_back("field.alpha_im", format_double(c.field.alpha.imag()));
    kv.emplace_back("numerics.quad_rel_tol", format_double(c.numerics.quad_rel_tol));
    kv.emplace_back("numerics.quad_abs_tol", format_double(c.numerics.quad_abs_tol));
    kv.emplace_back("numerics.panels_per_period", format_int(c.numerics.panels_per_period));
    kv.emplace_back("numerics.mode_tol", format_double(c.numerics.mode_tol));
    kv.emplace_back("numerics.max_modes", format_int(c.numerics.max_modes));
    return kv;
}

inline std::string serialize_config(const SimulationConfig& c) {
    std::string out;
    for (const auto& [k, v] : config_key_values(c)) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

namespace detail {

inline void set_config_key(SimulationConfig& c, const std::string& key,
                           const std::string& value) {
    auto need_double = [&](double& slot) {
        if (!parse_double(value, slot))
            throw ValidationError(key + ": cannot parse '" + value + "' as a number");
    };
    auto need_int = [&](int& slot) {
        long long v = 0;
        if (!parse_int(value, v))
            throw ValidationError(key + ": cannot parse '" + value + "' as an integer");
        slot = static_cast<int>(v);
    };

    double tmp = 0.0;
    if (key == "cavity.length") need_double(c.cavity.length);
    else if (key == "cavity.modes") need_int(c.cavity.modes);
    else if (key == "probe.a") need_double(c.probe.motion.acceleration);
    else if (key == "probe.T") need_double(c.probe.motion.flight_time);
    else if (key == "probe.gap") need_double(c.probe.gap);
    else if (key == "probe.coupling") need_double(c.probe.coupling);
    else if (key == "probe.p_re") { need_double(tmp); c.probe.prep_p.real(tmp); }
    else if (key == "probe.p_im") { need_double(tmp); c.probe.prep_p.imag(tmp); }
    else if (key == "probe.full_crossing") {
        if (value == "1" || value == "true") c.probe.full_crossing = true;
        else if (value == "0" || value == "false") c.probe.full_crossing = false;
        else throw ValidationError(key + ": expected 0/1, got '" + value + "'");
    }
    else if (key == "target.x") need_double(c.target.position);
    else if (key == "target.gap") need_double(c.target.gap);
    else if (key == "target.coupling") need_double(c.target.coupling);
    else if (key == "target.theta") need_double(c.target.theta);
    else if (key == "target.phi") need_double(c.target.phi);
    else if (key == "field.alpha_re") { need_double(tmp); c.field.alpha.real(tmp); }
    else if (key == "field.alpha_im") { need_double(tmp); c.field.alpha.imag(tmp); }
    else if (key == "numerics.quad_rel_tol") need_double(c.numerics.quad_rel_tol);
    else if (key == "numerics.quad_abs_tol") need_double(c.numerics.quad_abs_tol);
    else if (key == "numerics.panels_per_period") need_int(c.numerics.panels_per_period);
    else if (key == "numerics.mode_tol") need_double(c.numerics.mode_tol);
    else if (key == "numerics.max_modes") need_int(c.numerics.max_modes);
    else throw ValidationError("unknown config key '" + key + "'");
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

// Parses `key = value` lines; '#' starts a comment. Unknown keys are errors.
inline SimulationConfig parse_config(const std::string& text) {
    SimulationConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string body = detail::trim(line);
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos)
            throw ValidationError("config line " + format_int(lineno) +
                                  ": expected 'key = value'");
        std::string key = detail::trim(body.substr(0, eq));
        std::string value = detail::trim(body.substr(eq + 1));
        detail::set_config_key(c, key, value);
    }
    return c;
}

inline SimulationConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

// --- validation ------------------------------------------------------------

// Config plus derived tables. Immutable after construction; safe to share
// read-only across workers.
class ValidatedConfig {
public:
    static ValidatedConfig validate(const SimulationConfig& c) {
        if (!(c.cavity.length > 0.0))
            throw ValidationError("cavity.length: length must be positive");
        if (c.cavity.modes < 1)
            throw ValidationError("cavity.modes: need at least one mode");
        if (!(c.probe.gap > 0.0))
            throw ValidationError("probe.gap: gap must be positive");
        if (!(c.target.gap > 0.0))
            throw ValidationError("target.gap: gap must be positive");
        if (c.probe.coupling < 0.0)
            throw ValidationError("probe.coupling: coupling must be non-negative");
        if (c.target.coupling < 0.0)
            throw ValidationError("target.coupling: coupling must be non-negative");
        if (c.probe.motion.acceleration < 0.0)
            throw ValidationError("probe.a: acceleration must be non-negative");
        if (c.probe.motion.flight_time < 0.0)
            throw ValidationError("probe.T: flight time must be non-negative");
        if (!(c.target.position > 0.0) || !(c.target.position < c.cavity.length))
            throw ValidationError("target.x: target must sit strictly inside the cavity");
        if (!(c.numerics.quad_rel_tol > 0.0))
            throw ValidationError("numerics.quad_rel_tol: tolerance must be positive");
        if (!(c.numerics.quad_abs_tol > 0.0))
            throw ValidationError("numerics.quad_abs_tol: tolerance must be positive");
        if (!(c.numerics.mode_tol > 0.0))
            throw ValidationError("numerics.mode_tol: tolerance must be positive");
        if (c.numerics.panels_per_period < 4)
            throw ValidationError("numerics.panels_per_period: need at least 4");
        if (c.numerics.max_modes < c.cavity.modes)
            throw ValidationError("numerics.max_modes: smaller than cavity.modes");

        ValidatedConfig v;
        v.cfg_ = c;
        v.mode_freqs_.reserve(c.cavity.modes);
        for (int n = 1; n <= c.cavity.modes; ++n)
            v.mode_freqs_.push_back(n * kPi / c.cavity.length);
        double a = c.probe.motion.acceleration;
        v.exit_position_ = position(a, c.probe.motion.flight_time);
        if (a > 0.0) {
            double tau_exit = crossing_time(a, c.cavity.length);
            v.crossing_time_ = tau_exit;
            v.exit_cavity_time_ = coordinate_time(a, tau_exit);
        }

        if (c.probe.full_crossing && v.exit_position_ > c.cavity.length) {
            throw ValidationError(
                "probe.T: probe exits the cavity before T in full-crossing mode "
                "(exit time " +
                format_double(v.exit_cavity_time_.value_or(
                    std::numeric_limits<double>::infinity())) +
                ")");
        }
        v.hash_ = fnv1a64(serialize_config(c));
        return v;
    }

    const SimulationConfig& config() const { return cfg_; }
    const std::vector<double>& mode_freqs() const { return mode_freqs_; }
    // Valid for any j >= 1, including modes beyond the configured cutoff
    // (needed by the mode-doubling convergence check).
    double mode_freq(int j) const { return j * kPi / cfg_.cavity.length; }
    double exit_position() const { return exit_position_; }
    std::optional<double> full_crossing_time() const { return crossing_time_; }
    std::optional<double> exit_cavity_time() const { return exit_cavity_time_; }
    std::uint64_t hash() const { return hash_; }

private:
    ValidatedConfig() = default;
    SimulationConfig cfg_;
    std::vector<double> mode_freqs_;
    double exit_position_ = 0.0;
    std::optional<double> crossing_time_;
    std::optional<double> exit_cavity_time_;
    std::uint64_t hash_ = 0;
};

}  // namespace rqc
