#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "config.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "kinematics.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"

namespace rqc {

using quad::complexd;

// Stationary cavity mode profile sin(k_j x)/sqrt(omega_j L), omega_j = j pi/L.
inline double mode_fn(int j, double x, double L) {
    double k = j * kPi / L;
    return std::sin(k * x) / std::sqrt(k * L);
}

enum class Det : std::uint8_t { A, B };

inline char det_char(Det d) { return d == Det::A ? 'A' : 'B'; }

// Key for one first-order integral I_{s,j} or one time-ordered second-order
// integral J_{s1,s2,j}. A negated first label means the detector gap enters
// with a flipped sign; for I keys that is the same as flipping s1, so
// normalized I keys never carry the negation.
struct AmplitudeKey {
    char kind = 'I';  // 'I' or 'J'
    Det mu = Det::A;
    bool mu_neg = false;
    Det nu = Det::A;  // J only
    int s1 = +1;
    int s2 = +1;      // J only
    int mode = 1;

    friend bool operator<(const AmplitudeKey& a, const AmplitudeKey& b) {
        return std::tie(a.kind, a.mode, a.mu, a.mu_neg, a.nu, a.s1, a.s2) <
               std::tie(b.kind, b.mode, b.mu, b.mu_neg, b.nu, b.s1, b.s2);
    }
    friend bool operator==(const AmplitudeKey& a, const AmplitudeKey& b) {
        return std::tie(a.kind, a.mode, a.mu, a.mu_neg, a.nu, a.s1, a.s2) ==
               std::tie(b.kind, b.mode, b.mu, b.mu_neg, b.nu, b.s1, b.s2);
    }

    std::string str() const {
        auto sign = [](int s) { return s > 0 ? "+" : "-"; };
        std::string out(1, kind);
        out += '[';
        out += sign(s1);
        if (kind == 'J') {
            out += ',';
            out += sign(s2);
        }
        out += ',';
        out += format_int(mode);
        out += "]{";
        if (mu_neg) out += '-';
        out += det_char(mu);
        if (kind == 'J') {
            out += ',';
            out += det_char(nu);
        }
        out += '}';
        return out;
    }
};

inline AmplitudeKey make_I(Det d, int s, int j) {
    AmplitudeKey k;
    k.kind = 'I';
    k.mu = d;
    k.nu = d;
    k.s1 = s;
    k.s2 = 0;
    k.mode = j;
    return k;
}

inline AmplitudeKey make_J(Det mu, bool mu_neg, Det nu, int s1, int s2, int j) {
    AmplitudeKey k;
    k.kind = 'J';
    k.mu = mu;
    k.mu_neg = mu_neg;
    k.nu = nu;
    k.s1 = s1;
    k.s2 = s2;
    k.mode = j;
    return k;
}

inline AmplitudeKey normalized(AmplitudeKey k) {
    if (k.kind == 'I' && k.mu_neg) {
        k.mu_neg = false;
        k.s1 = -k.s1;
    }
    return k;
}

// --- detector worldline data -------------------------------------------

struct DetectorPath {
    double gap = 1.0;
    bool moving = false;
    double accel = 0.0;
    double fixed_x = 0.0;

    static DetectorPath probe(const SimulationConfig& c) {
        return {c.probe.gap, true, c.probe.motion.acceleration, 0.0};
    }
    static DetectorPath target(const SimulationConfig& c) {
        return {c.target.gap, false, 0.0, c.target.position};
    }

    // Redshift factor absorbed into the moving detector's switching function.
    double xi(double t) const { return moving ? redshift(accel, t) : 1.0; }
    double tau(double t) const { return moving ? proper_time(accel, t) : t; }
    double x(double t) const { return moving ? position(accel, t) : fixed_x; }
};

inline DetectorPath detector_path(const SimulationConfig& c, Det d) {
    return d == Det::A ? DetectorPath::probe(c) : DetectorPath::target(c);
}

// Frequency bound for integrands of one detector at mode j: the atomic phase
// plus the field phase plus the spatial modulation of the moving mode profile.
inline double phase_freq_bound(const DetectorPath& p, double omega_j) {
    return p.gap + (p.moving ? 2.0 : 1.0) * omega_j;
}

// --- closed forms for stationary detectors ---------------------------------
//
// E(w,T)   = int_0^T e^{iwt} dt
// P_m(u,T) = int_0^T t^m e^{iut} dt
// D(u,v,T) = int_0^T dt1 e^{iu t1} int_0^{t1} e^{iv t2} dt2
// Small phases switch to series to stay accurate through resonances.

namespace closed {

inline constexpr double kSmallPhase = 1e-3;

inline complexd phase_integral(double w, double T) {
    const complexd iw(0.0, w);
    if (std::abs(w * T) < kSmallPhase) {
        complexd acc(0.0, 0.0), term(T, 0.0);
        for (int k = 0; k < 8; ++k) {
            acc += term;
            term *= iw * T / static_cast<double>(k + 2);
        }
        return acc;
    }
    return (std::exp(iw * T) - 1.0) / iw;
}

inline complexd monomial_phase_integral(int m, double u, double T) {
    const complexd iu(0.0, u);
    if (std::abs(u * T) < kSmallPhase) {
        complexd acc(0.0, 0.0);
        complexd pw(1.0, 0.0);
        double kfact = 1.0;
        double Tm1 = std::pow(T, m + 1);
        for (int k = 0; k < 10; ++k) {
            if (k > 0) kfact *= k;
            acc += pw * Tm1 / (kfact * (k + m + 1));
            pw *= iu;
            Tm1 *= T;
        }
        return acc;
    }
    if (m == 0) return phase_integral(u, T);
    return (std::pow(T, m) * std::exp(iu * T) -
            static_cast<double>(m) * monomial_phase_integral(m - 1, u, T)) /
           iu;
}

inline complexd ordered_double_phase_integral(double u, double v, double T) {
    if (std::abs(v * T) < kSmallPhase) {
        const complexd iv(0.0, v);
        complexd acc(0.0, 0.0);
        complexd pw(1.0, 0.0);
        double fact = 1.0;  // (k+1)!
        for (int k = 0; k < 8; ++k) {
            fact *= (k + 1);
            acc += pw / fact * monomial_phase_integral(k + 1, u, T);
            pw *= iv;
        }
        return acc;
    }
    const complexd iv(0.0, v);
    return (phase_integral(u + v, T) - phase_integral(u, T)) / iv;
}

inline complexd stationary_I(double gap, double x, double L, int s, int j, double T) {
    double omega_j = j * kPi / L;
    return mode_fn(j, x, L) * phase_integral(s * gap + omega_j, T);
}

inline complexd stationary_J(double gap, double x, double L, bool mu_neg, int s1,
                             int s2, int j, double T) {
    double omega_j = j * kPi / L;
    double u = (mu_neg ? -gap : gap) + omega_j;
    double v = s1 * gap + s2 * omega_j;
    double m = mode_fn(j, x, L);
    return m * m * ordered_double_phase_integral(u, v, T);
}

}  // namespace closed

// --- quadrature evaluation --------------------------------------------------

inline quad::Options quad_options(const NumericsConfig& n) {
    quad::Options o;
    o.rel_tol = n.quad_rel_tol;
    o.abs_tol = n.quad_abs_tol;
    o.panels_per_period = n.panels_per_period;
    return o;
}

struct AmplitudeValue {
    complexd value{0.0, 0.0};
    double error_bound = 0.0;
    std::size_t evals = 0;
};

// I_{s,j}(T): windowed oscillatory integral along one detector worldline.
inline AmplitudeValue compute_I(const ValidatedConfig& vc, Det d, int s, int j,
                                double T) {
    const auto& c = vc.config();
    DetectorPath p = detector_path(c, d);
    double omega_j = vc.mode_freq(j);
    double L = c.cavity.length;
    auto f = [&](double t) -> complexd {
        double phase = s * p.gap * p.tau(t) + omega_j * t;
        return p.xi(t) * mode_fn(j, p.x(t), L) * std::polar(1.0, phase);
    };
    auto r = quad::integrate(f, 0.0, T, phase_freq_bound(p, omega_j),
                             quad_options(c.numerics));
    return {r.value, r.error_bound, r.evals};
}

// The inner time integral of a J key depends only on the t2 slot
// (nu, s1, s2, j), so one cumulative serves every outer variant. It is
// verified against an independent adaptive evaluation when built.
struct InnerIntegral {
    std::shared_ptr<const quad::Cumulative> cumulative;
    double freq_bound = 0.0;
    double delta = 0.0;  // disagreement with the adaptive check at T
    std::size_t evals = 0;
};

inline InnerIntegral build_inner(const ValidatedConfig& vc, Det nu, int s1, int s2,
                                 int j, double T) {
    const auto& c = vc.config();
    DetectorPath pn = detector_path(c, nu);
    double omega_j = vc.mode_freq(j);
    double L = c.cavity.length;
    quad::Options opt = quad_options(c.numerics);

    auto g = [&](double t2) -> complexd {
        double phase = s1 * pn.gap * pn.tau(t2) + s2 * omega_j * t2;
        return pn.xi(t2) * mode_fn(j, pn.x(t2), L) * std::polar(1.0, phase);
    };
    InnerIntegral out;
    out.freq_bound = phase_freq_bound(pn, omega_j);
    auto check = quad::integrate(g, 0.0, T, out.freq_bound, opt);
    out.evals = check.evals;

    int panels = quad::panel_count(0.0, T, out.freq_bound, opt.panels_per_period);
    for (int round = 0;; ++round) {
        auto cum = std::make_shared<quad::Cumulative>(g, 0.0, T, panels);
        out.evals += cum->evals();
        out.delta = std::abs(cum->total() - check.value);
        double budget = std::max(opt.abs_tol, opt.rel_tol * std::abs(check.value)) +
                        check.error_bound;
        if (out.delta <= 10.0 * budget) {
            out.cumulative = std::move(cum);
            return out;
        }
        if (round >= 5)
            throw ConvergenceError(
                "inner cumulative (t2 slot " + std::string(1, det_char(nu)) +
                    (s1 > 0 ? ",+" : ",-") + (s2 > 0 ? ",+" : ",-") + "," +
                    format_int(j) + ") did not converge (delta " +
                    format_double(out.delta) + ")",
                check.value, out.delta);
        panels *= 2;
    }
}

// J_{s1,s2,j}(T) over the ordered simplex 0 <= t2 <= t1 <= T; the outer pass
// runs adaptively against the (possibly shared) inner cumulative.
inline AmplitudeValue compute_J(const ValidatedConfig& vc, Det mu, bool mu_neg,
                                Det nu, int s1, int s2, int j, double T,
                                const InnerIntegral* shared_inner = nullptr) {
    const auto& c = vc.config();
    if (!(T > 0.0)) return {};
    DetectorPath pm = detector_path(c, mu);
    double omega_j = vc.mode_freq(j);
    double L = c.cavity.length;
    quad::Options opt = quad_options(c.numerics);

    InnerIntegral local;
    const InnerIntegral& inner =
        shared_inner ? *shared_inner : (local = build_inner(vc, nu, s1, s2, j, T));
    const quad::Cumulative& G = *inner.cumulative;

    double mu_gap = mu_neg ? -pm.gap : pm.gap;
    auto f = [&](double t1) -> complexd {
        double phase = mu_gap * pm.tau(t1) + omega_j * t1;
        return pm.xi(t1) * mode_fn(j, pm.x(t1), L) * std::polar(1.0, phase) * G(t1);
    };
    double outer_freq = phase_freq_bound(pm, omega_j) + inner.freq_bound;
    auto r = quad::integrate(f, 0.0, T, outer_freq, opt);
    std::size_t inner_evals = shared_inner ? 0 : inner.evals;
    return {r.value, r.error_bound + inner.delta * T, r.evals + inner_evals};
}

inline AmplitudeValue compute_amplitude(const ValidatedConfig& vc,
                                        const AmplitudeKey& key_in, double T) {
    AmplitudeKey k = normalized(key_in);
    if (k.kind == 'I') return compute_I(vc, k.mu, k.s1, k.mode, T);
    return compute_J(vc, k.mu, k.mu_neg, k.nu, k.s1, k.s2, k.mode, T);
}

// --- table -------------------------------------------------------------------

struct TableMeta {
    std::uint64_t config_hash = 0;
    double T = 0.0;
    double max_error_bound = 0.0;
    std::size_t evals = 0;
};

// Immutable after construction. Conjugates and negated-I aliases are resolved
// by value(); only canonical keys are stored.
class AmplitudeTable {
public:
    AmplitudeTable() = default;

    void insert(const AmplitudeKey& k, complexd v) { values_[normalized(k)] = v; }

    bool contains(const AmplitudeKey& k) const {
        return values_.count(normalized(k)) > 0;
    }

    complexd value(const AmplitudeKey& k, bool conjugated = false) const {
        auto it = values_.find(normalized(k));
        if (it == values_.end())
            throw ValidationError("amplitude table has no entry for " + k.str());
        return conjugated ? std::conj(it->second) : it->second;
    }

    std::size_t size() const { return values_.size(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    TableMeta& meta() { return meta_; }
    const TableMeta& meta() const { return meta_; }

    // Appends entries for additional modes; existing values are untouched.
    void merge(const AmplitudeTable& other) {
        for (const auto& [k, v] : other.values_) values_.emplace(k, v);
        meta_.max_error_bound = std::max(meta_.max_error_bound, other.meta_.max_error_bound);
        meta_.evals += other.meta_.evals;
    }

    void dump_csv(std::ostream& os) const {
        os << "key,kind,label1,label2,s1,s2,mode,re,im\n";
        for (const auto& [k, v] : values_) {
            os << k.str() << ',' << k.kind << ','
               << (k.mu_neg ? "-" : "") << det_char(k.mu) << ','
               << (k.kind == 'J' ? std::string(1, det_char(k.nu)) : std::string()) << ','
               << format_int(k.s1) << ','
               << (k.kind == 'J' ? format_int(k.s2) : std::string()) << ','
               << format_int(k.mode) << ',' << format_double(v.real()) << ','
               << format_double(v.imag()) << '\n';
        }
    }

private:
    std::map<AmplitudeKey, complexd> values_;
    TableMeta meta_;
};

// Keys referenced by the second-order term expansion for modes [lo, hi].
// Mode 1 (coherent) needs every field word; vacuum modes only survive the
// a a^dagger word, which pins s2 = -1. Same-detector pairs skip the sign
// combinations whose operator words vanish by nilpotency.
inline std::vector<AmplitudeKey> table_keys(int mode_lo, int mode_hi) {
    std::vector<AmplitudeKey> keys;
    for (int j = mode_lo; j <= mode_hi; ++j) {
        for (Det d : {Det::A, Det::B})
            for (int s : {+1, -1}) keys.push_back(make_I(d, s, j));
        for (Det mu : {Det::A, Det::B}) {
            for (Det nu : {Det::A, Det::B}) {
                for (bool neg : {false, true}) {
                    std::vector<int> s1list;
                    if (mu == nu)
                        s1list = {neg ? +1 : -1};
                    else
                        s1list = {+1, -1};
                    std::vector<int> s2list =
                        (j == 1) ? std::vector<int>{+1, -1} : std::vector<int>{-1};
                    for (int s1 : s1list)
                        for (int s2 : s2list)
                            keys.push_back(make_J(mu, neg, nu, s1, s2, j));
                }
            }
        }
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

inline AmplitudeTable build_table(const ValidatedConfig& vc, double T,
                                  std::span<const AmplitudeKey> keys,
                                  unsigned threads = 1) {
    // one inner cumulative per distinct t2 slot, shared by every J key on it
    using InnerKey = std::tuple<Det, int, int, int>;
    std::vector<InnerKey> inner_keys;
    if (T > 0.0) {
        for (const auto& k : keys)
            if (k.kind == 'J') inner_keys.emplace_back(k.nu, k.s1, k.s2, k.mode);
        std::sort(inner_keys.begin(), inner_keys.end());
        inner_keys.erase(std::unique(inner_keys.begin(), inner_keys.end()),
                         inner_keys.end());
    }
    std::vector<InnerIntegral> inners(inner_keys.size());
    parallel_for(inner_keys.size(), threads, [&](std::size_t i) {
        auto [nu, s1, s2, j] = inner_keys[i];
        inners[i] = build_inner(vc, nu, s1, s2, j, T);
    });
    auto inner_of = [&](const AmplitudeKey& k) -> const InnerIntegral* {
        auto it = std::lower_bound(inner_keys.begin(), inner_keys.end(),
                                   InnerKey{k.nu, k.s1, k.s2, k.mode});
        return &inners[static_cast<std::size_t>(it - inner_keys.begin())];
    };

    std::vector<AmplitudeValue> vals(keys.size());
    parallel_for(keys.size(), threads, [&](std::size_t i) {
        AmplitudeKey k = normalized(keys[i]);
        if (k.kind == 'I' || !(T > 0.0))
            vals[i] = compute_amplitude(vc, k, T);
        else
            vals[i] = compute_J(vc, k.mu, k.mu_neg, k.nu, k.s1, k.s2, k.mode, T,
                                inner_of(k));
    });

    AmplitudeTable table;
    table.meta().config_hash = vc.hash();
    table.meta().T = T;
    for (const auto& inner : inners) table.meta().evals += inner.evals;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        table.insert(keys[i], vals[i].value);
        table.meta().max_error_bound =
            std::max(table.meta().max_error_bound, vals[i].error_bound);
        table.meta().evals += vals[i].evals;
    }
    return table;
}

inline AmplitudeTable build_table(const ValidatedConfig& vc, double T,
                                  unsigned threads = 1) {
    auto keys = table_keys(1, vc.config().cavity.modes);
    return build_table(vc, T, keys, threads);
}

}  // namespace rqc
