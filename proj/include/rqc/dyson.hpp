#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "amplitudes.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "format.hpp"
#include "qubit.hpp"

namespace rqc {

// Second-order Dyson expansion of the two-detector evolution, expanded
// algorithmically into operator terms rather than transcribed. Each term is
// (scalar coefficient) x (probe word) x (target word) x (single-mode field
// word), placed to the left of rho_0, to the right, or sandwiching it.

enum class LadderOp : std::int8_t { Minus = -1, Plus = +1 };
enum class FieldOp : std::int8_t { Annihilate = -1, Create = +1 };

enum class TermFamily : std::uint8_t {
    FirstOrder,   // U1 rho0
    SecondLeft,   // U2 rho0
    SecondRight,  // rho0 U2^dag
    Cross,        // U1 rho0 U1^dag
};

inline const char* family_tag(TermFamily f) {
    switch (f) {
        case TermFamily::FirstOrder: return "U1";
        case TermFamily::SecondLeft: return "U2L";
        case TermFamily::SecondRight: return "U2R";
        case TermFamily::Cross: return "U1xU1";
    }
    return "?";
}

struct AmpRef {
    AmplitudeKey key;
    bool conjugated = false;

    std::string str() const { return key.str() + (conjugated ? "*" : ""); }
};

struct OperatorTerm {
    TermFamily family = TermFamily::SecondLeft;
    int mode = 1;
    complexd prefactor{1.0, 0.0};
    std::vector<AmpRef> amps;
    int lambda_a = 0;
    int lambda_b = 0;
    std::vector<LadderOp> probe_left, probe_right;
    std::vector<LadderOp> target_left, target_right;
    std::vector<FieldOp> field_left, field_right;

    std::string sort_key() const {
        auto word = [](const std::vector<LadderOp>& w) {
            std::string s;
            for (auto o : w) s += (o == LadderOp::Plus ? '+' : '-');
            return s.empty() ? std::string("1") : s;
        };
        auto fword = [](const std::vector<FieldOp>& w) {
            std::string s;
            for (auto o : w) s += (o == FieldOp::Create ? 'c' : 'a');
            return s.empty() ? std::string("1") : s;
        };
        std::string s = family_tag(family);
        s += "|j=" + format_int(mode);
        s += "|A:" + word(probe_left) + "." + word(probe_right);
        s += "|B:" + word(target_left) + "." + word(target_right);
        s += "|f:" + fword(field_left) + "." + fword(field_right);
        s += "|amps:";
        for (const auto& a : amps) s += a.str() + ";";
        return s;
    }
};

namespace detail {

inline AmpRef first_order_coeff(Det d, int eps, int f, int j) {
    // H_I expands as sum_{eps,f} coeff * sigma^eps a^(f); with a^(+) = a-dagger
    // the coefficient is I_{eps,j} and with a^(-) it is conj(I_{-eps,j}).
    if (f > 0) return {make_I(d, eps, j), false};
    return {make_I(d, -eps, j), true};
}

inline AmpRef second_order_coeff(Det mu, int eps1, Det nu, int eps2, int f1, int f2,
                                 int j) {
    // Time slot t1 carries (eps1 Omega_mu, f1 omega_j), slot t2 carries
    // (eps2 Omega_nu, f2 omega_j). J keys fix the t1 field sign to +, so the
    // f1 = -1 half is reached through conjugation with all signs mirrored.
    if (f1 > 0) return {make_J(mu, eps1 < 0, nu, eps2, f2, j), false};
    return {make_J(mu, eps1 > 0, nu, -eps2, -f2, j), true};
}

inline void push_ladder(OperatorTerm& t, Det d, LadderOp op, bool left) {
    auto& word = (d == Det::A) ? (left ? t.probe_left : t.probe_right)
                               : (left ? t.target_left : t.target_right);
    word.push_back(op);
}

inline OperatorTerm daggered(const OperatorTerm& t) {
    OperatorTerm out;
    out.family = TermFamily::SecondRight;
    out.mode = t.mode;
    out.prefactor = std::conj(t.prefactor);
    out.amps = t.amps;
    for (auto& a : out.amps) a.conjugated = !a.conjugated;
    out.lambda_a = t.lambda_a;
    out.lambda_b = t.lambda_b;
    auto flip_word = [](const std::vector<LadderOp>& w) {
        std::vector<LadderOp> r(w.rbegin(), w.rend());
        for (auto& o : r) o = (o == LadderOp::Plus ? LadderOp::Minus : LadderOp::Plus);
        return r;
    };
    auto flip_field = [](const std::vector<FieldOp>& w) {
        std::vector<FieldOp> r(w.rbegin(), w.rend());
        for (auto& o : r)
            o = (o == FieldOp::Create ? FieldOp::Annihilate : FieldOp::Create);
        return r;
    };
    out.probe_right = flip_word(t.probe_left);
    out.target_right = flip_word(t.target_left);
    out.field_right = flip_field(t.field_left);
    return out;
}

}  // namespace detail

// Term list for one order of the expansion over a mode range. Words that
// vanish identically through (sigma^pm)^2 = 0 are dropped at generation time.
inline std::vector<OperatorTerm> expand_terms_range(int order, int mode_lo,
                                                    int mode_hi) {
    std::vector<OperatorTerm> terms;
    const complexd minus_i(0.0, -1.0);

    for (int j = mode_lo; j <= mode_hi; ++j) {
        if (order == 1) {
            for (Det d : {Det::A, Det::B})
                for (int eps : {+1, -1})
                    for (int f : {+1, -1}) {
                        OperatorTerm t;
                        t.family = TermFamily::FirstOrder;
                        t.mode = j;
                        t.prefactor = minus_i;
                        t.amps = {detail::first_order_coeff(d, eps, f, j)};
                        (d == Det::A ? t.lambda_a : t.lambda_b) = 1;
                        detail::push_ladder(
                            t, d, eps > 0 ? LadderOp::Plus : LadderOp::Minus, true);
                        t.field_left = {f > 0 ? FieldOp::Create : FieldOp::Annihilate};
                        terms.push_back(std::move(t));
                    }
            continue;
        }

        // U2 rho0 and its Hermitian conjugate family
        for (Det mu : {Det::A, Det::B})
            for (Det nu : {Det::A, Det::B})
                for (int e1 : {+1, -1})
                    for (int e2 : {+1, -1}) {
                        if (mu == nu && e1 == e2) continue;  // (sigma^pm)^2
                        for (int f1 : {+1, -1})
                            for (int f2 : {+1, -1}) {
                                OperatorTerm t;
                                t.family = TermFamily::SecondLeft;
                                t.mode = j;
                                t.prefactor = complexd(-1.0, 0.0);
                                t.amps = {detail::second_order_coeff(mu, e1, nu, e2,
                                                                     f1, f2, j)};
                                t.lambda_a = (mu == Det::A) + (nu == Det::A);
                                t.lambda_b = (mu == Det::B) + (nu == Det::B);
                                detail::push_ladder(
                                    t, mu, e1 > 0 ? LadderOp::Plus : LadderOp::Minus,
                                    true);
                                detail::push_ladder(
                                    t, nu, e2 > 0 ? LadderOp::Plus : LadderOp::Minus,
                                    true);
                                t.field_left = {
                                    f1 > 0 ? FieldOp::Create : FieldOp::Annihilate,
                                    f2 > 0 ? FieldOp::Create : FieldOp::Annihilate};
                                terms.push_back(detail::daggered(t));
                                terms.push_back(std::move(t));
                            }
                    }

        // U1 rho0 U1^dag sandwiches
        for (Det dl : {Det::A, Det::B})
            for (Det dr : {Det::A, Det::B})
                for (int el : {+1, -1})
                    for (int er : {+1, -1}) {
                        // the traced probe word sigma^er sigma^el vanishes for
                        // equal signs; target sandwiches do not trace out
                        if (dl == Det::A && dr == Det::A && el == er) continue;
                        for (int fl : {+1, -1})
                            for (int fr : {+1, -1}) {
                                OperatorTerm t;
                                t.family = TermFamily::Cross;
                                t.mode = j;
                                t.prefactor = complexd(1.0, 0.0);
                                // the first-order bracket is Hermitian, so the
                                // right factor follows the same coefficient rule
                                t.amps = {detail::first_order_coeff(dl, el, fl, j),
                                          detail::first_order_coeff(dr, er, fr, j)};
                                t.lambda_a = (dl == Det::A) + (dr == Det::A);
                                t.lambda_b = (dl == Det::B) + (dr == Det::B);
                                detail::push_ladder(
                                    t, dl, el > 0 ? LadderOp::Plus : LadderOp::Minus,
                                    true);
                                detail::push_ladder(
                                    t, dr, er > 0 ? LadderOp::Plus : LadderOp::Minus,
                                    false);
                                t.field_left = {fl > 0 ? FieldOp::Create
                                                       : FieldOp::Annihilate};
                                t.field_right = {fr > 0 ? FieldOp::Create
                                                        : FieldOp::Annihilate};
                                terms.push_back(std::move(t));
                            }
                    }
    }

    std::stable_sort(terms.begin(), terms.end(),
                     [](const OperatorTerm& a, const OperatorTerm& b) {
                         return a.sort_key() < b.sort_key();
                     });
    return terms;
}

inline std::vector<OperatorTerm> expand_terms(int order, int modes) {
    return expand_terms_range(order, 1, modes);
}

// Keys referenced by a term list; used to cross-check table enumeration.
inline std::vector<AmplitudeKey> referenced_keys(std::span<const OperatorTerm> terms) {
    std::vector<AmplitudeKey> keys;
    for (const auto& t : terms)
        for (const auto& a : t.amps) keys.push_back(normalized(a.key));
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    return keys;
}

// <word> on one field mode: coherent amplitude alpha on the designated mode,
// vacuum elsewhere. Words longer than 2 are outside the second-order algebra.
inline complexd field_expectation(std::span<const FieldOp> word, int mode,
                                  complexd alpha) {
    bool coherent = (mode == CavityConfig::coherent_mode);
    switch (word.size()) {
        case 0:
            return {1.0, 0.0};
        case 1:
            if (!coherent) return {0.0, 0.0};
            return word[0] == FieldOp::Create ? std::conj(alpha) : alpha;
        case 2: {
            bool c0 = word[0] == FieldOp::Create;
            bool c1 = word[1] == FieldOp::Create;
            if (!c0 && c1)  // a a^dag
                return coherent ? complexd(1.0, 0.0) + std::conj(alpha) * alpha
                                : complexd(1.0, 0.0);
            if (!coherent) return {0.0, 0.0};
            if (c0 && c1) return std::conj(alpha) * std::conj(alpha);
            if (!c0 && !c1) return alpha * alpha;
            return std::conj(alpha) * alpha;  // a^dag a
        }
        default:
            throw ValidationError("field_expectation: word length above 2 is unsupported");
    }
}

// Tr(word . rho) over the probe qubit, word given left-to-right. The empty
// word is exactly 1 by the unit-trace contract, not Tr(rho) with its rounding.
inline complexd probe_expectation(std::span<const LadderOp> word,
                                  const QubitDensity& rho_a) {
    if (word.empty()) return {1.0, 0.0};
    Matrix2c w = Matrix2c::Identity();
    for (auto op : word) w = w * (op == LadderOp::Plus ? sigma_plus() : sigma_minus());
    return (w * rho_a.m).trace();
}

inline Matrix2c ladder_word_matrix(std::span<const LadderOp> word) {
    Matrix2c w = Matrix2c::Identity();
    for (auto op : word) w = w * (op == LadderOp::Plus ? sigma_plus() : sigma_minus());
    return w;
}

// --- evaluation --------------------------------------------------------------

// Scalar weight of a term: prefactor x amplitudes x couplings x field and
// probe expectations. The field factor is evaluated first so that vacuum-mode
// terms that die under the trace never touch the amplitude table.
inline complexd term_weight(const OperatorTerm& t, const AmplitudeTable& table,
                            double lambda_a, double lambda_b, complexd alpha,
                            const QubitDensity& rho_a) {
    std::vector<FieldOp> field_word;
    field_word.reserve(2);
    for (auto op : t.field_right) field_word.push_back(op);
    for (auto op : t.field_left) field_word.push_back(op);
    complexd field = field_expectation(field_word, t.mode, alpha);
    if (field == complexd(0.0, 0.0)) return {0.0, 0.0};

    std::vector<LadderOp> probe_word;
    probe_word.reserve(2);
    for (auto op : t.probe_right) probe_word.push_back(op);
    for (auto op : t.probe_left) probe_word.push_back(op);
    complexd probe = probe_expectation(probe_word, rho_a);
    if (probe == complexd(0.0, 0.0)) return {0.0, 0.0};

    complexd w = t.prefactor * field * probe;
    for (const auto& a : t.amps) w *= table.value(a.key, a.conjugated);
    for (int k = 0; k < t.lambda_a; ++k) w *= lambda_a;
    for (int k = 0; k < t.lambda_b; ++k) w *= lambda_b;
    return w;
}

// 4x4 superoperator on vec(rho_B) (column-major), summing terms in their
// sorted order so parallel table construction cannot perturb the result.
inline Eigen::Matrix4cd target_superop(std::span<const OperatorTerm> terms,
                                       const AmplitudeTable& table,
                                       const ValidatedConfig& vc,
                                       const QubitDensity& rho_a) {
    const auto& c = vc.config();
    Eigen::Matrix4cd S = Eigen::Matrix4cd::Zero();
    for (const auto& t : terms) {
        complexd w = term_weight(t, table, c.probe.coupling, c.target.coupling,
                                 c.field.alpha, rho_a);
        if (w == complexd(0.0, 0.0)) continue;
        Matrix2c L = ladder_word_matrix(t.target_left);
        Matrix2c R = ladder_word_matrix(t.target_right);
        // vec(L rho R) = (R^T kron L) vec(rho)
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) {
                complexd rt = R(i, k);  // (R^T)(k, i)
                if (rt == complexd(0.0, 0.0)) continue;
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        S(k * 2 + a, i * 2 + b) += w * rt * L(a, b);
            }
    }
    return S;
}

inline Matrix2c apply_superop(const Eigen::Matrix4cd& S, const Matrix2c& rho) {
    Eigen::Vector4cd v;
    v << rho(0, 0), rho(1, 0), rho(0, 1), rho(1, 1);
    Eigen::Vector4cd out = S * v;
    Matrix2c m;
    m << out(0), out(2), out(1), out(3);
    return m;
}

// First-order generator: rho1 = -i [M, rho] with Hermitian M; M is purely
// off-diagonal, so it is determined by its (e,g) entry.
inline complexd first_order_generator_eg(const ValidatedConfig& vc,
                                         const AmplitudeTable& table) {
    const auto& c = vc.config();
    complexd ip = table.value(make_I(Det::B, +1, 1));
    complexd im = table.value(make_I(Det::B, -1, 1));
    return c.target.coupling *
           (std::conj(c.field.alpha) * ip + c.field.alpha * std::conj(im));
}

// The commutator is built entry-wise so that Hermiticity and tracelessness
// hold to the last bit, not merely to rounding.
inline Matrix2c first_order_correction(complexd m_eg, const Matrix2c& rho) {
    const complexd i_unit(0.0, 1.0);
    complexd x = m_eg * rho(1, 0);
    complexd d = x - std::conj(x);  // purely imaginary in exact arithmetic and here
    complexd diag = -i_unit * d;
    complexd off = -i_unit * m_eg * (rho(1, 1).real() - rho(0, 0).real());
    Matrix2c out;
    out(0, 0) = diag;
    out(1, 1) = -diag;
    out(0, 1) = off;
    out(1, 0) = std::conj(off);
    return out;
}

inline Matrix2c reduced_first_order(const ValidatedConfig& vc,
                                    const AmplitudeTable& table) {
    const auto& c = vc.config();
    QubitDensity rho0 = target_state(c.target.theta, c.target.phi);
    return first_order_correction(first_order_generator_eg(vc, table), rho0.m);
}

// --- assembly ---------------------------------------------------------------

struct EvolutionOperators {
    complexd m_eg{0.0, 0.0};
    Eigen::Matrix4cd second_order = Eigen::Matrix4cd::Zero();
    int modes_used = 0;
    double mode_delta = 0.0;
    double max_quad_error = 0.0;
    std::uint64_t config_hash = 0;
};

struct AssembleOptions {
    unsigned threads = 1;
    bool check_mode_convergence = true;
};

// Largest change any density matrix entry can see from a superoperator
// increment: max row L1 norm (state entries are bounded by 1).
inline double superop_bound(const Eigen::Matrix4cd& S) {
    double worst = 0.0;
    for (int r = 0; r < 4; ++r) {
        double acc = 0.0;
        for (int col = 0; col < 4; ++col) acc += std::abs(S(r, col));
        worst = std::max(worst, acc);
    }
    return worst;
}

// Builds the per-configuration evolution operators: amplitude table, the
// first-order generator, and the second-order superoperator with the vacuum
// mode sum extended (N -> 2N, capped) until it moves the result less than
// numerics.mode_tol.
inline EvolutionOperators build_evolution(const ValidatedConfig& vc,
                                          const AssembleOptions& opts = {}) {
    const auto& c = vc.config();
    double T = c.probe.motion.flight_time;
    QubitDensity rho_a = probe_state(c.probe.prep_p);

    int n = c.cavity.modes;
    AmplitudeTable table = build_table(vc, T, opts.threads);
    auto terms = expand_terms_range(2, 1, n);

    EvolutionOperators ops;
    ops.config_hash = vc.hash();
    ops.m_eg = first_order_generator_eg(vc, table);
    ops.second_order = target_superop(terms, table, vc, rho_a);
    ops.modes_used = n;
    ops.max_quad_error = table.meta().max_error_bound;

    if (!opts.check_mode_convergence) return ops;

    for (;;) {
        int next = std::min(2 * n, c.numerics.max_modes);
        if (next <= n)
            throw ConvergenceError(
                "mode sum did not converge by numerics.max_modes = " +
                    format_int(c.numerics.max_modes) + " (last delta " +
                    format_double(ops.mode_delta) + ")",
                complexd(ops.mode_delta, 0.0), ops.mode_delta);
        auto extra_keys = table_keys(n + 1, next);
        AmplitudeTable extra = build_table(vc, T, extra_keys, opts.threads);
        auto extra_terms = expand_terms_range(2, n + 1, next);
        Eigen::Matrix4cd dS = target_superop(extra_terms, extra, vc, rho_a);

        table.merge(extra);
        ops.second_order += dS;
        ops.modes_used = next;
        ops.mode_delta = superop_bound(dS);
        ops.max_quad_error =
            std::max(ops.max_quad_error, extra.meta().max_error_bound);
        n = next;
        if (ops.mode_delta <= c.numerics.mode_tol) break;
    }
    return ops;
}

struct ReducedState {
    QubitDensity initial;
    Matrix2c rho1 = Matrix2c::Zero();
    Matrix2c rho2 = Matrix2c::Zero();
    QubitDensity final_state;

    double trace1_abs = 0.0;
    double trace2_abs = 0.0;
    double hermiticity_defect = 0.0;  // before symmetrization
    double min_eigenvalue = 0.0;
    int modes_used = 0;
    double mode_delta = 0.0;
    double max_quad_error = 0.0;
};

inline ReducedState reduce_with_operators(const EvolutionOperators& ops,
                                          const QubitDensity& rho0) {
    ReducedState out;
    out.initial = rho0;
    out.rho1 = first_order_correction(ops.m_eg, rho0.m);
    out.rho2 = apply_superop(ops.second_order, rho0.m);

    Matrix2c raw = rho0.m + out.rho1 + out.rho2;
    out.trace1_abs = std::abs(out.rho1.trace());
    out.trace2_abs = std::abs(out.rho2.trace());
    out.hermiticity_defect = (raw - raw.adjoint().eval()).cwiseAbs().maxCoeff();
    out.final_state.m = 0.5 * (raw + raw.adjoint().eval());
    out.min_eigenvalue = out.final_state.min_eigenvalue();
    out.modes_used = ops.modes_used;
    out.mode_delta = ops.mode_delta;
    out.max_quad_error = ops.max_quad_error;
    return out;
}

// rho_T,B = rho_0,B + rho^(1) + rho^(2), with diagnostics.
inline ReducedState assemble(const ValidatedConfig& vc, const AssembleOptions& opts = {}) {
    const auto& c = vc.config();
    EvolutionOperators ops = build_evolution(vc, opts);
    return reduce_with_operators(ops, target_state(c.target.theta, c.target.phi));
}

inline Matrix2c reduced_second_order(const ValidatedConfig& vc,
                                     const AmplitudeTable& table) {
    const auto& c = vc.config();
    auto terms = expand_terms_range(2, 1, c.cavity.modes);
    QubitDensity rho_a = probe_state(c.probe.prep_p);
    Eigen::Matrix4cd S = target_superop(terms, table, vc, rho_a);
    return apply_superop(S, target_state(c.target.theta, c.target.phi).m);
}

// Diagnostic CSV of the generated terms with their evaluated scalar weights.
inline void dump_terms(std::ostream& os, std::span<const OperatorTerm> terms,
                       const AmplitudeTable& table, const ValidatedConfig& vc) {
    const auto& c = vc.config();
    QubitDensity rho_a = probe_state(c.probe.prep_p);
    os << "term,family,mode,lambda_a,lambda_b,weight_re,weight_im\n";
    for (const auto& t : terms) {
        complexd w = term_weight(t, table, c.probe.coupling, c.target.coupling,
                                 c.field.alpha, rho_a);
        os << t.sort_key() << ',' << family_tag(t.family) << ',' << format_int(t.mode)
           << ',' << format_int(t.lambda_a) << ',' << format_int(t.lambda_b) << ','
           << format_double(w.real()) << ',' << format_double(w.imag()) << '\n';
    }
}

}  // namespace rqc
