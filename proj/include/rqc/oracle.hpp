#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "amplitudes.hpp"
#include "config.hpp"
#include "dyson.hpp"
#include "errors.hpp"
#include "kinematics.hpp"
#include "qubit.hpp"

namespace rqc {

// Non-perturbative validation harness: the interaction-picture Hamiltonian is
// propagated in a truncated probe x target x Fock product space and the target
// reduced state compared against the perturbative pipeline.

struct TruncatedSpace {
    int modes = 2;
    int n_max = 10;

    int fock_dim() const {
        int f = 1;
        for (int m = 0; m < modes; ++m) f *= (n_max + 1);
        return f;
    }
    int dim() const { return 4 * fock_dim(); }
};

namespace oracle_detail {

struct Triplet {
    int row, col;
    double value;
};

// Sparse annihilation operator for one mode on the Fock product factor.
inline std::vector<Triplet> mode_annihilator(const TruncatedSpace& s, int mode) {
    int f = s.fock_dim();
    int inner = 1;  // stride of the chosen mode: later modes vary fastest
    for (int m = mode + 1; m <= s.modes; ++m) inner *= (s.n_max + 1);
    std::vector<Triplet> out;
    out.reserve(f);
    for (int idx = 0; idx < f; ++idx) {
        int n = (idx / inner) % (s.n_max + 1);
        if (n == 0) continue;
        out.push_back({idx - inner, idx, std::sqrt(static_cast<double>(n))});
    }
    return out;
}

}  // namespace oracle_detail

// Truncated coherent state on mode 1, vacuum elsewhere. The discarded weight
// must stay below 1e-8; the kept vector is renormalized.
inline Eigen::VectorXcd field_initial_vector(const TruncatedSpace& s, complexd alpha) {
    int per_mode = s.n_max + 1;
    Eigen::VectorXcd coh(per_mode);
    double log_fact = 0.0;
    for (int n = 0; n < per_mode; ++n) {
        if (n > 0) log_fact += std::log(static_cast<double>(n));
        coh(n) = std::pow(alpha, n) * std::exp(-0.5 * std::norm(alpha) - 0.5 * log_fact);
    }
    double kept = coh.squaredNorm();
    if (1.0 - kept > 1e-8)
        throw ValidationError("coherent-state truncation discards weight " +
                              format_double(1.0 - kept) + "; raise n_max");
    coh /= std::sqrt(kept);

    Eigen::VectorXcd out = coh;
    for (int m = 2; m <= s.modes; ++m) {
        Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(per_mode);
        vac(0) = 1.0;
        Eigen::VectorXcd next(out.size() * per_mode);
        for (int i = 0; i < out.size(); ++i)
            next.segment(i * per_mode, per_mode) = out(i) * vac;
        out.swap(next);
    }
    return out;
}

class ExactEvolver {
public:
    ExactEvolver(const ValidatedConfig& vc, const TruncatedSpace& space)
        : cfg_(vc.config()), space_(space), fock_(space.fock_dim()) {
        for (int j = 1; j <= space_.modes; ++j) {
            ops_.push_back(oracle_detail::mode_annihilator(space_, j));
            freqs_.push_back(vc.mode_freq(j));
        }
    }

    // Interaction-picture Hamiltonian at cavity time t, dense.
    Eigen::MatrixXcd hamiltonian(double t) const {
        int f = fock_;
        Eigen::MatrixXcd phi_a = Eigen::MatrixXcd::Zero(f, f);
        Eigen::MatrixXcd phi_b = Eigen::MatrixXcd::Zero(f, f);
        DetectorPath pa = DetectorPath::probe(cfg_);
        DetectorPath pb = DetectorPath::target(cfg_);
        for (int j = 0; j < space_.modes; ++j) {
            double w = freqs_[j];
            complexd rot = std::polar(1.0, -w * t);
            complexd ma = mode_fn(j + 1, pa.x(t), cfg_.cavity.length) * rot;
            complexd mb = mode_fn(j + 1, pb.x(t), cfg_.cavity.length) * rot;
            for (const auto& trip : ops_[j]) {
                phi_a(trip.row, trip.col) += ma * trip.value;
                phi_a(trip.col, trip.row) += std::conj(ma) * trip.value;
                phi_b(trip.row, trip.col) += mb * trip.value;
                phi_b(trip.col, trip.row) += std::conj(mb) * trip.value;
            }
        }

        complexd ea = std::polar(1.0, cfg_.probe.gap * pa.tau(t));
        complexd eb = std::polar(1.0, cfg_.target.gap * t);
        Matrix2c sig_a = ea * sigma_plus() + std::conj(ea) * sigma_minus();
        Matrix2c sig_b = eb * sigma_plus() + std::conj(eb) * sigma_minus();
        double ca = cfg_.probe.coupling * pa.xi(t);
        double cb = cfg_.target.coupling;

        int d = space_.dim();
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(d, d);
        for (int p = 0; p < 2; ++p)
            for (int pp = 0; pp < 2; ++pp)
                for (int q = 0; q < 2; ++q)
                    for (int qq = 0; qq < 2; ++qq) {
                        bool use_a = (q == qq) && sig_a(p, pp) != complexd(0.0, 0.0);
                        bool use_b = (p == pp) && sig_b(q, qq) != complexd(0.0, 0.0);
                        if (!use_a && !use_b) continue;
                        int r0 = (p * 2 + q) * f;
                        int c0 = (pp * 2 + qq) * f;
                        if (use_a)
                            h.block(r0, c0, f, f) += (ca * sig_a(p, pp)) * phi_a;
                        if (use_b)
                            h.block(r0, c0, f, f) += (cb * sig_b(q, qq)) * phi_b;
                    }
        return h;
    }

    Eigen::VectorXcd initial_state() const {
        Eigen::Vector2cd va = probe_amplitudes(cfg_.probe.prep_p);
        Eigen::Vector2cd vb = target_amplitudes(cfg_.target.theta, cfg_.target.phi);
        Eigen::VectorXcd vf = field_initial_vector(space_, cfg_.field.alpha);

        Eigen::VectorXcd psi(space_.dim());
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q)
                psi.segment((p * 2 + q) * fock_, fock_) = va(p) * vb(q) * vf;
        return psi;
    }

    // One commutator-free 4th-order step: two Gauss nodes, two exponential
    // factors, each applied by a machine-precision Taylor sum and followed by
    // renormalization so the step stays unitary in effect.
    void step(Eigen::VectorXcd& psi, double t, double h) const {
        static const double c1 = 0.5 - std::sqrt(3.0) / 6.0;
        static const double c2 = 0.5 + std::sqrt(3.0) / 6.0;
        static const double a1 = 0.25 - std::sqrt(3.0) / 6.0;
        static const double a2 = 0.25 + std::sqrt(3.0) / 6.0;
        Eigen::MatrixXcd h1 = hamiltonian(t + c1 * h);
        Eigen::MatrixXcd h2 = hamiltonian(t + c2 * h);
        Eigen::MatrixXcd b = a2 * h1 + a1 * h2;
        apply_exp(b, h, psi);
        b = a1 * h1 + a2 * h2;
        apply_exp(b, h, psi);
        psi.normalize();
    }

    Matrix2c reduced_target(const Eigen::VectorXcd& psi) const {
        Matrix2c rho = Matrix2c::Zero();
        for (int q = 0; q < 2; ++q)
            for (int qq = 0; qq < 2; ++qq) {
                complexd acc{0.0, 0.0};
                for (int p = 0; p < 2; ++p) {
                    const auto seg_r = psi.segment((p * 2 + q) * fock_, fock_);
                    const auto seg_c = psi.segment((p * 2 + qq) * fock_, fock_);
                    acc += seg_c.dot(seg_r);  // conj(seg_c) . seg_r
                }
                rho(q, qq) = acc;
            }
        return rho;
    }

    Matrix2c run(int steps) const {
        Eigen::VectorXcd psi = initial_state();
        double T = cfg_.probe.motion.flight_time;
        double h = T / steps;
        for (int k = 0; k < steps; ++k) step(psi, k * h, h);
        return reduced_target(psi);
    }

private:
    static void apply_exp(const Eigen::MatrixXcd& b, double h, Eigen::VectorXcd& psi) {
        const complexd factor(0.0, -h);
        Eigen::VectorXcd term = psi;
        double base = psi.norm();
        for (int k = 1; k <= 80; ++k) {
            term = (factor / static_cast<double>(k)) * (b * term).eval();
            psi += term;
            if (term.norm() <= 1e-16 * base) return;
        }
        throw ConvergenceError("propagator Taylor sum did not terminate", {}, 0.0);
    }

    SimulationConfig cfg_;
    TruncatedSpace space_;
    int fock_;
    std::vector<std::vector<oracle_detail::Triplet>> ops_;
    std::vector<double> freqs_;
};

struct ExactResult {
    QubitDensity rho_b;
    int steps = 0;
    double step_delta = 0.0;
    double truncation_delta = 0.0;
};

struct ExactOptions {
    double step_tol = 1e-10;
    int initial_steps = 64;
    int max_steps = 1 << 17;
    bool check_truncation = true;
    double truncation_tol = 1e-8;
};

// Time-sliced propagation with step halving until the reduced target state
// moves less than step_tol in trace distance, then a truncation sensitivity
// pass at n_max + 2.
inline ExactResult exact_evolve(const ValidatedConfig& vc, const TruncatedSpace& space,
                                const ExactOptions& opt = {}) {
    if (vc.config().cavity.modes < space.modes)
        throw ValidationError("truncated space uses more modes than the configuration");

    ExactEvolver ev(vc, space);
    ExactResult out;
    if (!(vc.config().probe.motion.flight_time > 0.0)) {
        out.rho_b.m = ev.run(1);
        return out;
    }

    int n = opt.initial_steps;
    Matrix2c prev = ev.run(n);
    for (;;) {
        int n2 = 2 * n;
        Matrix2c cur = ev.run(n2);
        double delta = trace_distance(prev, cur);
        if (delta < opt.step_tol) {
            out.rho_b.m = cur;
            out.steps = n2;
            out.step_delta = delta;
            break;
        }
        if (n2 >= opt.max_steps)
            throw ConvergenceError("exact evolution did not converge in steps (delta " +
                                       format_double(delta) + ")",
                                   complexd(delta, 0.0), delta);
        prev = cur;
        n = n2;
    }

    if (opt.check_truncation) {
        TruncatedSpace bigger = space;
        bigger.n_max += 2;
        ExactEvolver ev2(vc, bigger);
        Matrix2c wide = ev2.run(out.steps);
        out.truncation_delta = trace_distance(out.rho_b.m, wide);
        if (out.truncation_delta > opt.truncation_tol)
            throw ConvergenceError(
                "truncated space is visibly too small (n_max sensitivity " +
                    format_double(out.truncation_delta) + ")",
                complexd(out.truncation_delta, 0.0), out.truncation_delta);
    }
    return out;
}

struct ScalingPoint {
    double coupling;
    double distance;
    ReducedState perturbative;
    ExactResult exact;
};

struct ScalingReport {
    std::vector<ScalingPoint> points;
    double exponent = 0.0;
};

// Residual between perturbative and exact reduced states across couplings,
// holding alpha fixed; the trace distance should shrink like lambda^3.
inline ScalingReport residual_scaling(const SimulationConfig& base,
                                      std::span<const double> couplings,
                                      const TruncatedSpace& space,
                                      const ExactOptions& opt = {}) {
    ScalingReport report;
    for (double lam : couplings) {
        SimulationConfig c = base;
        c.cavity.modes = space.modes;  // identical mode truncation on both sides
        c.probe.coupling = lam;
        c.target.coupling = lam;
        auto vc = ValidatedConfig::validate(c);

        AssembleOptions aopt;
        aopt.threads = default_threads();
        aopt.check_mode_convergence = false;
        ReducedState pert = assemble(vc, aopt);
        ExactResult ex = exact_evolve(vc, space, opt);

        ScalingPoint p{lam, trace_distance(pert.final_state.m, ex.rho_b.m), pert, ex};
        report.points.push_back(std::move(p));
    }

    double n = static_cast<double>(report.points.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& p : report.points) {
        double x = std::log(p.coupling);
        double y = std::log(std::max(p.distance, 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    report.exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return report;
}

inline void require_cubic_residual(const ScalingReport& r, double lo = 2.7,
                                   double hi = 3.3) {
    if (r.exponent < lo || r.exponent > hi)
        throw ConvergenceError("perturbative residual scales with exponent " +
                                   format_double(r.exponent) +
                                   ", outside [" + format_double(lo) + ", " +
                                   format_double(hi) + "]",
                               complexd(r.exponent, 0.0), 0.0);
}

}  // namespace rqc
