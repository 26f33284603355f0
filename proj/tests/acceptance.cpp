// Acceptance suite: one line per criterion, nonzero exit if any fails.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <rqc/dyson.hpp>
#include <rqc/fixtures.hpp>
#include <rqc/kinematics.hpp>
#include <rqc/observables.hpp>
#include <rqc/oracle.hpp>
#include <rqc/sweep.hpp>

using namespace rqc;

namespace {

int g_failures = 0;

template <class Fn>
void run(const char* name, Fn&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    bool passed = false;
    std::string detail;
    try {
        detail = fn(passed);
    } catch (const std::exception& e) {
        passed = false;
        detail = std::string("exception: ") + e.what();
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("[%s] %s (%.1f s)%s%s\n", passed ? "PASS" : "FAIL", name, secs,
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!passed) ++g_failures;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. Trace and Hermiticity discipline over randomized valid configurations.
std::string criterion_unitarity(bool& passed) {
    std::mt19937_64 rng(20240817ull);
    std::uniform_real_distribution<double> ua(0.0, 2.3), ut(0.0, 1.5);
    std::uniform_real_distribution<double> ualpha(0.3, 1.5), uphase(-kPi, kPi);
    std::uniform_real_distribution<double> utheta(0.2, kPi - 0.2);
    std::uniform_real_distribution<double> up(-0.7, 0.7);

    auto t0 = std::chrono::steady_clock::now();
    double worst_tr1 = 0.0, worst_tr2 = 0.0, worst_herm = 0.0;
    for (int i = 0; i < 20; ++i) {
        SimulationConfig c;
        c.probe.motion.acceleration = ua(rng);
        c.probe.motion.flight_time = ut(rng);
        double amag = ualpha(rng);
        c.field.alpha = std::polar(amag, uphase(rng));
        c.probe.coupling = c.target.coupling = 0.01 / amag;  // lambda |alpha| = 0.01
        c.target.theta = utheta(rng);
        c.target.phi = uphase(rng);
        c.probe.prep_p = {up(rng), up(rng)};
        auto vc = ValidatedConfig::validate(c);
        AssembleOptions opts;
        opts.threads = default_threads();
        ReducedState red = assemble(vc, opts);
        worst_tr1 = std::max(worst_tr1, red.trace1_abs);
        worst_tr2 = std::max(worst_tr2, red.trace2_abs);
        worst_herm = std::max(worst_herm, red.hermiticity_defect);
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed = worst_tr1 == 0.0 && worst_tr2 < 1e-8 && worst_herm < 1e-9 && secs < 120.0;
    return "max |tr rho1| = " + format_double(worst_tr1) +
           ", max |tr rho2| = " + format_double(worst_tr2) +
           ", max hermiticity defect = " + format_double(worst_herm);
}

// 2. Cubic residual against the exact truncated evolution.
std::string criterion_oracle(bool& passed) {
    auto t0 = std::chrono::steady_clock::now();
    SimulationConfig c;
    c.cavity.modes = 2;
    c.field.alpha = {0.5, 0.0};
    std::vector<double> lams = {0.02, 0.01, 0.005};
    TruncatedSpace space{2, 10};
    auto rep = residual_scaling(c, lams, space);
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    passed = rep.exponent >= 2.7 && rep.exponent <= 3.3 && secs < 300.0;
    std::string detail = "exponent = " + format_double(rep.exponent) + " from d = {";
    for (std::size_t i = 0; i < rep.points.size(); ++i)
        detail += (i ? ", " : "") + format_double(rep.points[i].distance);
    return detail + "}";
}

// 3. Stationary-detector quadrature against closed forms, on and off resonance.
std::string criterion_closed_forms(bool& passed) {
    double worst = 0.0;
    for (double L : {kPi, 2.7}) {  // omega_1 = 1 (resonant with the gap) and not
        SimulationConfig c;
        c.cavity.length = L;
        c.cavity.modes = 3;
        c.target.position = 0.43 * L;  // off every low-mode node
        auto vc = ValidatedConfig::validate(c);
        for (double T : {0.8, 1.5}) {
            for (int j = 1; j <= 3; ++j)
                for (int s : {+1, -1}) {
                    auto got = compute_I(vc, Det::B, s, j, T).value;
                    auto want = closed::stationary_I(1.0, c.target.position, L, s, j, T);
                    worst = std::max(worst, std::abs(got - want));
                }
            for (int j : {1, 2})
                for (bool neg : {false, true})
                    for (int s1 : {+1, -1})
                        for (int s2 : {+1, -1}) {
                            auto got =
                                compute_J(vc, Det::B, neg, Det::B, s1, s2, j, T).value;
                            auto want = closed::stationary_J(
                                1.0, c.target.position, L, neg, s1, s2, j, T);
                            worst = std::max(worst, std::abs(got - want));
                        }
        }
    }
    passed = worst < 1e-10;
    return "max |quadrature - closed form| = " + format_double(worst);
}

// 4. Spectrum drift of rho0 + rho1 is second order in the coupling.
std::string criterion_first_order_rotation(bool& passed) {
    SimulationConfig base;
    base.cavity.modes = 2;
    base.target.theta = 0.9;
    base.target.phi = 0.4;
    QubitDensity rho0 = target_state(base.target.theta, base.target.phi);
    Eigen::SelfAdjointEigenSolver<Matrix2c> ref(rho0.m);

    auto drift = [&](double lam) {
        SimulationConfig c = base;
        c.target.coupling = lam;
        auto vc = ValidatedConfig::validate(c);
        auto table = build_table(vc, c.probe.motion.flight_time);
        Eigen::SelfAdjointEigenSolver<Matrix2c> es(rho0.m +
                                                   reduced_first_order(vc, table));
        return (es.eigenvalues() - ref.eigenvalues()).cwiseAbs().maxCoeff();
    };
    double d2 = drift(0.02), d1 = drift(0.01);
    double big_c = d2 / (0.02 * 0.02);
    double ratio = d2 / d1;
    passed = d2 > 0.0 && ratio > 3.5 && ratio < 4.5;
    return "C = " + format_double(big_c) + ", drift ratio = " + format_double(ratio);
}

// 5. The first-order state is independent of the probe preparation.
std::string criterion_probe_independence(bool& passed) {
    std::vector<complexd> preps = {{0.0, 1.0 / kPi}, {0.6, 0.0}, {0.0, 0.0},
                                   {-0.4, 0.25},     {0.3, -0.8}};
    Matrix2c reference;
    double worst = 0.0;
    for (std::size_t i = 0; i < preps.size(); ++i) {
        SimulationConfig c;
        c.cavity.modes = 2;
        c.probe.prep_p = preps[i];
        auto vc = ValidatedConfig::validate(c);
        auto table = build_table(vc, c.probe.motion.flight_time);
        QubitDensity rho0 = target_state(c.target.theta, c.target.phi);
        Matrix2c state = rho0.m + reduced_first_order(vc, table);
        if (i == 0)
            reference = state;
        else
            worst = std::max(worst, (state - reference).cwiseAbs().maxCoeff());
    }
    passed = worst == 0.0;
    return "max change across preparations = " + format_double(worst);
}

// 6. Mixedness stays far below the rotations at the maximizing trajectories.
std::string criterion_purity_ordering(bool& passed) {
    auto t0 = std::chrono::steady_clock::now();
    SimulationConfig c;  // lambda |alpha| = 0.01 by default
    SweepSpec spec;
    spec.a_steps = 12;
    spec.t_steps = 9;
    spec.theta_steps = 12;
    spec.phi_steps = 12;
    spec.refine_rounds = 2;
    auto records = maximize(c, spec, default_threads());

    std::vector<double> ratios;
    for (const auto& r : records) {
        if (!r.argmax_a || !r.d_phi || std::isnan(*r.d_phi)) continue;
        if (std::abs(*r.d_phi) < 1e-12) continue;
        ratios.push_back((1.0 - *r.purity) / std::abs(*r.d_phi));
    }
    if (ratios.empty()) {
        passed = false;
        return "no valid cells";
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double med = median(ratios);
    passed = med < 0.1 && secs < 600.0;
    return "median (1 - purity)/|d_phi| = " + format_double(med) + " over " +
           format_int(static_cast<long long>(ratios.size())) + " cells";
}

// 7. One dimensionless unit of acceleration at a GHz gap is ~1e16 g.
std::string criterion_si(bool& passed) {
    auto si = si_acceleration(1.0, 1e9);
    double rel = std::abs(si.multiples_of_g - 1e16) / 1e16;
    passed = rel < 0.05;
    return format_double(si.multiples_of_g) + " g, off nominal by " +
           format_double(rel * 100.0) + "%";
}

// 8. Transcribed printed terms reconcile with zero unexplained mismatches.
std::string criterion_fixtures(bool& passed) {
    const char* dir = std::getenv("RQC_TEST_DATA");
    if (!dir) {
        passed = false;
        return "RQC_TEST_DATA not set";
    }
    std::ifstream in(std::string(dir) + "/data/second_order_terms.fix");
    if (!in.good()) {
        passed = false;
        return "fixture file missing";
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    FixtureSet set = parse_fixtures(buf.str());
    auto terms = expand_terms_range(2, 1, 2);
    FixtureReport rep = check_against_generated(set, terms);
    passed = rep.ok() && set.fixtures.size() >= 30;
    std::string detail = rep.summary();
    for (const auto& f : rep.failures) detail += "; " + f;
    return detail;
}

// 9. Sweep and maximize outputs are byte-identical across runs and threads.
std::string criterion_determinism(bool& passed) {
    SimulationConfig c;
    c.cavity.modes = 8;  // smaller tables keep the five runs quick
    SweepSpec spec;
    spec.a_steps = 4;
    spec.t_steps = 3;
    spec.theta_steps = 4;
    spec.phi_steps = 4;
    spec.refine_rounds = 1;

    auto render_max = [&](unsigned threads) {
        std::ostringstream os;
        write_csv(os, maximize(c, spec, threads), "manifest.json");
        return os.str();
    };
    auto render_sweep = [&](unsigned threads) {
        std::ostringstream os;
        write_csv(os, curve_sweep(c, {0.0, 1.0, 2.3}, linspace(0.0, 1.5, 4), threads),
                  "manifest.json");
        return os.str();
    };
    std::string m1 = render_max(1);
    std::string m4 = render_max(4);
    std::string m1b = render_max(1);
    std::string s1 = render_sweep(1);
    std::string s4 = render_sweep(4);
    passed = (m1 == m4) && (m1 == m1b) && (s1 == s4);
    return passed ? "byte-identical across runs and thread counts {1, 4}"
                  : "outputs differ";
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    run("1 unitarity and Hermiticity over 20 randomized configs", criterion_unitarity);
    run("2 oracle equivalence: residual exponent in [2.7, 3.3]", criterion_oracle);
    run("3 stationary quadrature vs closed forms at 1e-10", criterion_closed_forms);
    run("4 first-order spectrum drift bounded by C lambda^2",
        criterion_first_order_rotation);
    run("5 probe-preparation independence at first order", criterion_probe_independence);
    run("6 purity deficit well below the maximized rotations", criterion_purity_ordering);
    run("7 SI conversion: 1 unit at 1 GHz within 5% of 1e16 g", criterion_si);
    run("8 fixture reconciliation with zero unexplained mismatches", criterion_fixtures);
    run("9 deterministic sweep/maximize output across threads", criterion_determinism);
    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
