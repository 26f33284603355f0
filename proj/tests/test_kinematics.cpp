#include <doctest.h>

#include <cmath>
#include <initializer_list>
#include <rqc/kinematics.hpp>

using namespace rqc;

namespace {

// Composite Simpson, independent of the library quadrature.
template <class F>
double simpson(F&& f, double a, double b, int n) {
    if (n % 2) ++n;
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Root of the worldline position (cosh(a tau) - 1)/a = L in proper time,
// written with cosh directly so it stays independent of the library path.
double bisect_crossing(double a, double L) {
    auto xp = [&](double tau) { return (std::cosh(a * tau) - 1.0) / a; };
    double lo = 0.0, hi = 1.0;
    while (xp(hi) < L) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (xp(mid) < L ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("proper time inverts the worldline clock") {
    CHECK(proper_time(1.0, 0.0) == 0.0);
    CHECK(proper_time(1.0, std::sinh(1.0)) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(proper_time(0.0, 2.5) == 2.5);
}

TEST_CASE("position along the hyperbola") {
    CHECK(position(1.0, 0.0) == 0.0);
    CHECK(position(1.0, std::sinh(1.0)) ==
          doctest::Approx(std::cosh(1.0) - 1.0).epsilon(1e-13));
    // direct formula
    CHECK(position(0.5, 1.0) ==
          doctest::Approx((std::sqrt(1.25) - 1.0) / 0.5).epsilon(1e-13));
    CHECK(position(0.5, 1.0) == doctest::Approx(0.23607).epsilon(1e-4));
    // cross-check against numerically integrated velocity a t / sqrt(1 + a^2 t^2)
    double via_velocity = simpson(
        [](double t) { return 0.5 * t / std::sqrt(1.0 + 0.25 * t * t); }, 0.0, 1.0,
        2000);
    CHECK(position(0.5, 1.0) == doctest::Approx(via_velocity).epsilon(1e-10));
}

TEST_CASE("crossing time solves x(T) = L") {
    CHECK(crossing_time(1.0, std::cosh(1.0) - 1.0) == doctest::Approx(1.0).epsilon(1e-13));

    double T = crossing_time(2.3, 1.0);
    CHECK(T == doctest::Approx(std::acosh(3.3) / 2.3).epsilon(1e-13));
    CHECK(T == doctest::Approx(0.8127).epsilon(5e-3));
    CHECK(T == doctest::Approx(bisect_crossing(2.3, 1.0)).epsilon(1e-12));

    // Newtonian free-fall asymptote
    double a = 1e-8, L = 0.5;
    CHECK(crossing_time(a, L) ==
          doctest::Approx(std::sqrt(2.0 * L / a)).epsilon(1e-6));

    CHECK(std::isinf(crossing_time(0.0, 1.0)));
}

TEST_CASE("round trip t(tau(t)) over a grid") {
    for (double a : {0.0, 1e-7, 1e-3, 0.5, 2.3, 5.0}) {
        for (double t : {0.0, 0.1, 1.0, 4.0, 10.0}) {
            double back = coordinate_time(a, proper_time(a, t));
            CHECK(back == doctest::Approx(t).epsilon(1e-12));
        }
    }
}

TEST_CASE("series and exact branches meet continuously") {
    // evaluate just below the threshold (series) and at it (exact branch)
    double a_hi = kSeriesBranchA;
    double a_lo = std::nextafter(a_hi, 0.0);
    for (double t : {0.3, 1.0, 7.5}) {
        CHECK(std::abs(proper_time(a_lo, t) - proper_time(a_hi, t)) < 1e-10);
        CHECK(std::abs(position(a_lo, t) - position(a_hi, t)) < 1e-10);
    }
    double L = 0.8;
    CHECK(std::abs(crossing_time(a_lo, L) - crossing_time(a_hi, L)) <
          1e-12 * crossing_time(a_hi, L));
}

TEST_CASE("monotonicity in t for a > 0") {
    double a = 1.7;
    double prev_tau = -1.0, prev_x = -1.0;
    for (int i = 0; i <= 100; ++i) {
        double t = i * 0.1;
        double tau = proper_time(a, t), x = position(a, t);
        CHECK(tau > prev_tau);
        if (i > 0) CHECK(x > prev_x);
        prev_tau = tau;
        prev_x = x;
    }
}

TEST_CASE("redshift integrates to proper time") {
    double a = 1.3, t = 2.0;
    double integrated = simpson([&](double s) { return redshift(a, s); }, 0.0, t, 4000);
    CHECK(integrated == doctest::Approx(proper_time(a, t)).epsilon(1e-10));
}

TEST_CASE("SI conversion of the dimensionless acceleration") {
    auto si = si_acceleration(1.0, 1e9);
    CHECK(std::abs(si.multiples_of_g - 1e16) / 1e16 < 0.05);
    CHECK(si.multiples_of_g == doctest::Approx(9.74e15).epsilon(1e-2));

    CHECK(si_acceleration(0.0, 5e8).meters_per_s2 == 0.0);

    // linear in the gap
    auto lo = si_acceleration(1.0, 1e6);
    CHECK(lo.multiples_of_g == doctest::Approx(si.multiples_of_g / 1000.0).epsilon(1e-12));
    CHECK(lo.multiples_of_g == doctest::Approx(9.74e12).epsilon(1e-2));
}
