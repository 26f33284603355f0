#include <doctest.h>

#include <cmath>
#include <rqc/observables.hpp>

using namespace rqc;

TEST_CASE("bloch vectors of the cardinal states") {
    BlochRecord north = bloch(target_state(0.0, 0.0));
    CHECK(north.r.z() == doctest::Approx(1.0));
    CHECK(*north.theta == doctest::Approx(0.0));
    CHECK(!north.phi);  // azimuth is meaningless on the pole
    CHECK(north.purity == doctest::Approx(1.0));

    QubitDensity plus_x;
    plus_x.m = 0.5 * (Matrix2c::Identity() + sigma_x());
    BlochRecord bx = bloch(plus_x);
    CHECK(*bx.theta == doctest::Approx(kPi / 2.0));
    CHECK(*bx.phi == doctest::Approx(0.0));

    QubitDensity mixed;  // I/2
    BlochRecord bm = bloch(mixed);
    CHECK(bm.r.norm() < 1e-15);
    CHECK(!bm.theta);
    CHECK(!bm.phi);
    CHECK(bm.purity == doctest::Approx(0.5));
}

TEST_CASE("purity identities") {
    CHECK(purity(target_state(1.234, -2.1)) == doctest::Approx(1.0).epsilon(1e-14));

    QubitDensity r;
    r.m = 0.5 * (Matrix2c::Identity() + 0.6 * sigma_z());
    CHECK(purity(r) == doctest::Approx(0.68).epsilon(1e-14));

    // purity == (1 + |r|^2)/2 for any Hermitian unit-trace input
    QubitDensity q;
    q.m << complexd(0.7, 0.0), complexd(0.1, 0.2), complexd(0.1, -0.2), complexd(0.3, 0.0);
    BlochRecord b = bloch(q);
    CHECK(purity(q) ==
          doctest::Approx((1.0 + b.r.squaredNorm()) / 2.0).epsilon(1e-12));
}

TEST_CASE("delta angles under an exact z rotation") {
    QubitDensity a = target_state(kPi / 2.0, 0.3);
    QubitDensity b = target_state(kPi / 2.0, 0.4);
    auto d = delta_angles(a, b);
    CHECK(d.d_theta == doctest::Approx(0.0).epsilon(1e-13));
    CHECK(d.d_phi == doctest::Approx(0.1).epsilon(1e-10));

    auto zero = delta_angles(a, a);
    CHECK(zero.d_theta == 0.0);
    CHECK(zero.d_phi == 0.0);
}

TEST_CASE("delta angles wrap across the branch cut") {
    QubitDensity a = target_state(1.0, kPi - 0.05);
    QubitDensity b = target_state(1.0, -kPi + 0.05);
    auto d = delta_angles(a, b);
    CHECK(d.d_phi == doctest::Approx(0.1).epsilon(1e-10));
}

TEST_CASE("delta angles are antisymmetric") {
    QubitDensity a = target_state(0.7, 1.9);
    QubitDensity b = target_state(0.9, -2.8);
    auto fwd = delta_angles(a, b);
    auto bwd = delta_angles(b, a);
    CHECK(fwd.d_theta == doctest::Approx(-bwd.d_theta).epsilon(1e-13));
    CHECK(wrap_angle(fwd.d_phi + bwd.d_phi) == doctest::Approx(0.0).epsilon(1e-13));
}

TEST_CASE("undefined angles are errors, not numbers") {
    QubitDensity mixed;  // r = 0
    CHECK_THROWS_AS(delta_angles(mixed, target_state(1.0, 1.0)), ValidationError);
    CHECK_THROWS_AS(delta_angles(target_state(0.0, 0.0), target_state(1.0, 1.0)),
                    ValidationError);  // pole: no azimuth
}

TEST_CASE("angle extraction is basis-phase consistent") {
    // rotating both states' off-diagonals by a common phase shifts phi by it
    double chi = 0.83;
    QubitDensity a = target_state(kPi / 3.0, 0.2);
    QubitDensity b = target_state(kPi / 3.0, 1.1);
    auto rot = [&](const QubitDensity& q) {
        QubitDensity out = q;
        out.m(0, 1) *= std::polar(1.0, -chi);
        out.m(1, 0) *= std::polar(1.0, chi);
        return out;
    };
    auto d0 = delta_angles(a, b);
    auto d1 = delta_angles(rot(a), rot(b));
    CHECK(d0.d_phi == doctest::Approx(d1.d_phi).epsilon(1e-12));
    CHECK(d0.d_theta == doctest::Approx(d1.d_theta).epsilon(1e-12));
}

TEST_CASE("wrap_angle lands in (-pi, pi]") {
    CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_angle(0.1 - 4.0 * kPi) == doctest::Approx(0.1));
}
