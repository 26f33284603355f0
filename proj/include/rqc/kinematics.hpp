#pragma once

#include <cmath>
#include <limits>

namespace rqc {

// Uniformly accelerated worldline starting at rest at the cavity mouth:
//   t(tau) = sinh(a tau)/a,  x(tau) = (cosh(a tau) - 1)/a,
// expressed below as functions of cavity-frame time t. Small-a branches use
// 4th-order series to avoid cancellation in (sqrt(1 + a^2 t^2) - 1)/a.

inline constexpr double kSeriesBranchA = 1e-6;
inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kStandardGravity = 9.8;        // m/s^2

// Proper time along the probe worldline at cavity time t: asinh(a t)/a.
inline double proper_time(double a, double t) {
    double u = a * t;
    if (a < kSeriesBranchA) {
        double u2 = u * u;
        return t * (1.0 - u2 / 6.0 + 3.0 * u2 * u2 / 40.0);
    }
    return std::asinh(u) / a;
}

// Inverse map: cavity time at probe proper time tau.
inline double coordinate_time(double a, double tau) {
    double u = a * tau;
    if (a < kSeriesBranchA) {
        double u2 = u * u;
        return tau * (1.0 + u2 / 6.0 + u2 * u2 / 120.0);
    }
    return std::sinh(u) / a;
}

// Probe position at cavity time t: (sqrt(1 + a^2 t^2) - 1)/a, evaluated as
// a t^2 / (sqrt(1 + a^2 t^2) + 1) which has no cancellation.
inline double position(double a, double t) {
    double u = a * t;
    if (a < kSeriesBranchA) {
        double at2 = a * t * t;
        double u2 = u * u;
        return at2 * (0.5 - u2 / 8.0 + u2 * u2 / 16.0);
    }
    return u * t / (std::sqrt(1.0 + u * u) + 1.0);
}

// dtau/dt for the probe; 1 at t=0, decreasing toward 0.
inline double redshift(double a, double t) {
    double u = a * t;
    return 1.0 / std::sqrt(1.0 + u * u);
}

// Proper time for the probe to cross the full cavity: arccosh(aL + 1)/a,
// i.e. the root of (cosh(a tau) - 1)/a = L. Evaluated through log1p to stay
// accurate near a = 0; a = 0 never crosses and returns +inf. The matching
// cavity-frame exit time is coordinate_time(a, crossing_time(a, L)).
inline double crossing_time(double a, double L) {
    if (a == 0.0) return std::numeric_limits<double>::infinity();
    double u = a * L;
    if (a < kSeriesBranchA) {
        return std::sqrt(2.0 * L / a) * (1.0 - u / 12.0 + 3.0 * u * u / 160.0);
    }
    return std::log1p(u + std::sqrt(u * (u + 2.0))) / a;
}

struct WorldlinePoint {
    double t;
    double tau;
    double x;
    double redshift;
};

inline WorldlinePoint worldline_point(double a, double t) {
    return {t, proper_time(a, t), position(a, t), rqc::redshift(a, t)};
}

struct SiAcceleration {
    double meters_per_s2;
    double multiples_of_g;
};

// Dimensionless a -> SI, with the scale set by the detector gap Omega (rad/s):
// a_SI = a * Omega * c / pi.
inline SiAcceleration si_acceleration(double a, double omega) {
    double pi = 3.14159265358979323846;
    double si = a * omega * kSpeedOfLight / pi;
    return {si, si / kStandardGravity};
}

}  // namespace rqc
