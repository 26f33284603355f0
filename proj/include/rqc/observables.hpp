#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "config.hpp"
#include "errors.hpp"
#include "qubit.hpp"

namespace rqc {

// Wrap to (-pi, pi].
inline double wrap_angle(double x) {
    double y = std::remainder(x, 2.0 * kPi);
    if (y <= -kPi) y += 2.0 * kPi;
    return y;
}

// Bloch decomposition rho = (I + r.sigma)/2 under the fixed basis
// (|e> first, north pole = |e>). theta comes from the normalized direction,
// so mixing cannot masquerade as polar rotation; phi is the azimuth.
// Angles are absent when they are genuinely undefined: theta for r ~ 0,
// phi additionally on the poles.
struct BlochRecord {
    Eigen::Vector3d r{0.0, 0.0, 0.0};
    std::optional<double> theta;
    std::optional<double> phi;
    double purity = 0.5;
    double min_eigenvalue = 0.5;
};

inline constexpr double kAngleEps = 1e-12;

inline BlochRecord bloch(const QubitDensity& rho) {
    BlochRecord out;
    out.r.x() = 2.0 * rho.m(0, 1).real();
    out.r.y() = -2.0 * rho.m(0, 1).imag();
    out.r.z() = rho.m(0, 0).real() - rho.m(1, 1).real();
    double len = out.r.norm();
    if (len >= kAngleEps) {
        out.theta = std::acos(std::clamp(out.r.z() / len, -1.0, 1.0));
        if (std::hypot(out.r.x(), out.r.y()) >= kAngleEps)
            out.phi = std::atan2(out.r.y(), out.r.x());
    }
    out.purity = (rho.m * rho.m).trace().real();
    out.min_eigenvalue = rho.min_eigenvalue();
    return out;
}

inline double purity(const QubitDensity& rho) {
    return (rho.m * rho.m).trace().real();
}

struct DeltaAngles {
    double d_theta;
    double d_phi;
};

inline DeltaAngles delta_angles(const QubitDensity& initial, const QubitDensity& final_state) {
    BlochRecord bi = bloch(initial);
    BlochRecord bf = bloch(final_state);
    if (!bi.theta || !bf.theta)
        throw ValidationError("delta_angles: polar angle undefined for a zero Bloch vector");
    if (!bi.phi || !bf.phi)
        throw ValidationError("delta_angles: azimuth undefined on a Bloch pole");
    return {*bf.theta - *bi.theta, wrap_angle(*bf.phi - *bi.phi)};
}

}  // namespace rqc
