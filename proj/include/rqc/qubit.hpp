#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "errors.hpp"

namespace rqc {

using complexd = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;

// Basis convention used everywhere: index 0 = |e> (excited), index 1 = |g>.
// sigma+ = |e><g| raises, the Bloch north pole is |e>.

inline Matrix2c sigma_plus() {
    Matrix2c m = Matrix2c::Zero();
    m(0, 1) = 1.0;
    return m;
}

inline Matrix2c sigma_minus() {
    Matrix2c m = Matrix2c::Zero();
    m(1, 0) = 1.0;
    return m;
}

inline Matrix2c sigma_x() {
    Matrix2c m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

inline Matrix2c sigma_y() {
    Matrix2c m;
    m << complexd(0, 0), complexd(0, -1), complexd(0, 1), complexd(0, 0);
    return m;
}

inline Matrix2c sigma_z() {
    Matrix2c m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

// 2x2 density matrix with Hermiticity/trace checks at the point of use.
struct QubitDensity {
    Matrix2c m = Matrix2c::Identity() * 0.5;

    double hermiticity_defect() const {
        return (m - m.adjoint().eval()).cwiseAbs().maxCoeff();
    }

    double trace_defect() const { return std::abs(m.trace() - complexd(1.0)); }

    double min_eigenvalue() const {
        Eigen::SelfAdjointEigenSolver<Matrix2c> es(0.5 * (m + m.adjoint().eval()));
        return es.eigenvalues().minCoeff();
    }

    void check_state(double herm_tol = 1e-12, double trace_tol = 1e-12,
                     double eig_floor = -1e-10) const {
        if (hermiticity_defect() > herm_tol)
            throw ValidationError("density matrix is not Hermitian");
        if (trace_defect() > trace_tol)
            throw ValidationError("density matrix trace differs from 1");
        if (min_eigenvalue() < eig_floor)
            throw ValidationError("density matrix has a negative eigenvalue");
    }
};

inline QubitDensity density_from_amplitudes(const Eigen::Vector2cd& psi) {
    QubitDensity rho;
    rho.m = psi * psi.adjoint();
    return rho;
}

// Pure target state from Bloch angles, north pole = |e>; amplitudes in the
// (e, g) basis order.
inline Eigen::Vector2cd target_amplitudes(double theta, double phi) {
    return {complexd(std::cos(theta / 2.0), 0.0),
            std::polar(std::sin(theta / 2.0), phi)};
}

inline QubitDensity target_state(double theta, double phi) {
    return density_from_amplitudes(target_amplitudes(theta, phi));
}

// Probe preparation |psi> = (p|g> + q|e>)/norm with q = sqrt(1 - p^2)
// (principal branch). The explicit normalization keeps complex p valid.
inline Eigen::Vector2cd probe_amplitudes(complexd p) {
    complexd q = std::sqrt(complexd(1.0, 0.0) - p * p);
    double norm = std::sqrt(std::norm(p) + std::norm(q));
    return {q / norm, p / norm};  // (e, g) order
}

inline QubitDensity probe_state(complexd p) {
    return density_from_amplitudes(probe_amplitudes(p));
}

inline double trace_distance(const Matrix2c& a, const Matrix2c& b) {
    Matrix2c d = a - b;
    d = 0.5 * (d + d.adjoint().eval());
    Eigen::SelfAdjointEigenSolver<Matrix2c> es(d);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace rqc
