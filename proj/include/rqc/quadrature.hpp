#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "errors.hpp"
#include "format.hpp"

namespace rqc::quad {

// Panel quadrature for smooth oscillatory integrands with known frequency
// content. The interval is pre-split so each panel spans at most
// 1/panels_per_period of the shortest oscillation period, then a fixed-order
// Gauss rule is applied per panel with bisection wherever two orders disagree.
//
// Cumulative antiderivatives (needed for the nested time-ordered integrals)
// are built on the same panel grid as per-panel Chebyshev interpolants,
// integrated coefficient-wise, and evaluated with Clenshaw recurrences.

using complexd = std::complex<double>;

struct Options {
    double rel_tol = 1e-11;
    double abs_tol = 1e-13;
    int panels_per_period = 8;
    int max_depth = 26;
};

struct Result {
    complexd value{0.0, 0.0};
    double error_bound = 0.0;
    std::size_t evals = 0;
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1, 1], positive half (symmetric).
inline constexpr std::array<double, 3> kG6Nodes = {
    0.2386191860831969, 0.6612093864662645, 0.9324695142031521};
inline constexpr std::array<double, 3> kG6Weights = {
    0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

inline constexpr std::array<double, 6> kG12Nodes = {
    0.1252334085114689, 0.3678314989981802, 0.5873179542866175,
    0.7699026741943047, 0.9041172563704749, 0.9815606342467192};
inline constexpr std::array<double, 6> kG12Weights = {
    0.2491470458134028, 0.2334925365383548, 0.2031674267230659,
    0.1600783285433462, 0.1069393259953184, 0.0471753363865118};

template <class F>
complexd gauss(F&& f, double a, double b, const double* nodes,
               const double* weights, int half_count, std::size_t& evals) {
    double mid = 0.5 * (a + b);
    double half = 0.5 * (b - a);
    complexd acc{0.0, 0.0};
    for (int i = 0; i < half_count; ++i) {
        acc += weights[i] * (f(mid - half * nodes[i]) + f(mid + half * nodes[i]));
    }
    evals += static_cast<std::size_t>(2 * half_count);
    return half * acc;
}

template <class F>
void refine_panel(F&& f, double a, double b, double tol, int depth,
                  const Options& opt, Result& out) {
    complexd coarse = gauss(f, a, b, kG6Nodes.data(), kG6Weights.data(), 3, out.evals);
    complexd fine = gauss(f, a, b, kG12Nodes.data(), kG12Weights.data(), 6, out.evals);
    double disagreement = std::abs(fine - coarse);
    if (disagreement <= tol || depth >= opt.max_depth) {
        if (disagreement > tol) {
            out.value += fine;
            out.error_bound += disagreement;
            throw ConvergenceError(
                "quadrature panel [" + format_double(a) + ", " + format_double(b) +
                    "] failed to converge (disagreement " + format_double(disagreement) +
                    " > " + format_double(tol) + ")",
                out.value, out.error_bound);
        }
        out.value += fine;
        out.error_bound += disagreement;
        return;
    }
    double mid = 0.5 * (a + b);
    refine_panel(f, a, mid, 0.5 * tol, depth + 1, opt, out);
    refine_panel(f, mid, b, 0.5 * tol, depth + 1, opt, out);
}

}  // namespace detail

inline int panel_count(double t0, double t1, double freq_hint, int panels_per_period) {
    double span = t1 - t0;
    if (span <= 0.0) return 0;
    double two_pi = 6.28318530717958647692;
    double periods = span * std::max(freq_hint, 0.0) / two_pi;
    return std::max(1, static_cast<int>(std::ceil(periods * panels_per_period)));
}

// Adaptive integral of a complex-valued integrand over [t0, t1].
// freq_hint is the largest angular frequency present in the integrand.
template <class F>
Result integrate(F&& f, double t0, double t1, double freq_hint, const Options& opt) {
    Result out;
    if (!(t1 > t0)) return out;
    int n = panel_count(t0, t1, freq_hint, opt.panels_per_period);
    double width = (t1 - t0) / n;

    // Rough scale for the relative-tolerance budget.
    double scale = 0.0;
    std::vector<complexd> rough(n);
    for (int i = 0; i < n; ++i) {
        rough[i] = detail::gauss(f, t0 + i * width, t0 + (i + 1) * width,
                                 detail::kG12Nodes.data(), detail::kG12Weights.data(), 6,
                                 out.evals);
        scale += std::abs(rough[i]);
    }
    double budget = std::max(opt.abs_tol, opt.rel_tol * scale);

    out.value = complexd{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        detail::refine_panel(f, t0 + i * width, t0 + (i + 1) * width, budget / n, 0,
                             opt, out);
    }
    return out;
}

// Piecewise-Chebyshev antiderivative G(t) = integral of g over [t0, t].
class Cumulative {
public:
    static constexpr int kDegree = 16;  // Chebyshev-Lobatto points per panel

    template <class G>
    Cumulative(G&& g, double t0, double t1, int panels) : t0_(t0), t1_(t1) {
        panels_ = std::max(1, panels);
        width_ = (t1 - t0) / panels_;
        coeffs_.assign(static_cast<std::size_t>(panels_) * (kDegree + 1), complexd{});
        offsets_.assign(panels_ + 1, complexd{});

        std::array<complexd, kDegree + 1> values;
        for (int p = 0; p < panels_; ++p) {
            double a = t0 + p * width_;
            double mid = a + 0.5 * width_;
            double half = 0.5 * width_;
            for (int k = 0; k <= kDegree; ++k) {
                double x = std::cos(k * kPiLocal / kDegree);
                values[k] = g(mid + half * x);
            }
            evals_ += kDegree + 1;

            // Chebyshev coefficients b_j of the interpolant.
            std::array<complexd, kDegree + 1> b;
            for (int j = 0; j <= kDegree; ++j) {
                complexd acc = 0.5 * (values[0] + (j % 2 == 0 ? values[kDegree]
                                                              : -values[kDegree]));
                for (int k = 1; k < kDegree; ++k)
                    acc += values[k] * std::cos(j * k * kPiLocal / kDegree);
                b[j] = acc * (2.0 / kDegree);
            }
            b[0] *= 0.5;
            b[kDegree] *= 0.5;

            // Antiderivative coefficients (scaled by the panel half-width).
            complexd* C = &coeffs_[static_cast<std::size_t>(p) * (kDegree + 1)];
            auto bt = [&](int j) -> complexd {
                if (j == 0) return 2.0 * b[0];
                if (j > kDegree) return complexd{};
                return b[j];
            };
            for (int j = 1; j <= kDegree; ++j)
                C[j] = (bt(j - 1) - bt(j + 1)) / (2.0 * j);
            complexd at_left{};
            for (int j = 1; j <= kDegree; ++j)
                at_left += (j % 2 == 0 ? C[j] : -C[j]);
            C[0] = -at_left;
            for (int j = 0; j <= kDegree; ++j) C[j] *= half;

            // Panel-end value continues the running offset.
            complexd at_right{};
            for (int j = 0; j <= kDegree; ++j) at_right += C[j];
            offsets_[p + 1] = offsets_[p] + at_right;
        }
    }

    complexd operator()(double t) const {
        if (t <= t0_) return complexd{};
        int p = static_cast<int>((t - t0_) / width_);
        p = std::clamp(p, 0, panels_ - 1);
        double a = t0_ + p * width_;
        double x = (t - a) / width_ * 2.0 - 1.0;
        x = std::clamp(x, -1.0, 1.0);
        const complexd* C = &coeffs_[static_cast<std::size_t>(p) * (kDegree + 1)];
        // Clenshaw
        complexd u1{}, u2{};
        for (int j = kDegree; j >= 1; --j) {
            complexd u = 2.0 * x * u1 - u2 + C[j];
            u2 = u1;
            u1 = u;
        }
        return offsets_[p] + (x * u1 - u2 + C[0]);
    }

    complexd total() const { return offsets_[panels_]; }
    int panels() const { return panels_; }
    std::size_t evals() const { return evals_; }

private:
    static constexpr double kPiLocal = 3.14159265358979323846;
    double t0_, t1_, width_ = 0.0;
    int panels_ = 0;
    std::size_t evals_ = 0;
    std::vector<complexd> coeffs_;
    std::vector<complexd> offsets_;
};

}  // namespace rqc::quad
