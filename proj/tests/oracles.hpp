// Independent closed-form reference values used across the test suite.
//
// The 1D scalar profile is U0(x) = sqrt(2) sech(x), the unique positive even
// solution of -u'' + u = u^3.  Its integrals follow from sech-tanh calculus:
//   int U0^2   = 4
//   int U0^4   = 16/3
//   int (U0')^2 = 4/3
// so the energy (1/2)(int (U0')^2 + int U0^2) - (1/4) int U0^4 = 4/3.
// For b-coupled symmetric vector states w = U0 / sqrt(1+b) in 1D the energy is
// (8/3)/(1+b).  Under kappa-scaling u(x) = sqrt(k) U0(sqrt(k) x) the energy
// scales by k^{(4-d)/2}.
#pragma once

#include <cmath>

#include <cnls/grid.hpp>

namespace oracles {

inline double u0(double x) { return std::sqrt(2.0) / std::cosh(x); }

constexpr double u0_mass2 = 4.0;            // int U0^2
constexpr double u0_mass4 = 16.0 / 3.0;     // int U0^4
constexpr double u0_kinetic = 4.0 / 3.0;    // int (U0')^2
constexpr double u0_energy = 4.0 / 3.0;     // scalar 1D ground energy (Gamma_1)

// Eigenvalue of the central second-difference stencil on the discrete sine
// mode sin(k pi (x + L) / (2L)):  -(2 - 2 cos(k pi h / (2L))) / h^2.
inline double stencil_eigenvalue(int k, double L, double h) {
    const double t = k * M_PI * h / (2.0 * L);
    return -(2.0 - 2.0 * std::cos(t)) / (h * h);
}

inline cnls::Field sampled_u0(const cnls::Grid& g, double shift = 0.0) {
    return cnls::Field::sample(
        g, [&](const cnls::Vec3& x) { return u0(x[0] - shift); });
}

}  // namespace oracles
