// Energy functionals, Nehari quantities, the theta projection and the
// explicit coupling-threshold formulas.
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "grid.hpp"
#include "potential.hpp"

namespace cnls {

// Constant-coefficient (frozen) parameters: kappa1 = V(z), kappa2 = W(z).
struct FrozenParams {
    double kappa1 = 1.0;
    double kappa2 = 1.0;
    double b = 0.0;
};

inline void check_frozen(const FrozenParams& p) {
    if (!(p.kappa1 > 0.0) || !(p.kappa2 > 0.0))
        throw std::invalid_argument("frozen params: kappa1, kappa2 must be positive");
    if (!(p.b >= 0.0)) throw std::invalid_argument("frozen params: b must be nonnegative");
}

// Full problem data for the singularly perturbed system.
struct ModelParams {
    PotentialSpec V;
    PotentialSpec W;
    double b = 0.0;
    double eps = 1.0;
    double alpha = 1.0;  // declared lower bound on both potentials
};

inline void check_model(const ModelParams& p) {
    if (!(p.eps > 0.0) || p.eps > 1.0)
        throw std::invalid_argument("model params: eps must lie in (0, 1]");
    if (!(p.alpha > 0.0)) throw std::invalid_argument("model params: alpha must be positive");
    if (inf_potential(p.V) < p.alpha || inf_potential(p.W) < p.alpha)
        throw std::invalid_argument("model params: alpha exceeds a potential infimum");
    if (!(p.b >= 0.0)) throw std::invalid_argument("model params: b must be nonnegative");
}

// The four quadrature blocks every functional is built from.
struct EnergyTerms {
    double ku = 0.0, kv = 0.0;  // Dirichlet energies
    double pu = 0.0, pv = 0.0;  // potential-weighted L2 norms
    double qu = 0.0, qv = 0.0;  // L4 norms to the fourth
    double qm = 0.0;            // mixed term  int u^2 v^2
};

inline EnergyTerms frozen_terms(const State& s, const FrozenParams& p) {
    EnergyTerms t;
    t.ku = dirichlet_energy(s.u);
    t.kv = dirichlet_energy(s.v);
    t.pu = p.kappa1 * integrate(s.u, 2);
    t.pv = p.kappa2 * integrate(s.v, 2);
    t.qu = integrate(s.u, 4);
    t.qv = integrate(s.v, 4);
    t.qm = mixed_sq(s.u, s.v);
    return t;
}

// Potential terms use pre-sampled node values of V and W on the state's grid.
inline EnergyTerms eps_terms(const State& s, const Field& Vg, const Field& Wg,
                             double eps) {
    require_same_grid(s.u, Vg);
    require_same_grid(s.v, Wg);
    EnergyTerms t;
    const double e2 = eps * eps;
    t.ku = e2 * dirichlet_energy(s.u);
    t.kv = e2 * dirichlet_energy(s.v);
    double pu = 0.0, pv = 0.0;
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        pu += Vg[i] * s.u[i] * s.u[i];
        pv += Wg[i] * s.v[i] * s.v[i];
    }
    const double hd = s.grid().cell_measure();
    t.pu = pu * hd;
    t.pv = pv * hd;
    t.qu = integrate(s.u, 4);
    t.qv = integrate(s.v, 4);
    t.qm = mixed_sq(s.u, s.v);
    return t;
}

inline double energy_of(const EnergyTerms& t, double b) {
    return 0.5 * (t.ku + t.pu + t.kv + t.pv) -
           0.25 * (t.qu + 2.0 * b * t.qm + t.qv);
}

inline double nehari_of(const EnergyTerms& t, double b) {
    return (t.ku + t.pu + t.kv + t.pv) - (t.qu + 2.0 * b * t.qm + t.qv);
}

inline double energy_frozen(const State& s, const FrozenParams& p) {
    check_frozen(p);
    return energy_of(frozen_terms(s, p), p.b);
}

inline double energy_eps(const State& s, const ModelParams& p, const Field& Vg,
                         const Field& Wg) {
    return energy_of(eps_terms(s, Vg, Wg, p.eps), p.b);
}

inline bool is_zero_state(const State& s) {
    for (double x : s.u.values)
        if (x != 0.0) return false;
    for (double x : s.v.values)
        if (x != 0.0) return false;
    return true;
}

inline double nehari_value(const State& s, const FrozenParams& p) {
    check_frozen(p);
    if (is_zero_state(s)) throw std::invalid_argument("nehari_value: zero state");
    return nehari_of(frozen_terms(s, p), p.b);
}

struct ThetaResult {
    double theta = 0.0;
    State projected;
};

// Unique positive scalar placing t*(u,v) on the Nehari manifold:
// theta^2 = quadratic part / quartic part.
inline ThetaResult theta_project(const State& s, const FrozenParams& p) {
    check_frozen(p);
    const EnergyTerms t = frozen_terms(s, p);
    const double quad = t.ku + t.pu + t.kv + t.pv;
    const double quart = t.qu + 2.0 * p.b * t.qm + t.qv;
    if (!(quart > 1e-300))
        throw std::invalid_argument("theta_project: vanishing quartic part");
    ThetaResult out;
    out.theta = std::sqrt(quad / quart);
    out.projected = s;
    for (auto& x : out.projected.u.values) x *= out.theta;
    for (auto& x : out.projected.v.values) x *= out.theta;
    return out;
}

// Strong-form Euler-Lagrange residual on interior nodes, zero on the boundary.
inline State residual(const State& s, const Field& Vg, const Field& Wg, double b,
                      double eps) {
    require_same_grid(s.u, Vg);
    require_same_grid(s.v, Wg);
    const double e2 = eps * eps;
    State r(s.grid());
    const Field lu = laplacian_apply(s.u);
    const Field lv = laplacian_apply(s.v);
    detail::for_each_node(s.grid(), [&](std::size_t k, const std::array<int, 3>& idx) {
        if (detail::is_boundary(s.grid(), idx)) return;
        const double u = s.u[k], v = s.v[k];
        r.u[k] = -e2 * lu[k] + Vg[k] * u - u * u * u - b * v * v * u;
        r.v[k] = -e2 * lv[k] + Wg[k] * v - v * v * v - b * u * u * v;
    });
    return r;
}

inline State residual_frozen(const State& s, const FrozenParams& p) {
    Field Vg(s.grid()), Wg(s.grid());
    for (auto& x : Vg.values) x = p.kappa1;
    for (auto& x : Wg.values) x = p.kappa2;
    return residual(s, Vg, Wg, p.b, 1.0);
}

inline double max_abs(const Field& f) {
    double m = 0.0;
    for (double x : f.values) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs(const State& s) {
    return std::max(max_abs(s.u), max_abs(s.v));
}

// --- explicit thresholds ---

// h(s) = min{ (s/32)(7 + 1/s^2)^2 - 1, (s^2 + 3)/4 }
inline double h_func(double s) {
    if (!(s > 0.0)) throw std::invalid_argument("h_func: s must be positive");
    const double t = 7.0 + 1.0 / (s * s);
    const double branch1 = (s / 32.0) * t * t - 1.0;
    const double branch2 = (s * s + 3.0) / 4.0;
    return std::min(branch1, branch2);
}

struct LocalThresholds {
    double b_z = 1.0;
    double b0 = 1.0;
    double b1 = 1.0;
};

inline LocalThresholds local_thresholds(double kappa1, double kappa2) {
    if (!(kappa1 > 0.0) || !(kappa2 > 0.0))
        throw std::invalid_argument("local_thresholds: inputs must be positive");
    LocalThresholds out;
    // evaluate on the ordered pair so the result is exactly swap-invariant
    const double hi = std::max(kappa1, kappa2), lo = std::min(kappa1, kappa2);
    const double r = hi / lo;  // >= 1
    out.b_z = std::pow(r, 0.25);
    out.b0 = out.b_z;
    out.b1 = std::max(h_func(std::sqrt(r)), h_func(1.0 / std::sqrt(r)));
    return out;
}

struct GlobalThresholds {
    double b0_inf = 1.0;
    double b1_inf = 1.0;
    double b2_inf = 1.0;
};

inline GlobalThresholds global_thresholds(double alpha, double supV, double supW) {
    if (!(alpha > 0.0) || alpha > std::min(supV, supW))
        throw std::invalid_argument("global_thresholds: need 0 < alpha <= min(supV, supW)");
    GlobalThresholds out;
    out.b0_inf = std::max(std::pow(alpha / supV, 0.25), std::pow(alpha / supW, 0.25));
    out.b1_inf = std::max(std::pow(supV / alpha, 0.25), std::pow(supW / alpha, 0.25));
    out.b2_inf = std::max(h_func(std::sqrt(supV / alpha)), h_func(std::sqrt(supW / alpha)));
    return out;
}

// Scaled Pucci-Serrin identity for the autonomous system, normalized by energy.
inline double pohozaev_residual(const State& s, const FrozenParams& p) {
    check_frozen(p);
    const EnergyTerms t = frozen_terms(s, p);
    const int d = s.grid().dim;
    const double F = 0.25 * (t.qu + 2.0 * p.b * t.qm + t.qv);
    const double val = 0.5 * (d - 2) * (t.ku + t.kv) + 0.5 * d * (t.pu + t.pv) - d * F;
    const double scale = std::abs(energy_of(t, p.b));
    return std::abs(val) / std::max(scale, 1e-300);
}

}  // namespace cnls
