// Ground-state machinery: projected gradient flow, Newton-Krylov refinement,
// the cached scalar profile, and least-energy solves of the frozen system.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "linalg.hpp"
#include "model.hpp"

namespace cnls {

// Location of the on-disk solve cache (scalar profiles, reduced-sigma knots).
inline std::filesystem::path cache_dir() {
    if (const char* env = std::getenv("CNLS_CACHE_DIR")) return env;
    return ".cnls-cache";
}

struct SolverOptions {
    double dt0 = 0.05;            // initial flow step
    int max_flow_steps = 2000;
    double flow_stop_rel = 1e-10; // stop when energy decrease per step < rel*|E|
    double newton_tol = 1e-9;     // absolute max-norm residual target
    int max_newton_steps = 80;
    double inner_rtol = 1e-4;
    int inner_maxit = 1500;
    bool symmetrize = false;      // average over axis reflections (autonomous solves)
};

// Discrete coefficients of one elliptic solve.
struct ProblemData {
    Field Vg;
    Field Wg;
    double b = 0.0;
    double eps = 1.0;
};

inline ProblemData frozen_problem(const FrozenParams& p, const Grid& g) {
    ProblemData d;
    d.Vg = Field(g);
    d.Wg = Field(g);
    for (auto& x : d.Vg.values) x = p.kappa1;
    for (auto& x : d.Wg.values) x = p.kappa2;
    d.b = p.b;
    d.eps = 1.0;
    return d;
}

namespace detail {

inline void reflect_average(Field& f) {
    const Grid& g = f.grid;
    const auto st = strides(g);
    const int n = g.points_per_axis;
    for (int a = 0; a < g.dim; ++a) {
        for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
            const int j = n - 1 - idx[a];
            if (idx[a] >= j) return;
            const std::size_t k2 = k + st[a] * static_cast<std::size_t>(j - idx[a]);
            const double avg = 0.5 * (f.values[k] + f.values[k2]);
            f.values[k] = avg;
            f.values[k2] = avg;
        });
    }
}

inline void zero_boundary(Field& f) {
    for_each_node(f.grid, [&](std::size_t k, const std::array<int, 3>& idx) {
        if (is_boundary(f.grid, idx)) f.values[k] = 0.0;
    });
}

inline void pack(const State& s, Vec& x) {
    const std::size_t n = s.u.size();
    x.resize(2 * n);
    std::copy(s.u.values.begin(), s.u.values.end(), x.begin());
    std::copy(s.v.values.begin(), s.v.values.end(), x.begin() + n);
}

inline void unpack(const Vec& x, State& s) {
    const std::size_t n = s.u.size();
    std::copy(x.begin(), x.begin() + n, s.u.values.begin());
    std::copy(x.begin() + n, x.end(), s.v.values.begin());
}

// theta projection onto the Nehari manifold of the (possibly nonautonomous)
// functional; no-op target for identically zero states is an error upstream.
inline double theta_general(State& s, const ProblemData& d) {
    const EnergyTerms t = eps_terms(s, d.Vg, d.Wg, d.eps);
    const double quad = t.ku + t.pu + t.kv + t.pv;
    const double quart = t.qu + 2.0 * d.b * t.qm + t.qv;
    if (!(quart > 1e-300)) throw std::runtime_error("flow: quartic part vanished");
    const double th = std::sqrt(quad / quart);
    for (auto& x : s.u.values) x *= th;
    for (auto& x : s.v.values) x *= th;
    return th;
}

}  // namespace detail

struct FlowResult {
    double energy = 0.0;
    int steps = 0;
};

// Nehari-projected descent: one linearly implicit gradient step per component
// (the stiff linear part treated implicitly, solved by CG), negative parts
// clipped, then theta re-normalization; the step is halved whenever the
// projected energy increases.
inline FlowResult nehari_flow(State& s, const ProblemData& d, const SolverOptions& o) {
    const Grid& g = s.grid();
    const double e2 = d.eps * d.eps;
    detail::theta_general(s, d);
    if (o.symmetrize) {
        detail::reflect_average(s.u);
        detail::reflect_average(s.v);
    }
    double E = energy_of(eps_terms(s, d.Vg, d.Wg, d.eps), d.b);
    double dt = o.dt0;
    FlowResult res;
    Vec rhs, sol;
    const std::size_t N = s.u.size();
    for (int step = 0; step < o.max_flow_steps; ++step) {
        State next = s;
        for (int comp = 0; comp < 2; ++comp) {
            Field& f = comp == 0 ? next.u : next.v;
            const Field& self = comp == 0 ? s.u : s.v;
            const Field& other = comp == 0 ? s.v : s.u;
            const Field& pot = comp == 0 ? d.Vg : d.Wg;
            rhs.resize(N);
            for (std::size_t i = 0; i < N; ++i) {
                const double a = self[i], c = other[i];
                rhs[i] = a / dt + a * a * a + d.b * c * c * a;
            }
            // zero the boundary rows of the right-hand side
            detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
                if (detail::is_boundary(g, idx)) rhs[k] = 0.0;
            });
            Field tmp(g), ltmp(g);
            auto A = [&](const Vec& p, Vec& out) {
                std::copy(p.begin(), p.end(), tmp.values.begin());
                detail::zero_boundary(tmp);
                ltmp = laplacian_apply(tmp);
                out.resize(N);
                for (std::size_t i = 0; i < N; ++i)
                    out[i] = -e2 * ltmp.values[i] + pot[i] * tmp.values[i] +
                             tmp.values[i] / dt;
                detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
                    if (detail::is_boundary(g, idx)) out[k] = 0.0;
                });
            };
            cg_solve(A, rhs, sol, 1e-8, 400);
            std::copy(sol.begin(), sol.end(), f.values.begin());
            detail::zero_boundary(f);
            for (auto& x : f.values) x = std::max(x, 0.0);
        }
        if (o.symmetrize) {
            detail::reflect_average(next.u);
            detail::reflect_average(next.v);
        }
        bool nontrivial = false;
        for (double x : next.u.values)
            if (x != 0.0) { nontrivial = true; break; }
        if (!nontrivial)
            for (double x : next.v.values)
                if (x != 0.0) { nontrivial = true; break; }
        if (!nontrivial) throw std::runtime_error("flow: state collapsed to zero");
        detail::theta_general(next, d);
        const double En = energy_of(eps_terms(next, d.Vg, d.Wg, d.eps), d.b);
        res.steps = step + 1;
        if (En > E + 1e-12 * std::abs(E)) {
            dt *= 0.5;
            if (dt < 1e-4) break;
            continue;
        }
        const double dE = E - En;
        s = std::move(next);
        E = En;
        if (dE < o.flow_stop_rel * std::abs(E)) break;
    }
    res.energy = E;
    return res;
}

struct NewtonResult {
    bool converged = false;
    int steps = 0;
    double residual_max = 0.0;
};

// Newton on the Euler-Lagrange system with MINRES inner solves.  The (symmetric,
// possibly indefinite) linearization carries an adaptive Levenberg-Marquardt
// shift that also tames the near-singular translation mode on large boxes.
inline NewtonResult newton_refine(State& s, const ProblemData& d, const SolverOptions& o) {
    const Grid& g = s.grid();
    const std::size_t N = s.u.size();
    double kscale = 0.0;
    for (std::size_t i = 0; i < N; ++i) kscale += d.Vg[i] + d.Wg[i];
    kscale /= static_cast<double>(2 * N);

    auto resid_vec = [&](const State& st, Vec& out) {
        const State r = residual(st, d.Vg, d.Wg, d.b, d.eps);
        detail::pack(r, out);
    };

    Vec r, dx, xt;
    resid_vec(s, r);
    double mu = 1e-2;
    NewtonResult res;
    Field pu(g), pv(g), lu(g), lv(g);
    for (int it = 0; it < o.max_newton_steps; ++it) {
        double rmax = 0.0;
        for (double x : r) rmax = std::max(rmax, std::abs(x));
        res.steps = it;
        res.residual_max = rmax;
        if (rmax <= o.newton_tol) {
            res.converged = true;
            return res;
        }
        const double rn2 = vnorm(r);
        bool accepted = false;
        for (int trial = 0; trial < 8 && !accepted; ++trial) {
            const double shift = mu * kscale;
            auto J = [&](const Vec& p, Vec& out) {
                std::copy(p.begin(), p.begin() + N, pu.values.begin());
                std::copy(p.begin() + N, p.end(), pv.values.begin());
                detail::zero_boundary(pu);
                detail::zero_boundary(pv);
                lu = laplacian_apply(pu);
                lv = laplacian_apply(pv);
                out.resize(2 * N);
                const double e2 = d.eps * d.eps;
                for (std::size_t i = 0; i < N; ++i) {
                    const double u = s.u[i], v = s.v[i];
                    const double cross = 2.0 * d.b * u * v;
                    out[i] = -e2 * lu.values[i] +
                             (d.Vg[i] - 3.0 * u * u - d.b * v * v + shift) * pu.values[i] -
                             cross * pv.values[i];
                    out[N + i] = -e2 * lv.values[i] +
                                 (d.Wg[i] - 3.0 * v * v - d.b * u * u + shift) * pv.values[i] -
                                 cross * pu.values[i];
                }
                detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
                    if (detail::is_boundary(g, idx)) {
                        out[k] = 0.0;
                        out[N + k] = 0.0;
                    }
                });
            };
            Vec nr(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) nr[i] = -r[i];
            minres_solve(J, nr, dx, o.inner_rtol, o.inner_maxit);
            // backtracking on the residual 2-norm
            double lam = 1.0;
            for (int ls = 0; ls < 8; ++ls) {
                State st = s;
                for (std::size_t i = 0; i < N; ++i) {
                    st.u.values[i] += lam * dx[i];
                    st.v.values[i] += lam * dx[N + i];
                }
                detail::zero_boundary(st.u);
                detail::zero_boundary(st.v);
                if (o.symmetrize) {
                    detail::reflect_average(st.u);
                    detail::reflect_average(st.v);
                }
                resid_vec(st, xt);
                if (vnorm(xt) <= (1.0 - 1e-4 * lam) * rn2) {
                    s = std::move(st);
                    r = xt;
                    accepted = true;
                    mu = std::max(lam == 1.0 ? mu / 10.0 : mu / 2.0, 1e-12);
                    break;
                }
                lam *= 0.5;
            }
            if (!accepted) {
                mu *= 10.0;
                if (mu > 1e4) break;
            }
        }
        if (!accepted) return res;
    }
    double rmax = 0.0;
    for (double x : r) rmax = std::max(rmax, std::abs(x));
    res.residual_max = rmax;
    res.converged = rmax <= o.newton_tol;
    res.steps = o.max_newton_steps;
    return res;
}

// --- scalar profile U0 (kappa = 1) with memory + disk cache ---

namespace detail {

inline std::string u0_cache_key(const Grid& g) {
    std::ostringstream ss;
    ss.precision(17);
    ss << "u0_d" << g.dim << "_n" << g.points_per_axis << "_L" << g.half_width;
    return ss.str();
}

inline Field solve_u0(const Grid& g) {
    Field seed = Field::sample(g, [&](const Vec3& x) { return std::exp(-norm(x)); });
    State s(seed, Field(g));
    FrozenParams unit{1.0, 1.0, 0.0};
    ProblemData d = frozen_problem(unit, g);
    SolverOptions o;
    o.symmetrize = true;
    o.newton_tol = 1e-9;
    nehari_flow(s, d, o);
    NewtonResult nr = newton_refine(s, d, o);
    if (!nr.converged)
        throw std::runtime_error("scalar profile solve did not converge (residual " +
                                 std::to_string(nr.residual_max) + ")");
    return s.u;
}

}  // namespace detail

// Ground state of -Delta u + u = u^3 on g, positive, centered at the origin.
inline const Field& u0_profile(const Grid& g) {
    static std::map<std::string, Field> cache;
    static std::mutex m;
    const std::string key = detail::u0_cache_key(g);
    std::lock_guard<std::mutex> lock(m);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const std::filesystem::path file = cache_dir() / (key + ".field");
    if (std::filesystem::exists(file)) {
        Field f = load_field(file.string());
        if (f.grid == g) return cache.emplace(key, std::move(f)).first->second;
    }
    Field f = detail::solve_u0(g);
    std::error_code ec;
    std::filesystem::create_directories(cache_dir(), ec);
    if (!ec) {
        const std::filesystem::path tmp = file.string() + ".tmp";
        save_field(f, tmp.string());
        std::filesystem::rename(tmp, file, ec);
    }
    return cache.emplace(key, std::move(f)).first->second;
}

// Ground state of -Delta u + kappa u = u^3 on g via the exact discrete scaling
// u(x_i) = sqrt(kappa) U0(sqrt(kappa) x_i): U0 is solved on the grid with
// half-width sqrt(kappa) L, whose nodes are exactly the scaled nodes.
inline Field scalar_ground_state(double kappa, const Grid& g) {
    if (!(kappa > 0.0)) throw std::invalid_argument("scalar_ground_state: kappa must be positive");
    const double rk = std::sqrt(kappa);
    const Grid gs = make_grid(g.dim, rk * g.half_width, g.points_per_axis);
    const Field& u0 = u0_profile(gs);
    Field out(g);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = rk * u0[i];
    return out;
}

// --- frozen-system ground state over a seed basin ---

enum class Classification { ScalarU, ScalarV, Vector };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::ScalarU: return "ScalarU";
        case Classification::ScalarV: return "ScalarV";
        case Classification::Vector: return "Vector";
    }
    return "?";
}

inline Classification classify_state(const State& s, double tol = 1e-4) {
    const double su = max_abs(s.u), sv = max_abs(s.v);
    const double m = std::max(su, sv);
    if (m == 0.0) throw std::invalid_argument("classify_state: zero state");
    if (sv <= tol * m) return Classification::ScalarU;
    if (su <= tol * m) return Classification::ScalarV;
    return Classification::Vector;
}

struct SeedSpec {
    enum class Kind { ScalarUSeed, ScalarVSeed, SymmetricVector, AsymmetricVector };
    Kind kind = Kind::ScalarUSeed;
    double ratio = 2.0;      // AsymmetricVector component ratio
    double amplitude = 1.0;

    std::string id() const {
        switch (kind) {
            case Kind::ScalarUSeed: return "scalar-u";
            case Kind::ScalarVSeed: return "scalar-v";
            case Kind::SymmetricVector: return "symmetric-vector";
            case Kind::AsymmetricVector: return "asymmetric-vector";
        }
        return "?";
    }
};

inline std::vector<SeedSpec> default_seeds() {
    using K = SeedSpec::Kind;
    return {SeedSpec{K::ScalarUSeed, 2.0, 1.0}, SeedSpec{K::ScalarVSeed, 2.0, 1.0},
            SeedSpec{K::SymmetricVector, 2.0, 1.0}, SeedSpec{K::AsymmetricVector, 2.0, 1.0}};
}

struct GroundState {
    State state;
    double energy = 0.0;
    double nehari_residual = 0.0;
    double el_residual = 0.0;
    Classification classification = Classification::ScalarU;
    double sup_u = 0.0;
    double sup_v = 0.0;
    std::string seed_id;
};

inline State build_seed(const SeedSpec& seed, const FrozenParams& p, const Grid& g) {
    using K = SeedSpec::Kind;
    State s(g);
    switch (seed.kind) {
        case K::ScalarUSeed:
            s.u = scalar_ground_state(p.kappa1, g);
            break;
        case K::ScalarVSeed:
            s.v = scalar_ground_state(p.kappa2, g);
            break;
        case K::SymmetricVector: {
            const Field f = scalar_ground_state(0.5 * (p.kappa1 + p.kappa2), g);
            s.u = f;
            s.v = f;
            break;
        }
        case K::AsymmetricVector: {
            const Field f = scalar_ground_state(0.5 * (p.kappa1 + p.kappa2), g);
            s.u = f;
            s.v = f;
            for (auto& x : s.v.values) x /= seed.ratio;
            break;
        }
    }
    if (seed.amplitude != 1.0) {
        for (auto& x : s.u.values) x *= seed.amplitude;
        for (auto& x : s.v.values) x *= seed.amplitude;
    }
    return s;
}

// Least-energy candidate over the seed basins: projected flow then Newton
// refinement per seed, minimum energy among converged candidates.
inline GroundState system_ground_state(const FrozenParams& p, const Grid& g,
                                       const std::vector<SeedSpec>& seeds = default_seeds()) {
    check_frozen(p);
    if (seeds.empty()) throw std::invalid_argument("system_ground_state: empty seed list");
    ProblemData d = frozen_problem(p, g);
    SolverOptions o;
    o.symmetrize = true;
    o.newton_tol = 1e-9 * (p.kappa1 + p.kappa2);

    bool have = false;
    GroundState best;
    std::string failures;
    for (const SeedSpec& seed : seeds) {
        State s = build_seed(seed, p, g);
        try {
            nehari_flow(s, d, o);
        } catch (const std::runtime_error& e) {
            failures += seed.id() + ": " + e.what() + "; ";
            continue;
        }
        NewtonResult nr = newton_refine(s, d, o);
        if (!nr.converged) {
            failures += seed.id() + ": newton stalled; ";
            continue;
        }
        const double peak = max_abs(s);
        if (peak < 1e-8 * std::sqrt(std::max(p.kappa1, p.kappa2)))
            throw std::runtime_error("system_ground_state: seed " + seed.id() +
                                     " converged to the trivial state");
        double mn = 0.0;
        for (double x : s.u.values) mn = std::min(mn, x);
        for (double x : s.v.values) mn = std::min(mn, x);
        // values below the solver's own residual resolution are numerically zero
        if (mn < -std::max(1e-10 * std::max(1.0, peak), 10.0 * o.newton_tol))
            throw std::runtime_error("system_ground_state: negative component beyond tolerance");
        for (auto& x : s.u.values) x = std::max(x, 0.0);
        for (auto& x : s.v.values) x = std::max(x, 0.0);

        GroundState gs;
        gs.energy = energy_frozen(s, p);
        gs.nehari_residual = std::abs(nehari_value(s, p));
        gs.el_residual = nr.residual_max;
        gs.classification = classify_state(s);
        gs.sup_u = max_abs(s.u);
        gs.sup_v = max_abs(s.v);
        gs.seed_id = seed.id();
        gs.state = std::move(s);
        if (!have || gs.energy < best.energy) {
            best = std::move(gs);
            have = true;
        }
    }
    if (!have)
        throw std::runtime_error("system_ground_state: all seeds failed (" + failures + ")");
    return best;
}

}  // namespace cnls
