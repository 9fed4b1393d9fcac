// Semiclassical continuation: warm-started solves of the singularly perturbed
// system over a decreasing epsilon schedule, plus all concentration
// diagnostics (unique maximum, decay fit, energy ratio, balance identity,
// profile convergence, scalar/vector dichotomy).
#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "potential.hpp"
#include "sigma.hpp"
#include "solver.hpp"

namespace cnls {

struct EpsSchedule {
    std::vector<double> values;
};

inline void check_schedule(const EpsSchedule& s) {
    if (s.values.empty()) throw std::invalid_argument("eps schedule: empty");
    if (s.values.front() > 1.0)
        throw std::invalid_argument("eps schedule: first value must be <= 1");
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (!(s.values[i] > 0.0))
            throw std::invalid_argument("eps schedule: values must be positive");
        if (i && !(s.values[i] < s.values[i - 1]))
            throw std::invalid_argument("eps schedule: values must be strictly decreasing");
    }
}

inline EpsSchedule geometric_schedule(double start = 0.5, double ratio = 0.8,
                                      double floor = 0.05) {
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw std::invalid_argument("eps schedule: ratio must lie in (0,1)");
    EpsSchedule s;
    for (double e = start; e >= floor * (1.0 - 1e-12); e *= ratio) s.values.push_back(e);
    check_schedule(s);
    return s;
}

// Cutoff profile transplant u*(x) = eta(x) phi_z((x - z)/eps): smoothstep eta
// equal to 1 on |x-z| <= r_cut/2 and 0 beyond r_cut.
inline State initial_guess(const Vec3& z, double eps, const GroundState& limit_gs,
                           double r_cut, const Grid& g) {
    if (!(eps > 0.0)) throw std::invalid_argument("initial_guess: eps must be positive");
    for (int a = 0; a < g.dim; ++a)
        if (r_cut >= g.half_width - std::abs(z[a]))
            throw std::invalid_argument("initial_guess: cutoff radius reaches the box boundary");
    auto eta = [&](double r) {
        const double s = std::clamp((r - 0.5 * r_cut) / (0.5 * r_cut), 0.0, 1.0);
        return 1.0 - (3.0 * s * s - 2.0 * s * s * s);
    };
    State out(g);
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        if (detail::is_boundary(g, idx)) return;
        Vec3 x{0.0, 0.0, 0.0};
        for (int a = 0; a < g.dim; ++a) x[a] = g.coord(idx[a]);
        const Vec3 dx = x - z;
        const double r = norm(dx);
        if (r >= r_cut) return;
        const Vec3 y = (1.0 / eps) * dx;
        const double cut = eta(r);
        out.u[k] = cut * interpolate(limit_gs.state.u, y);
        out.v[k] = cut * interpolate(limit_gs.state.v, y);
    });
    return out;
}

// Newton-Krylov solve of the full problem from a warm start; optional
// Nehari-projected flow stage first (used along continuation schedules, where
// the pure Newton basin can be left behind as eps shrinks).
inline State solve_seps(const ModelParams& p, const Grid& g, State init,
                        int flow_steps = 0) {
    check_model(p);
    if (is_zero_state(init)) throw std::invalid_argument("solve_seps: zero initial state");
    ProblemData d;
    d.Vg = sample_potential(p.V, g);
    d.Wg = sample_potential(p.W, g);
    d.b = p.b;
    d.eps = p.eps;
    SolverOptions o;
    o.newton_tol = 1e-9 * p.alpha;
    if (flow_steps > 0) {
        SolverOptions fo = o;
        fo.max_flow_steps = flow_steps;
        nehari_flow(init, d, fo);
    }
    NewtonResult nr = newton_refine(init, d, o);
    if (!nr.converged)
        throw std::runtime_error("solve_seps: newton stalled at residual " +
                                 format_double(nr.residual_max));
    const double peak = max_abs(init);
    if (peak < 1e-8 * std::sqrt(p.alpha))
        throw std::runtime_error("solve_seps: collapsed to the trivial state");
    double mn = 0.0;
    for (double x : init.u.values) mn = std::min(mn, x);
    for (double x : init.v.values) mn = std::min(mn, x);
    // values below the solver's own residual resolution are numerically zero
    if (mn < -std::max(1e-10 * std::max(1.0, peak), 10.0 * o.newton_tol))
        throw std::runtime_error("solve_seps: negative overshoot beyond tolerance");
    for (auto& x : init.u.values) x = std::max(x, 0.0);
    for (auto& x : init.v.values) x = std::max(x, 0.0);
    return init;
}

struct DecayFit {
    double mu1 = 0.0;
    double mu2 = 0.0;
};

// Least-squares line fit of log(u+v) against |x - x_center| / eps over the
// annulus inner_r < |x - x_center| < outer_r.
inline DecayFit decay_fit(const State& s, const Vec3& x_center, double eps,
                          double inner_r, double outer_r) {
    if (!(inner_r < outer_r)) throw std::invalid_argument("decay_fit: need inner_r < outer_r");
    const Grid& g = s.grid();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t count = 0;
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        Vec3 x{0.0, 0.0, 0.0};
        for (int a = 0; a < g.dim; ++a) x[a] = g.coord(idx[a]);
        const double r = norm(x - x_center);
        if (r <= inner_r || r >= outer_r) return;
        const double w = s.u[k] + s.v[k];
        if (!(w > 1e-12)) return;
        const double rho = r / eps;
        const double lw = std::log(w);
        sx += rho;
        sy += lw;
        sxx += rho * rho;
        sxy += rho * lw;
        ++count;
    });
    if (count < 10) throw std::runtime_error("decay_fit: fewer than 10 usable annulus nodes");
    const double nr = static_cast<double>(count);
    const double slope = (nr * sxy - sx * sy) / (nr * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / nr;
    DecayFit f;
    f.mu2 = -slope;
    f.mu1 = std::exp(intercept);
    return f;
}

// Necessary-condition residual: component j is the integral of
// dV_j(x) u^2 + dW_j(x) v^2 (evaluated in the original frame, which equals the
// rescaled-frame integral up to the common eps^d factor), normalized by
// (||u||^2 + ||v||^2) times a gradient scale at z with a region-wide floor.
inline Vec3 balance_residual(const State& s, const ModelParams& p, const Vec3& z,
                             double /*eps*/) {
    const Grid& g = s.grid();
    Vec3 acc{0.0, 0.0, 0.0};
    double mass = 0.0;
    double grad_floor = 0.0;
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        Vec3 x{0.0, 0.0, 0.0};
        for (int a = 0; a < g.dim; ++a) x[a] = g.coord(idx[a]);
        const Vec3 gV = grad_potential(p.V, x);
        const Vec3 gW = grad_potential(p.W, x);
        const double u2 = s.u[k] * s.u[k], v2 = s.v[k] * s.v[k];
        for (int a = 0; a < g.dim; ++a) acc[a] += gV[a] * u2 + gW[a] * v2;
        mass += u2 + v2;
        grad_floor = std::max(grad_floor, std::max(norm(gV), norm(gW)));
    });
    const double gz = std::max(norm(grad_potential(p.V, z)), norm(grad_potential(p.W, z)));
    const double scale = std::max(gz, grad_floor);
    if (!(mass > 0.0) || !(scale > 0.0)) return {0.0, 0.0, 0.0};
    return (1.0 / (mass * scale)) * acc;
}

struct ConcentrationRow {
    double eps = 0.0;
    Vec3 x_eps{0.0, 0.0, 0.0};
    double gap = 0.0;
    double u_at_max = 0.0;
    double v_at_max = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double energy_ratio = 0.0;
    Vec3 balance{0.0, 0.0, 0.0};
    double balance_norm = 0.0;
    double profile_distance = 0.0;
    std::string verdict;  // per-eps classification of the state at the maximum
};

struct ConcentrationReport {
    Vec3 z_ref{0.0, 0.0, 0.0};
    Vec3 z_min{0.0, 0.0, 0.0};  // minimizer of the ground energy over the box
    double sigma_ref = 0.0;
    std::vector<ConcentrationRow> rows;
    std::string final_verdict = "Indeterminate";  // ScalarLimit | VectorLimit | Indeterminate
    bool completed = false;
    std::string error;
};

struct ContinuationOptions {
    double r_cut = 0.0;          // 0: auto (45% of the distance to the boundary)
    int flow_steps_first = 400;
    int flow_steps_later = 120;
    double inner_r = 0.0;        // 0: auto max(2 eps, 4 h)
    double outer_r = 0.0;        // 0: auto 80% of distance from x_eps to the boundary
    Grid profile_grid;           // frozen-frame reference; 0 nodes: per-dimension default
};

inline Grid default_profile_grid(int dim) {
    if (dim == 3) return make_grid(3, 8.0, 96);
    return reference_grid(dim);
}

// Minimizer of the reduced ground energy over the box (coarse scan plus one
// quadratic refinement per axis); for b = 0 this is the minimum of min(V, W).
inline Vec3 sigma_minimizer(const PotentialSpec& V, const PotentialSpec& W, double b,
                            int dim, double L, SigmaEngine* eng) {
    const int res = 41;
    auto value = [&](const Vec3& z) {
        const double k1 = eval_potential(V, z), k2 = eval_potential(W, z);
        if (b == 0.0 || eng == nullptr) return std::min(k1, k2);
        return eng->sigma_reduced({k1, k2, b});
    };
    Vec3 best{0.0, 0.0, 0.0};
    double bval = 1e300;
    std::array<int, 3> idx{0, 0, 0};
    std::size_t total = 1;
    for (int a = 0; a < dim; ++a) total *= res;
    const double step = 2.0 * L / (res - 1);
    for (std::size_t k = 0; k < total; ++k) {
        Vec3 z{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) z[a] = -L + step * idx[a];
        const double v = value(z);
        if (v < bval) {
            bval = v;
            best = z;
        }
        for (int a = dim - 1; a >= 0; --a) {
            if (++idx[a] < res) break;
            idx[a] = 0;
        }
    }
    for (int a = 0; a < dim; ++a) {  // one parabolic refinement per axis
        Vec3 zp = best, zm = best;
        zp[a] += step;
        zm[a] -= step;
        const double fm = value(zm), f0 = value(best), fp = value(zp);
        const double den = fm - 2.0 * f0 + fp;
        if (den > 0.0) {
            double off = 0.5 * (fm - fp) / den;
            best[a] += std::clamp(off, -1.0, 1.0) * step;
        }
    }
    return best;
}

inline double profile_distance(const State& s, const Vec3& x_eps, double eps,
                               const GroundState& ref) {
    const Grid& rg = ref.state.grid();
    double dist = 0.0;
    detail::for_each_node(rg, [&](std::size_t k, const std::array<int, 3>& idx) {
        Vec3 y{0.0, 0.0, 0.0};
        for (int a = 0; a < rg.dim; ++a) y[a] = rg.coord(idx[a]);
        const Vec3 x = x_eps + eps * y;
        dist = std::max(dist, std::abs(interpolate(s.u, x) - ref.state.u[k]));
        dist = std::max(dist, std::abs(interpolate(s.v, x) - ref.state.v[k]));
    });
    return dist;
}

inline ConcentrationReport continuation(const ModelParams& base, const Vec3& z_ref,
                                        const EpsSchedule& sched, const Grid& g,
                                        ContinuationOptions opt = {},
                                        SigmaEngine* eng = nullptr) {
    check_schedule(sched);
    {
        ModelParams pv = base;
        pv.eps = sched.values.front();
        check_model(pv);
    }
    const double supVW = std::max(sup_potential(base.V, g.dim, g.half_width),
                                  sup_potential(base.W, g.dim, g.half_width));
    const double floor = 4.0 * g.spacing * std::sqrt(supVW);
    if (sched.values.back() < floor)
        throw std::invalid_argument(
            "continuation: smallest eps " + format_double(sched.values.back()) +
            " is below the resolution floor 4 h sqrt(sup potential) = " + format_double(floor));

    ConcentrationReport rep;
    rep.z_ref = z_ref;
    if (opt.profile_grid.points_per_axis == 0) opt.profile_grid = default_profile_grid(g.dim);
    rep.z_min = sigma_minimizer(base.V, base.W, base.b, g.dim, g.half_width, eng);

    // frozen references: energy scale at z_ref, limit profile at the minimizer
    const FrozenParams ref_params{eval_potential(base.V, z_ref),
                                  eval_potential(base.W, z_ref), base.b};
    GroundState limit_ref = system_ground_state(ref_params, opt.profile_grid);
    rep.sigma_ref = limit_ref.energy;
    GroundState limit_min = limit_ref;
    if (norm(rep.z_min - z_ref) > 1e-12) {
        limit_min = system_ground_state({eval_potential(base.V, rep.z_min),
                                         eval_potential(base.W, rep.z_min), base.b},
                                        opt.profile_grid);
    }

    double r_cut = opt.r_cut;
    if (r_cut == 0.0) {
        double dist = 1e300;
        for (int a = 0; a < g.dim; ++a)
            dist = std::min(dist, g.half_width - std::abs(z_ref[a]));
        r_cut = 0.9 * dist;
    }
    State s = initial_guess(z_ref, sched.values.front(), limit_ref, r_cut, g);

    const Field Vg = sample_potential(base.V, g);
    const Field Wg = sample_potential(base.W, g);
    bool first = true;
    for (double eps : sched.values) {
        ModelParams p = base;
        p.eps = eps;
        State trial = s;
        try {
            trial = solve_seps(p, g, std::move(trial),
                               first ? opt.flow_steps_first : opt.flow_steps_later);
        } catch (const std::exception& e) {
            rep.error = "eps=" + format_double(eps) + ": " + e.what();
            return rep;  // partial report
        }
        s = std::move(trial);
        first = false;

        ConcentrationRow row;
        row.eps = eps;
        Field sum = s.u;
        for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += s.v[i];
        MaxInfo mi = global_max(sum);
        row.x_eps = mi.point;
        row.gap = mi.gap;
        row.u_at_max = interpolate(s.u, mi.point);
        row.v_at_max = interpolate(s.v, mi.point);
        double inner = opt.inner_r > 0.0 ? opt.inner_r : std::max(2.0 * eps, 4.0 * g.spacing);
        double outer = opt.outer_r;
        if (outer == 0.0) {
            double dist = 1e300;
            for (int a = 0; a < g.dim; ++a)
                dist = std::min(dist, g.half_width - std::abs(row.x_eps[a]));
            outer = 0.8 * dist;
        }
        try {
            DecayFit fit = decay_fit(s, row.x_eps, eps, inner, outer);
            row.mu1 = fit.mu1;
            row.mu2 = fit.mu2;
        } catch (const std::exception&) {
            row.mu1 = row.mu2 = 0.0;  // fit unavailable at this eps
        }
        row.energy_ratio = energy_eps(s, p, Vg, Wg) /
                           (std::pow(eps, g.dim) * rep.sigma_ref);
        row.balance = balance_residual(s, p, row.x_eps, eps);
        row.balance_norm = norm(row.balance);
        row.profile_distance = profile_distance(s, row.x_eps, eps, limit_min);
        row.verdict = to_string(classify_state(s, 1e-4));
        rep.rows.push_back(row);
    }

    // dichotomy verdict from the last two schedule entries
    if (rep.rows.size() >= 2) {
        const double sigma_test = 0.2 * std::sqrt(base.alpha);
        bool vanishing = true, surviving = true;
        for (std::size_t i = rep.rows.size() - 2; i < rep.rows.size(); ++i) {
            const double hi = std::max(rep.rows[i].u_at_max, rep.rows[i].v_at_max);
            const double lo = std::min(rep.rows[i].u_at_max, rep.rows[i].v_at_max);
            if (!(lo <= 0.05 * hi)) vanishing = false;
            if (!(lo >= sigma_test)) surviving = false;
        }
        if (vanishing)
            rep.final_verdict = "ScalarLimit";
        else if (surviving)
            rep.final_verdict = "VectorLimit";
    }
    rep.completed = true;
    return rep;
}

}  // namespace cnls
