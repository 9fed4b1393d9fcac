// Ground energy function Sigma over space: the scaling-reduced cache,
// map sampling, directional-derivative bounds and the Clarke criticality test.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "model.hpp"
#include "potential.hpp"
#include "solver.hpp"

namespace cnls {

// One reduced solve c(1, omega2, b) on the reference grid, with the squared
// L2 masses of both components (u carries kappa = 1, v carries kappa = omega2).
struct ReducedKnot {
    double omega2 = 1.0;
    double c = 0.0;
    double mass_u = 0.0;
    double mass_v = 0.0;
    Classification cls = Classification::ScalarU;
};

inline Classification classification_from_string(const std::string& s) {
    if (s == "ScalarU") return Classification::ScalarU;
    if (s == "ScalarV") return Classification::ScalarV;
    if (s == "Vector") return Classification::Vector;
    throw std::invalid_argument("unknown classification: " + s);
}

// Default frozen-frame reference grids per dimension.
inline Grid reference_grid(int dim) {
    switch (dim) {
        case 1: return make_grid(1, 20.0, 2049);
        case 2: return make_grid(2, 10.0, 129);
        case 3: return make_grid(3, 8.0, 64);
    }
    throw std::invalid_argument("reference_grid: dim must be 1, 2 or 3");
}

// Reduced-solve cache per dimension: rows keyed by b, knots over omega2.
// Persisted as JSON in the cache directory; immutable while map sampling runs.
class SigmaEngine {
  public:
    explicit SigmaEngine(int dim, Grid ref) : dim_(dim), ref_(ref) { load(); }
    explicit SigmaEngine(int dim) : SigmaEngine(dim, reference_grid(dim)) {}

    int dim() const { return dim_; }
    const Grid& ref_grid() const { return ref_; }

    // Scalar-branch ground energy at kappa = 1 and the scalar profile mass.
    double gamma() {
        ensure_scalar_data();
        return gamma_;
    }
    double scalar_mass() {
        ensure_scalar_data();
        return mass0_;
    }

    // Sigma via the scaling reduction kappa_max^{(4-d)/2} c(1, omega2, b),
    // cubic interpolation between cached omega2 knots.
    double sigma_reduced(const FrozenParams& p) {
        check_frozen(p);
        const double kmax = std::max(p.kappa1, p.kappa2);
        const double kmin = std::min(p.kappa1, p.kappa2);
        const double om2 = kmin / kmax;
        const std::vector<ReducedKnot>& row = ensure_row(p.b);
        return std::pow(kmax, 0.5 * (4 - dim_)) * interp_c(row, om2);
    }

    // Build (or fetch) the knot row for one b value.
    const std::vector<ReducedKnot>& ensure_row(double b) {
        const std::string key = format_double(b);
        auto it = rows_.find(key);
        if (it != rows_.end()) return it->second;
        std::vector<ReducedKnot> row;
        for (int i = 1; i <= knots_per_row; ++i) {
            const double om2 = static_cast<double>(i) / knots_per_row;
            ReducedKnot k;
            k.omega2 = om2;
            GroundState gs = system_ground_state({1.0, om2, b}, ref_);
            k.c = gs.energy;
            k.mass_u = integrate(gs.state.u, 2);
            k.mass_v = integrate(gs.state.v, 2);
            k.cls = gs.classification;
            row.push_back(k);
        }
        auto& stored = rows_.emplace(key, std::move(row)).first->second;
        save();
        return stored;
    }

    // Gradient candidates of Sigma at z: one d-vector
    // (1/2)(grad V(z) ||phi||_2^2 + grad W(z) ||psi||_2^2) per recorded ground
    // state, with the masses reconstructed from the reduced cache by scaling.
    std::vector<Vec3> gradient_candidates(const PotentialSpec& V, const PotentialSpec& W,
                                          double b, const Vec3& z) {
        const double k1 = eval_potential(V, z);
        const double k2 = eval_potential(W, z);
        const Vec3 gV = grad_potential(V, z);
        const Vec3 gW = grad_potential(W, z);
        const double kmax = std::max(k1, k2);
        const double om2 = std::min(k1, k2) / kmax;
        const std::vector<ReducedKnot>& row = ensure_row(b);
        const ReducedKnot& knot = nearest_knot(row, om2);
        const double mscale = std::pow(kmax, 0.5 * (2 - dim_));
        std::vector<Vec3> out;
        if (knot.cls == Classification::Vector) {
            // unique vector state; u of the reduced solve carries the larger kappa
            const double mu_big = mscale * knot.mass_u;
            const double mv_small = mscale * knot.mass_v;
            const double mV = k1 >= k2 ? mu_big : mv_small;
            const double mW = k1 >= k2 ? mv_small : mu_big;
            out.push_back(0.5 * (mV * 1.0) * gV + 0.5 * (mW * 1.0) * gW);
        } else {
            // scalar branch: survivor sits in the lower potential; near a tie
            // both scalar states are least-energy and both are recorded
            ensure_scalar_data();
            const double rel_gap = std::abs(k1 - k2) / kmax;
            const double m1 = std::pow(k1, 0.5 * (2 - dim_)) * mass0_;
            const double m2 = std::pow(k2, 0.5 * (2 - dim_)) * mass0_;
            if (rel_gap <= 1e-9) {
                out.push_back(0.5 * m1 * gV);
                out.push_back(0.5 * m2 * gW);
            } else if (k1 < k2) {
                out.push_back(0.5 * m1 * gV);
            } else {
                out.push_back(0.5 * m2 * gW);
            }
        }
        return out;
    }

  private:
    static constexpr int knots_per_row = 20;  // omega2 = 0.05, 0.10, ..., 1.00

    static const ReducedKnot& nearest_knot(const std::vector<ReducedKnot>& row, double om2) {
        std::size_t best = 0;
        double dist = 1e300;
        for (std::size_t i = 0; i < row.size(); ++i) {
            const double d = std::abs(row[i].omega2 - om2);
            if (d < dist) {
                dist = d;
                best = i;
            }
        }
        return row[best];
    }

    // Catmull-Rom interpolation on the uniform omega2 knots.
    double interp_c(const std::vector<ReducedKnot>& row, double om2) const {
        const double lo = row.front().omega2, hi = row.back().omega2;
        if (om2 < lo - 1e-12 || om2 > hi + 1e-12)
            throw std::out_of_range("sigma_reduced: omega2 outside the cached knot range");
        const double step = (hi - lo) / (row.size() - 1);
        double t = (om2 - lo) / step;
        long j = std::lround(std::floor(t));
        if (j >= static_cast<long>(row.size()) - 1) j = static_cast<long>(row.size()) - 2;
        if (j < 0) j = 0;
        t -= j;
        if (t == 0.0) return row[j].c;
        const double p1 = row[j].c, p2 = row[j + 1].c;
        const double p0 = j > 0 ? row[j - 1].c : 2.0 * p1 - p2;
        const double p3 = j + 2 < static_cast<long>(row.size()) ? row[j + 2].c : 2.0 * p2 - p1;
        const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
        const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
        const double c = -0.5 * p0 + 0.5 * p2;
        return ((a * t + b) * t + c) * t + p1;
    }

    void ensure_scalar_data() {
        if (gamma_ > 0.0) return;
        const Field u0 = scalar_ground_state(1.0, ref_);
        State s(ref_);
        s.u = u0;
        gamma_ = energy_frozen(s, {1.0, 1.0, 0.0});
        mass0_ = integrate(u0, 2);
        save();
    }

    std::filesystem::path file() const {
        return cache_dir() / ("reduced_d" + std::to_string(dim_) + "_n" +
                              std::to_string(ref_.points_per_axis) + ".json");
    }

    void load() {
        std::ifstream is(file());
        if (!is) return;
        nlohmann::json j;
        try {
            is >> j;
        } catch (...) {
            return;  // unreadable cache is rebuilt
        }
        if (j.value("dim", 0) != dim_ || j.value("n", 0) != ref_.points_per_axis ||
            j.value("L", 0.0) != ref_.half_width)
            return;
        gamma_ = j.value("gamma", 0.0);
        mass0_ = j.value("mass0", 0.0);
        for (auto& [key, val] : j.at("rows").items()) {
            std::vector<ReducedKnot> row;
            for (auto& kj : val) {
                ReducedKnot k;
                k.omega2 = kj.at("omega2").get<double>();
                k.c = kj.at("c").get<double>();
                k.mass_u = kj.at("mass_u").get<double>();
                k.mass_v = kj.at("mass_v").get<double>();
                k.cls = classification_from_string(kj.at("class").get<std::string>());
                row.push_back(k);
            }
            rows_[key] = std::move(row);
        }
    }

    void save() const {
        nlohmann::json j;
        j["dim"] = dim_;
        j["n"] = ref_.points_per_axis;
        j["L"] = ref_.half_width;
        j["gamma"] = gamma_;
        j["mass0"] = mass0_;
        nlohmann::json rows = nlohmann::json::object();
        for (const auto& [key, row] : rows_) {
            nlohmann::json arr = nlohmann::json::array();
            for (const ReducedKnot& k : row)
                arr.push_back({{"omega2", k.omega2},
                               {"c", k.c},
                               {"mass_u", k.mass_u},
                               {"mass_v", k.mass_v},
                               {"class", to_string(k.cls)}});
            rows[key] = std::move(arr);
        }
        j["rows"] = std::move(rows);
        std::error_code ec;
        std::filesystem::create_directories(cache_dir(), ec);
        write_file_atomic(file(), j.dump(1));
    }

    int dim_;
    Grid ref_;
    double gamma_ = 0.0;
    double mass0_ = 0.0;
    std::map<std::string, std::vector<ReducedKnot>> rows_;
};

inline double sigma_frozen(const FrozenParams& p, const Grid& g) {
    return system_ground_state(p, g).energy;
}

struct SigmaSample {
    Vec3 z{0.0, 0.0, 0.0};
    double kappa1 = 0.0;
    double kappa2 = 0.0;
    double sigma = 0.0;
    std::vector<Vec3> gradient_candidates;
    bool clarke_critical = false;
    double hull_margin = 0.0;
};

struct BoxSpec {
    Vec3 lo{0.0, 0.0, 0.0};
    Vec3 hi{0.0, 0.0, 0.0};
};

struct SigmaMap {
    BoxSpec region;
    int resolution = 0;
    int dim = 0;
    std::vector<SigmaSample> samples;  // row-major over the region grid
};

// Directional derivative interval: extremes over the recorded ground states of
// (1/2)(dV/deta ||phi||^2 + dW/deta ||psi||^2); the left derivative is the
// upper endpoint and the right derivative the lower one.
struct DerivBounds {
    double lower = 0.0;
    double upper = 0.0;
};

inline DerivBounds dir_deriv_bounds(const Vec3& eta, const SigmaSample& sample) {
    if (sample.gradient_candidates.empty())
        throw std::invalid_argument("dir_deriv_bounds: no recorded ground states");
    DerivBounds out;
    bool first = true;
    for (const Vec3& g : sample.gradient_candidates) {
        const double v = dot(g, eta);
        if (first) {
            out.lower = out.upper = v;
            first = false;
        } else {
            out.lower = std::min(out.lower, v);
            out.upper = std::max(out.upper, v);
        }
    }
    return out;
}

namespace detail {

// Exact distance from the origin to the convex hull of a small candidate set:
// enumerate affine subsets (Caratheodory), solve the equality-constrained
// least-squares system, keep feasible (nonnegative-weight) minimizers.
inline double hull_distance(const std::vector<Vec3>& pts, int dim) {
    const std::size_t n = pts.size();
    double best = 1e300;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<const Vec3*> sub;
        for (std::size_t i = 0; i < n; ++i)
            if (mask & (1u << i)) sub.push_back(&pts[i]);
        const std::size_t k = sub.size();
        if (k > static_cast<std::size_t>(dim) + 1) continue;
        // KKT system for min ||G lambda||^2 with sum lambda = 1
        const std::size_t m = k + 1;
        std::vector<double> A(m * m, 0.0), rhs(m, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) {
                double acc = 0.0;
                for (int a = 0; a < dim; ++a) acc += (*sub[i])[a] * (*sub[j])[a];
                A[i * m + j] = acc;
            }
        for (std::size_t i = 0; i < k; ++i) {
            A[i * m + k] = 1.0;
            A[k * m + i] = 1.0;
        }
        rhs[k] = 1.0;
        // Gaussian elimination with partial pivoting
        bool singular = false;
        std::vector<std::size_t> perm(m);
        for (std::size_t i = 0; i < m; ++i) perm[i] = i;
        for (std::size_t col = 0; col < m && !singular; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < m; ++r)
                if (std::abs(A[r * m + col]) > std::abs(A[piv * m + col])) piv = r;
            if (std::abs(A[piv * m + col]) < 1e-14) {
                singular = true;
                break;
            }
            if (piv != col) {
                for (std::size_t c = 0; c < m; ++c) std::swap(A[col * m + c], A[piv * m + c]);
                std::swap(rhs[col], rhs[piv]);
            }
            for (std::size_t r = col + 1; r < m; ++r) {
                const double f = A[r * m + col] / A[col * m + col];
                for (std::size_t c = col; c < m; ++c) A[r * m + c] -= f * A[col * m + c];
                rhs[r] -= f * rhs[col];
            }
        }
        if (singular) continue;  // a smaller subset spans the same face
        std::vector<double> lam(m);
        for (std::size_t r = m; r-- > 0;) {
            double acc = rhs[r];
            for (std::size_t c = r + 1; c < m; ++c) acc -= A[r * m + c] * lam[c];
            lam[r] = acc / A[r * m + r];
        }
        bool feasible = true;
        for (std::size_t i = 0; i < k; ++i)
            if (lam[i] < -1e-12) feasible = false;
        if (!feasible) continue;
        Vec3 pt{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < k; ++i)
            for (int a = 0; a < dim; ++a) pt[a] += lam[i] * (*sub[i])[a];
        best = std::min(best, norm(pt));
    }
    return best;
}

}  // namespace detail

struct ClarkeReport {
    bool critical = false;
    double hull_margin = 0.0;
};

inline ClarkeReport clarke_critical_test(const SigmaSample& sample, int dim,
                                         double tol_rel = 1e-6) {
    if (sample.gradient_candidates.empty())
        throw std::invalid_argument("clarke_critical_test: empty candidate list");
    double maxn = 0.0;
    for (const Vec3& g : sample.gradient_candidates) maxn = std::max(maxn, norm(g));
    ClarkeReport rep;
    rep.hull_margin = detail::hull_distance(sample.gradient_candidates, dim);
    rep.critical = rep.hull_margin <= tol_rel * std::max(maxn, 1e-300);
    return rep;
}

inline SigmaSample sigma_sample(SigmaEngine& eng, const PotentialSpec& V,
                                const PotentialSpec& W, double b, const Vec3& z) {
    SigmaSample s;
    s.z = z;
    s.kappa1 = eval_potential(V, z);
    s.kappa2 = eval_potential(W, z);
    s.sigma = eng.sigma_reduced({s.kappa1, s.kappa2, b});
    s.gradient_candidates = eng.gradient_candidates(V, W, b, z);
    const ClarkeReport rep = clarke_critical_test(s, eng.dim());
    s.clarke_critical = rep.critical;
    s.hull_margin = rep.hull_margin;
    return s;
}

inline SigmaMap sigma_map(SigmaEngine& eng, const PotentialSpec& V, const PotentialSpec& W,
                          double b, const BoxSpec& region, int res) {
    if (res < 2) throw std::invalid_argument("sigma_map: resolution must be at least 2");
    SigmaMap map;
    map.region = region;
    map.resolution = res;
    map.dim = eng.dim();
    eng.ensure_row(b);  // cache is immutable during sampling
    std::size_t total = 1;
    for (int a = 0; a < map.dim; ++a) total *= static_cast<std::size_t>(res);
    map.samples.resize(total);
    std::array<int, 3> idx{0, 0, 0};
    for (std::size_t k = 0; k < total; ++k) {
        Vec3 z{0.0, 0.0, 0.0};
        for (int a = 0; a < map.dim; ++a)
            z[a] = region.lo[a] + (region.hi[a] - region.lo[a]) * idx[a] / (res - 1);
        map.samples[k] = sigma_sample(eng, V, W, b, z);
        for (int a = map.dim - 1; a >= 0; --a) {
            if (++idx[a] < res) break;
            idx[a] = 0;
        }
    }
    return map;
}

inline Vec3 finite_diff_sigma_grad(SigmaEngine& eng, const PotentialSpec& V,
                                   const PotentialSpec& W, double b, const Vec3& z,
                                   double step) {
    if (!(step > 0.0)) throw std::invalid_argument("finite_diff_sigma_grad: step must be positive");
    Vec3 out{0.0, 0.0, 0.0};
    for (int a = 0; a < eng.dim(); ++a) {
        Vec3 zp = z, zm = z;
        zp[a] += step;
        zm[a] -= step;
        const double sp = eng.sigma_reduced({eval_potential(V, zp), eval_potential(W, zp), b});
        const double sm = eng.sigma_reduced({eval_potential(V, zm), eval_potential(W, zm), b});
        out[a] = (sp - sm) / (2.0 * step);
    }
    return out;
}

}  // namespace cnls
