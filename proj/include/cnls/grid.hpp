// Uniform tensor-product grids, scalar fields and the discrete operators
// (Laplacian stencil, quadrature, Dirichlet energy) used by every solver.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnls {

using Vec3 = std::array<double, 3>;

inline double norm(const Vec3& v) {
    return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

inline Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
    return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

inline Vec3 operator*(double s, const Vec3& a) {
    return {s * a[0], s * a[1], s * a[2]};
}

inline double dot(const Vec3& a, const Vec3& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

// Uniform grid on [-L, L]^d with n nodes per axis, x_i = -L + i*h.
struct Grid {
    int dim = 1;
    double half_width = 0.0;
    int points_per_axis = 0;
    double spacing = 0.0;

    std::size_t node_count() const {
        std::size_t c = 1;
        for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(points_per_axis);
        return c;
    }
    double coord(int i) const { return -half_width + spacing * i; }
    double cell_measure() const {
        double m = 1.0;
        for (int a = 0; a < dim; ++a) m *= spacing;
        return m;
    }
    bool operator==(const Grid& o) const {
        return dim == o.dim && half_width == o.half_width &&
               points_per_axis == o.points_per_axis;
    }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline Grid make_grid(int d, double L, int n) {
    if (d < 1 || d > 3) throw std::invalid_argument("make_grid: dim must be 1, 2 or 3");
    if (!(L > 0.0)) throw std::invalid_argument("make_grid: half_width must be positive");
    if (n < 8) throw std::invalid_argument("make_grid: need at least 8 points per axis");
    Grid g;
    g.dim = d;
    g.half_width = L;
    g.points_per_axis = n;
    g.spacing = 2.0 * L / (n - 1);
    return g;
}

// Real-valued function sampled at the grid nodes, row-major, zero on the boundary.
struct Field {
    Grid grid;
    std::vector<double> values;

    Field() = default;
    explicit Field(const Grid& g) : grid(g), values(g.node_count(), 0.0) {}

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    // Sample f(x) at interior nodes; boundary stays zero.
    template <class F>
    static Field sample(const Grid& g, F&& f) {
        Field out(g);
        const int n = g.points_per_axis;
        std::array<int, 3> idx{0, 0, 0};
        for (std::size_t k = 0; k < out.values.size(); ++k) {
            bool boundary = false;
            Vec3 x{0.0, 0.0, 0.0};
            for (int a = 0; a < g.dim; ++a) {
                if (idx[a] == 0 || idx[a] == n - 1) boundary = true;
                x[a] = g.coord(idx[a]);
            }
            out.values[k] = boundary ? 0.0 : f(x);
            for (int a = g.dim - 1; a >= 0; --a) {
                if (++idx[a] < n) break;
                idx[a] = 0;
            }
        }
        return out;
    }
};

inline void require_same_grid(const Field& a, const Field& b) {
    if (a.grid != b.grid) throw std::invalid_argument("fields live on different grids");
}

namespace detail {

// Strides of the row-major layout: last axis is contiguous.
inline std::array<std::size_t, 3> strides(const Grid& g) {
    const auto n = static_cast<std::size_t>(g.points_per_axis);
    std::array<std::size_t, 3> s{0, 0, 0};
    std::size_t cur = 1;
    for (int a = g.dim - 1; a >= 0; --a) {
        s[a] = cur;
        cur *= n;
    }
    return s;
}

template <class Body>
inline void for_each_node(const Grid& g, Body&& body) {
    const int n = g.points_per_axis;
    std::array<int, 3> idx{0, 0, 0};
    const std::size_t total = g.node_count();
    for (std::size_t k = 0; k < total; ++k) {
        body(k, idx);
        for (int a = g.dim - 1; a >= 0; --a) {
            if (++idx[a] < n) break;
            idx[a] = 0;
        }
    }
}

inline bool is_boundary(const Grid& g, const std::array<int, 3>& idx) {
    for (int a = 0; a < g.dim; ++a)
        if (idx[a] == 0 || idx[a] == g.points_per_axis - 1) return true;
    return false;
}

}  // namespace detail

// Second-order central-difference Laplacian; output is zero on the boundary.
inline Field laplacian_apply(const Field& f) {
    const Grid& g = f.grid;
    Field out(g);
    const auto st = detail::strides(g);
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    const int n = g.points_per_axis;
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        if (detail::is_boundary(g, idx)) return;
        double acc = -2.0 * g.dim * f.values[k];
        for (int a = 0; a < g.dim; ++a) {
            acc += f.values[k - st[a]] + f.values[k + st[a]];
        }
        out.values[k] = acc * inv_h2;
        (void)n;
    });
    return out;
}

// h^d * sum f_i^p for p in {1, 2, 4}.
inline double integrate(const Field& f, int p) {
    if (p != 1 && p != 2 && p != 4) throw std::invalid_argument("integrate: p must be 1, 2 or 4");
    double acc = 0.0;
    for (double v : f.values) {
        double t = v;
        if (p >= 2) t = v * v;
        if (p == 4) t = t * t;
        acc += t;
    }
    return acc * f.grid.cell_measure();
}

// h^d * sum over forward differences of ((f_{i+e} - f_i)/h)^2, summed over axes.
inline double dirichlet_energy(const Field& f) {
    const Grid& g = f.grid;
    const auto st = detail::strides(g);
    const int n = g.points_per_axis;
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    double acc = 0.0;
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        for (int a = 0; a < g.dim; ++a) {
            if (idx[a] + 1 >= n) continue;
            const double d = f.values[k + st[a]] - f.values[k];
            acc += d * d * inv_h2;
        }
    });
    return acc * g.cell_measure();
}

// h^d * sum f_i^2 g_i^2.
inline double mixed_sq(const Field& f, const Field& g) {
    require_same_grid(f, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) {
        const double a = f.values[i], b = g.values[i];
        acc += a * a * b * b;
    }
    return acc * f.grid.cell_measure();
}

// h^d * sum f_i g_i (L2 pairing under the same quadrature).
inline double inner(const Field& f, const Field& g) {
    require_same_grid(f, g);
    double acc = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i) acc += f.values[i] * g.values[i];
    return acc * f.grid.cell_measure();
}

struct MaxInfo {
    Vec3 point{0.0, 0.0, 0.0};  // refined location (unused axes zero)
    double value = 0.0;
    double gap = 0.0;  // max minus second-highest local max; +inf if unique local max
};

// Global maximum node with one quadratic sub-grid refinement per axis.
// gap = 0 signals a tie between distinct local maxima.
inline MaxInfo global_max(const Field& f) {
    const Grid& g = f.grid;
    const auto st = detail::strides(g);
    const int n = g.points_per_axis;

    bool all_zero = true;
    for (double v : f.values)
        if (v != 0.0) { all_zero = false; break; }
    if (all_zero) throw std::invalid_argument("global_max: field is identically zero");

    std::size_t best = 0;
    double best_val = -std::numeric_limits<double>::infinity();
    std::array<int, 3> best_idx{0, 0, 0};
    double second_local = -std::numeric_limits<double>::infinity();
    bool tie = false;
    std::size_t local_count = 0;

    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        const double v = f.values[k];
        // local maximum: >= all axis neighbours (missing neighbours treated as -inf)
        bool local = true;
        for (int a = 0; a < g.dim && local; ++a) {
            if (idx[a] > 0 && f.values[k - st[a]] > v) local = false;
            if (idx[a] + 1 < n && f.values[k + st[a]] > v) local = false;
        }
        if (!local) return;
        ++local_count;
        if (v > best_val) {
            second_local = best_val;
            best_val = v;
            best = k;
            best_idx = idx;
            tie = false;
        } else if (v == best_val) {
            // distinct node attaining the same value: only a tie if not adjacent
            tie = true;
            second_local = std::max(second_local, v);
        } else {
            second_local = std::max(second_local, v);
        }
    });

    MaxInfo out;
    out.value = best_val;
    for (int a = 0; a < g.dim; ++a) {
        double x = g.coord(best_idx[a]);
        if (best_idx[a] > 0 && best_idx[a] + 1 < n) {
            const double fm = f.values[best - st[a]];
            const double fp = f.values[best + st[a]];
            const double denom = fm - 2.0 * best_val + fp;
            if (denom < 0.0) {
                double off = 0.5 * (fm - fp) / denom;
                if (off > 0.5) off = 0.5;
                if (off < -0.5) off = -0.5;
                x += off * g.spacing;
                out.value += -0.25 * (fm - fp) * off;  // parabola value at the offset
            }
        }
        out.point[a] = x;
    }
    if (tie) {
        out.gap = 0.0;
    } else if (local_count <= 1) {
        out.gap = std::numeric_limits<double>::infinity();
    } else {
        out.gap = best_val - second_local;
    }
    return out;
}

// Multilinear interpolation; zero outside the box.
inline double interpolate(const Field& f, const Vec3& x) {
    const Grid& g = f.grid;
    const auto st = detail::strides(g);
    const int n = g.points_per_axis;
    std::array<int, 3> i0{0, 0, 0};
    std::array<double, 3> w{0.0, 0.0, 0.0};
    for (int a = 0; a < g.dim; ++a) {
        const double t = (x[a] + g.half_width) / g.spacing;
        if (t < 0.0 || t > n - 1) return 0.0;
        int i = static_cast<int>(std::floor(t));
        if (i > n - 2) i = n - 2;
        i0[a] = i;
        w[a] = t - i;
    }
    double acc = 0.0;
    const int corners = 1 << g.dim;
    for (int c = 0; c < corners; ++c) {
        std::size_t k = 0;
        double wc = 1.0;
        for (int a = 0; a < g.dim; ++a) {
            const int bit = (c >> a) & 1;
            k += st[a] * (i0[a] + bit);
            wc *= bit ? w[a] : 1.0 - w[a];
        }
        acc += wc * f.values[k];
    }
    return acc;
}

// Pair of components on one grid.
struct State {
    Field u;
    Field v;

    State() = default;
    State(Field uu, Field vv) : u(std::move(uu)), v(std::move(vv)) {
        require_same_grid(u, v);
    }
    explicit State(const Grid& g) : u(g), v(g) {}
    const Grid& grid() const { return u.grid; }
};

// --- flat binary serialization: header (d, n, L) then n^d doubles, row-major ---

inline void write_field(const Field& f, std::ostream& os) {
    const std::int64_t d = f.grid.dim;
    const std::int64_t n = f.grid.points_per_axis;
    const double L = f.grid.half_width;
    os.write(reinterpret_cast<const char*>(&d), 8);
    os.write(reinterpret_cast<const char*>(&n), 8);
    os.write(reinterpret_cast<const char*>(&L), 8);
    os.write(reinterpret_cast<const char*>(f.values.data()),
             static_cast<std::streamsize>(f.values.size() * 8));
}

inline Field read_field(std::istream& is) {
    std::int64_t d = 0, n = 0;
    double L = 0.0;
    is.read(reinterpret_cast<char*>(&d), 8);
    is.read(reinterpret_cast<char*>(&n), 8);
    is.read(reinterpret_cast<char*>(&L), 8);
    if (!is) throw std::runtime_error("read_field: truncated header");
    Field f(make_grid(static_cast<int>(d), L, static_cast<int>(n)));
    is.read(reinterpret_cast<char*>(f.values.data()),
            static_cast<std::streamsize>(f.values.size() * 8));
    if (!is) throw std::runtime_error("read_field: truncated payload");
    return f;
}

inline void save_field(const Field& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field(f, os);
}

inline Field load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field(is);
}

}  // namespace cnls
