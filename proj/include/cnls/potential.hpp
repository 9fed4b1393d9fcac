// Analytic potential specifications: evaluation, gradients, bounds and
// JSON round-tripping.  All variants are bounded below by a positive constant
// and bounded above (quadratic growth is capped).
#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "grid.hpp"

namespace cnls {

struct PotentialSpec {
    enum class Kind { Constant, CappedQuadratic, DoubleWell, Shifted };

    Kind kind = Kind::Constant;
    double kappa = 1.0;                       // Constant
    double base = 1.0, curvature = 1.0;       // CappedQuadratic
    Vec3 center{0.0, 0.0, 0.0};               //   "
    double cap = 9.0;                         //   "  and DoubleWell
    double depth = 1.0, width = 1.0;          // DoubleWell
    std::vector<Vec3> centers;                //   "
    std::shared_ptr<PotentialSpec> inner;     // Shifted
    double shift = 0.0;                       //   "

    static PotentialSpec constant(double k) {
        PotentialSpec p;
        p.kind = Kind::Constant;
        p.kappa = k;
        return p;
    }
    static PotentialSpec capped_quadratic(double base, double curv, Vec3 center,
                                          double cap = 9.0) {
        PotentialSpec p;
        p.kind = Kind::CappedQuadratic;
        p.base = base;
        p.curvature = curv;
        p.center = center;
        p.cap = cap;
        return p;
    }
    static PotentialSpec double_well(double base, double depth, std::vector<Vec3> centers,
                                     double width, double cap = 9.0) {
        PotentialSpec p;
        p.kind = Kind::DoubleWell;
        p.base = base;
        p.depth = depth;
        p.centers = std::move(centers);
        p.width = width;
        p.cap = cap;
        return p;
    }
    static PotentialSpec shifted(PotentialSpec in, double c) {
        PotentialSpec p;
        p.kind = Kind::Shifted;
        p.inner = std::make_shared<PotentialSpec>(std::move(in));
        p.shift = c;
        return p;
    }
};

inline double eval_potential(const PotentialSpec& p, const Vec3& x) {
    switch (p.kind) {
        case PotentialSpec::Kind::Constant:
            return p.kappa;
        case PotentialSpec::Kind::CappedQuadratic: {
            const Vec3 r = x - p.center;
            return p.base + std::min(p.curvature * dot(r, r), p.cap);
        }
        case PotentialSpec::Kind::DoubleWell: {
            // wells of the given depth at the centers, flat value base+depth far away
            double best = 0.0;
            for (const auto& c : p.centers) {
                const Vec3 r = x - c;
                best = std::max(best, std::exp(-dot(r, r) / (p.width * p.width)));
            }
            return p.base + std::min(p.depth * (1.0 - best), p.cap);
        }
        case PotentialSpec::Kind::Shifted:
            return eval_potential(*p.inner, x) + p.shift;
    }
    throw std::logic_error("eval_potential: bad kind");
}

inline Vec3 grad_potential(const PotentialSpec& p, const Vec3& x) {
    switch (p.kind) {
        case PotentialSpec::Kind::Constant:
            return {0.0, 0.0, 0.0};
        case PotentialSpec::Kind::CappedQuadratic: {
            const Vec3 r = x - p.center;
            if (p.curvature * dot(r, r) >= p.cap) return {0.0, 0.0, 0.0};
            return (2.0 * p.curvature) * r;
        }
        case PotentialSpec::Kind::DoubleWell: {
            double best = 0.0;
            Vec3 rb{0.0, 0.0, 0.0};
            for (const auto& c : p.centers) {
                const Vec3 r = x - c;
                const double e = std::exp(-dot(r, r) / (p.width * p.width));
                if (e > best) {
                    best = e;
                    rb = r;
                }
            }
            if (p.depth * (1.0 - best) >= p.cap) return {0.0, 0.0, 0.0};
            const double w2 = p.width * p.width;
            return (2.0 * p.depth * best / w2) * rb;
        }
        case PotentialSpec::Kind::Shifted:
            return grad_potential(*p.inner, x);
    }
    throw std::logic_error("grad_potential: bad kind");
}

// Pointwise infimum over all of space.
inline double inf_potential(const PotentialSpec& p) {
    switch (p.kind) {
        case PotentialSpec::Kind::Constant:
            return p.kappa;
        case PotentialSpec::Kind::CappedQuadratic:
            return p.base;
        case PotentialSpec::Kind::DoubleWell:
            return p.base;
        case PotentialSpec::Kind::Shifted:
            return inf_potential(*p.inner) + p.shift;
    }
    throw std::logic_error("inf_potential: bad kind");
}

// Supremum over the box [-L, L]^d (quadratic variants peak at a corner).
inline double sup_potential(const PotentialSpec& p, int dim, double L) {
    switch (p.kind) {
        case PotentialSpec::Kind::Constant:
            return p.kappa;
        case PotentialSpec::Kind::CappedQuadratic: {
            double r2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                const double lo = -L - p.center[a], hi = L - p.center[a];
                const double m = std::max(std::abs(lo), std::abs(hi));
                r2 += m * m;
            }
            return p.base + std::min(p.curvature * r2, p.cap);
        }
        case PotentialSpec::Kind::DoubleWell:
            return p.base + std::min(p.depth, p.cap);
        case PotentialSpec::Kind::Shifted:
            return sup_potential(*p.inner, dim, L) + p.shift;
    }
    throw std::logic_error("sup_potential: bad kind");
}

inline Field sample_potential(const PotentialSpec& p, const Grid& g) {
    // potentials are nonzero at the boundary too: sample every node directly
    Field out(g);
    detail::for_each_node(g, [&](std::size_t k, const std::array<int, 3>& idx) {
        Vec3 x{0.0, 0.0, 0.0};
        for (int a = 0; a < g.dim; ++a) x[a] = g.coord(idx[a]);
        out.values[k] = eval_potential(p, x);
    });
    return out;
}

// --- JSON round-trip ---

inline nlohmann::json to_json(const PotentialSpec& p) {
    using nlohmann::json;
    switch (p.kind) {
        case PotentialSpec::Kind::Constant:
            return json{{"type", "constant"}, {"kappa", p.kappa}};
        case PotentialSpec::Kind::CappedQuadratic:
            return json{{"type", "capped_quadratic"},
                        {"base", p.base},
                        {"curvature", p.curvature},
                        {"center", p.center},
                        {"cap", p.cap}};
        case PotentialSpec::Kind::DoubleWell: {
            json cs = json::array();
            for (const auto& c : p.centers) cs.push_back(c);
            return json{{"type", "double_well"}, {"base", p.base}, {"depth", p.depth},
                        {"centers", cs},         {"width", p.width}, {"cap", p.cap}};
        }
        case PotentialSpec::Kind::Shifted:
            return json{{"type", "shifted"}, {"inner", to_json(*p.inner)}, {"c", p.shift}};
    }
    throw std::logic_error("to_json: bad kind");
}

inline Vec3 vec3_from_json(const nlohmann::json& j) {
    if (!j.is_array() || j.size() > 3) throw std::invalid_argument("expected a point array of size <= 3");
    Vec3 v{0.0, 0.0, 0.0};
    for (std::size_t a = 0; a < j.size(); ++a) v[a] = j[a].get<double>();
    return v;
}

inline PotentialSpec potential_from_json(const nlohmann::json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "constant") {
        return PotentialSpec::constant(j.at("kappa").get<double>());
    }
    if (type == "capped_quadratic") {
        return PotentialSpec::capped_quadratic(
            j.at("base").get<double>(), j.at("curvature").get<double>(),
            vec3_from_json(j.at("center")), j.value("cap", 9.0));
    }
    if (type == "double_well") {
        std::vector<Vec3> cs;
        for (const auto& c : j.at("centers")) cs.push_back(vec3_from_json(c));
        return PotentialSpec::double_well(j.at("base").get<double>(),
                                          j.at("depth").get<double>(), std::move(cs),
                                          j.at("width").get<double>(), j.value("cap", 9.0));
    }
    if (type == "shifted") {
        return PotentialSpec::shifted(potential_from_json(j.at("inner")),
                                      j.at("c").get<double>());
    }
    throw std::invalid_argument("unknown potential type: " + type);
}

}  // namespace cnls
