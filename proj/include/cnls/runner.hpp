// Run orchestration: JSON configuration parsing with fail-fast validation and
// explicit default echoing, command dispatch, report/CSV emission.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "io.hpp"
#include "semiclassical.hpp"
#include "sigma.hpp"
#include "solver.hpp"

namespace cnls {

inline const char* tool_version() { return "0.1.0"; }

// Configuration problems (exit code 2); everything else thrown by the solvers
// is a runtime failure (exit code 3).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunSpec {
    std::string command;
    nlohmann::json echo;  // fully defaulted configuration; parse(echo) == echo

    Grid grid;                     // ground-state, threshold-sweep, semiclassical
    FrozenParams frozen;           // ground-state
    double kappa1 = 0.0;           // threshold-sweep
    double kappa2 = 0.0;
    std::vector<double> b_list;    // threshold-sweep
    std::vector<SeedSpec> seeds;   // frozen solves

    int dim = 0;                   // sigma-map
    PotentialSpec V;               // sigma-map, semiclassical
    PotentialSpec W;
    double b = 0.0;
    double alpha = 1.0;            // semiclassical
    BoxSpec region;                // sigma-map
    int resolution = 0;

    Vec3 z_ref{0.0, 0.0, 0.0};     // semiclassical
    EpsSchedule schedule;
    ContinuationOptions copt;
};

namespace cfg {

inline const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                                     const std::string& ctx) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError(ctx + ": missing required field \"" + key + "\"");
    return j.at(key);
}

inline double number(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_number()) throw ConfigError(ctx + ": expected a number");
    return j.get<double>();
}

inline int integer(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_number_integer()) throw ConfigError(ctx + ": expected an integer");
    return j.get<int>();
}

inline Vec3 point(const nlohmann::json& j, int dim, const std::string& ctx) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(dim))
        throw ConfigError(ctx + ": expected an array of " + std::to_string(dim) + " numbers");
    Vec3 p{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) p[a] = number(j.at(a), ctx);
    return p;
}

inline nlohmann::json point_json(const Vec3& p, int dim) {
    nlohmann::json a = nlohmann::json::array();
    for (int i = 0; i < dim; ++i) a.push_back(p[i]);
    return a;
}

inline Grid grid(const nlohmann::json& j, const std::string& ctx) {
    try {
        return make_grid(integer(require(j, "dim", ctx), ctx + ".dim"),
                         number(require(j, "half_width", ctx), ctx + ".half_width"),
                         integer(require(j, "points_per_axis", ctx), ctx + ".points_per_axis"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

inline nlohmann::json grid_json(const Grid& g) {
    return {{"dim", g.dim}, {"half_width", g.half_width}, {"points_per_axis", g.points_per_axis}};
}

inline PotentialSpec potential(const nlohmann::json& j, const std::string& ctx) {
    try {
        return potential_from_json(j);
    } catch (const std::exception& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

inline std::vector<SeedSpec> seeds(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array() || j.empty())
        throw ConfigError(ctx + ": expected a nonempty array of seed ids");
    std::vector<SeedSpec> out;
    for (const auto& item : j) {
        if (!item.is_string()) throw ConfigError(ctx + ": seed ids must be strings");
        const std::string id = item.get<std::string>();
        bool found = false;
        for (const SeedSpec& s : default_seeds())
            if (s.id() == id) {
                out.push_back(s);
                found = true;
            }
        if (!found)
            throw ConfigError(ctx + ": unknown seed \"" + id +
                              "\" (valid: scalar-u, scalar-v, symmetric-vector, "
                              "asymmetric-vector)");
    }
    return out;
}

inline nlohmann::json seeds_json(const std::vector<SeedSpec>& ss) {
    nlohmann::json a = nlohmann::json::array();
    for (const SeedSpec& s : ss) a.push_back(s.id());
    return a;
}

inline EpsSchedule schedule(const nlohmann::json& j, const std::string& ctx) {
    EpsSchedule s;
    try {
        if (j.is_object() && j.contains("values")) {
            for (const auto& v : j.at("values")) s.values.push_back(number(v, ctx));
            check_schedule(s);
            return s;
        }
        if (j.is_object()) {
            return geometric_schedule(j.value("start", 0.5), j.value("ratio", 0.8),
                                      j.value("floor", 0.05));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    throw ConfigError(ctx + ": expected {\"values\": [...]} or {start, ratio, floor}");
}

}  // namespace cfg

inline RunSpec parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config: top-level value must be an object");

    RunSpec spec;
    const nlohmann::json& cj = cfg::require(j, "command", "config");
    if (!cj.is_string()) throw ConfigError("config.command: expected a string");
    spec.command = cj.get<std::string>();
    static const std::vector<std::string> valid = {"ground-state", "sigma-map",
                                                   "threshold-sweep", "semiclassical",
                                                   "validate"};
    if (std::find(valid.begin(), valid.end(), spec.command) == valid.end()) {
        std::string list;
        for (const std::string& v : valid) list += (list.empty() ? "" : ", ") + v;
        throw ConfigError("config.command: unknown command \"" + spec.command +
                          "\" (valid commands: " + list + ")");
    }

    nlohmann::json echo;
    echo["command"] = spec.command;

    if (spec.command == "ground-state" || spec.command == "threshold-sweep") {
        spec.grid = cfg::grid(cfg::require(j, "grid", "config"), "config.grid");
        echo["grid"] = cfg::grid_json(spec.grid);
        spec.seeds = j.contains("seeds") ? cfg::seeds(j.at("seeds"), "config.seeds")
                                         : default_seeds();
        echo["seeds"] = cfg::seeds_json(spec.seeds);
    }

    if (spec.command == "ground-state") {
        const nlohmann::json& f = cfg::require(j, "frozen", "config");
        spec.frozen.kappa1 = cfg::number(cfg::require(f, "kappa1", "config.frozen"),
                                         "config.frozen.kappa1");
        spec.frozen.kappa2 = cfg::number(cfg::require(f, "kappa2", "config.frozen"),
                                         "config.frozen.kappa2");
        spec.frozen.b = cfg::number(cfg::require(f, "b", "config.frozen"), "config.frozen.b");
        try {
            check_frozen(spec.frozen);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config.frozen: ") + e.what());
        }
        echo["frozen"] = {{"kappa1", spec.frozen.kappa1},
                          {"kappa2", spec.frozen.kappa2},
                          {"b", spec.frozen.b}};
    } else if (spec.command == "threshold-sweep") {
        spec.kappa1 = cfg::number(cfg::require(j, "kappa1", "config"), "config.kappa1");
        spec.kappa2 = cfg::number(cfg::require(j, "kappa2", "config"), "config.kappa2");
        if (!(spec.kappa1 > 0.0) || !(spec.kappa2 > 0.0))
            throw ConfigError("config.kappa1/kappa2: potentials must be positive");
        const nlohmann::json& bl = cfg::require(j, "b_list", "config");
        if (!bl.is_array() || bl.empty())
            throw ConfigError("config.b_list: expected a nonempty array of couplings");
        for (const auto& bv : bl) {
            const double b = cfg::number(bv, "config.b_list");
            if (!(b >= 0.0)) throw ConfigError("config.b_list: couplings must be nonnegative");
            spec.b_list.push_back(b);
        }
        echo["kappa1"] = spec.kappa1;
        echo["kappa2"] = spec.kappa2;
        echo["b_list"] = spec.b_list;
    } else if (spec.command == "sigma-map") {
        spec.dim = cfg::integer(cfg::require(j, "dim", "config"), "config.dim");
        if (spec.dim < 1 || spec.dim > 3)
            throw ConfigError("config.dim: dimension must be 1, 2 or 3");
        spec.V = cfg::potential(cfg::require(j, "V", "config"), "config.V");
        spec.W = cfg::potential(cfg::require(j, "W", "config"), "config.W");
        spec.b = cfg::number(cfg::require(j, "b", "config"), "config.b");
        if (!(spec.b >= 0.0)) throw ConfigError("config.b: coupling must be nonnegative");
        const nlohmann::json& r = cfg::require(j, "region", "config");
        spec.region.lo = cfg::point(cfg::require(r, "lo", "config.region"), spec.dim,
                                    "config.region.lo");
        spec.region.hi = cfg::point(cfg::require(r, "hi", "config.region"), spec.dim,
                                    "config.region.hi");
        for (int a = 0; a < spec.dim; ++a)
            if (!(spec.region.lo[a] < spec.region.hi[a]))
                throw ConfigError("config.region: lo must be strictly below hi per axis");
        spec.resolution = cfg::integer(cfg::require(j, "resolution", "config"),
                                       "config.resolution");
        if (spec.resolution < 2)
            throw ConfigError("config.resolution: need at least 2 nodes per axis");
        echo["dim"] = spec.dim;
        echo["V"] = to_json(spec.V);
        echo["W"] = to_json(spec.W);
        echo["b"] = spec.b;
        echo["region"] = {{"lo", cfg::point_json(spec.region.lo, spec.dim)},
                          {"hi", cfg::point_json(spec.region.hi, spec.dim)}};
        echo["resolution"] = spec.resolution;
    } else if (spec.command == "semiclassical") {
        spec.grid = cfg::grid(cfg::require(j, "grid", "config"), "config.grid");
        const nlohmann::json& m = cfg::require(j, "model", "config");
        spec.V = cfg::potential(cfg::require(m, "V", "config.model"), "config.model.V");
        spec.W = cfg::potential(cfg::require(m, "W", "config.model"), "config.model.W");
        spec.b = cfg::number(cfg::require(m, "b", "config.model"), "config.model.b");
        spec.alpha = m.contains("alpha")
                         ? cfg::number(m.at("alpha"), "config.model.alpha")
                         : std::min(inf_potential(spec.V), inf_potential(spec.W));
        spec.z_ref = cfg::point(cfg::require(j, "z_ref", "config"), spec.grid.dim,
                                "config.z_ref");
        for (int a = 0; a < spec.grid.dim; ++a)
            if (std::abs(spec.z_ref[a]) >= spec.grid.half_width)
                throw ConfigError("config.z_ref: reference point must lie inside the box");
        spec.schedule = cfg::schedule(j.contains("schedule") ? j.at("schedule")
                                                             : nlohmann::json::object(),
                                      "config.schedule");
        {
            ModelParams p;
            p.V = spec.V;
            p.W = spec.W;
            p.b = spec.b;
            p.alpha = spec.alpha;
            p.eps = spec.schedule.values.front();
            try {
                check_model(p);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("config.model: ") + e.what());
            }
            const double supVW =
                std::max(sup_potential(spec.V, spec.grid.dim, spec.grid.half_width),
                         sup_potential(spec.W, spec.grid.dim, spec.grid.half_width));
            const double floor = 4.0 * spec.grid.spacing * std::sqrt(supVW);
            if (spec.schedule.values.back() < floor)
                throw ConfigError(
                    "config.schedule: smallest eps " +
                    format_double(spec.schedule.values.back()) +
                    " violates the resolution floor eps >= 4*h*sqrt(sup potential) = " +
                    format_double(floor));
        }
        spec.copt.r_cut = j.value("r_cut", 0.0);
        spec.copt.flow_steps_first = j.value("flow_steps_first", 400);
        spec.copt.flow_steps_later = j.value("flow_steps_later", 120);
        spec.copt.inner_r = j.value("inner_r", 0.0);
        spec.copt.outer_r = j.value("outer_r", 0.0);
        spec.copt.profile_grid = j.contains("profile_grid")
                                     ? cfg::grid(j.at("profile_grid"), "config.profile_grid")
                                     : default_profile_grid(spec.grid.dim);
        if (spec.copt.r_cut < 0.0 || spec.copt.inner_r < 0.0 || spec.copt.outer_r < 0.0)
            throw ConfigError("config: r_cut/inner_r/outer_r must be nonnegative (0 = auto)");
        if (spec.copt.flow_steps_first < 0 || spec.copt.flow_steps_later < 0)
            throw ConfigError("config: flow step counts must be nonnegative");
        echo["grid"] = cfg::grid_json(spec.grid);
        echo["model"] = {{"V", to_json(spec.V)}, {"W", to_json(spec.W)},
                         {"b", spec.b}, {"alpha", spec.alpha}};
        echo["z_ref"] = cfg::point_json(spec.z_ref, spec.grid.dim);
        echo["schedule"] = {{"values", spec.schedule.values}};
        echo["r_cut"] = spec.copt.r_cut;
        echo["flow_steps_first"] = spec.copt.flow_steps_first;
        echo["flow_steps_later"] = spec.copt.flow_steps_later;
        echo["inner_r"] = spec.copt.inner_r;
        echo["outer_r"] = spec.copt.outer_r;
        echo["profile_grid"] = cfg::grid_json(spec.copt.profile_grid);
    }

    spec.echo = std::move(echo);
    return spec;
}

struct Report {
    nlohmann::json doc;
    std::map<std::string, std::string> csvs;  // file name -> payload
    bool solver_ok = true;                    // false: partial results (exit 3)
};

namespace detail {

inline std::string classification_cell(Classification c) { return to_string(c); }

// Fan an index range out over a fixed worker count; results land in
// caller-owned slots, so the output is independent of the thread count.
template <typename Fn>
inline void parallel_for(std::size_t n, int threads, Fn&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::future<void>> workers;
    const int w = std::min<std::size_t>(threads, n);
    for (int t = 0; t < w; ++t)
        workers.push_back(std::async(std::launch::async, [&, t]() {
            for (std::size_t i = t; i < n; i += w) fn(i);
        }));
    for (auto& f : workers) f.get();  // propagates the first worker exception
}

}  // namespace detail

inline Report run(const RunSpec& spec, int threads = 1) {
    if (threads < 1) throw ConfigError("threads: must be at least 1");
    const auto t0 = std::chrono::steady_clock::now();
    Report rep;
    rep.doc["tool"] = {{"name", "cnls"}, {"version", tool_version()}};
    rep.doc["command"] = spec.command;
    rep.doc["spec"] = spec.echo;
    rep.doc["cache_dir"] = cache_dir().string();

    if (spec.command == "ground-state") {
        GroundState gs = system_ground_state(spec.frozen, spec.grid, spec.seeds);
        rep.doc["payload"] = {{"energy", gs.energy},
                              {"classification", to_string(gs.classification)},
                              {"nehari_residual", gs.nehari_residual},
                              {"el_residual", gs.el_residual},
                              {"sup_u", gs.sup_u},
                              {"sup_v", gs.sup_v},
                              {"seed", gs.seed_id}};
        CsvWriter csv({"kappa1", "kappa2", "b", "energy", "classification",
                       "nehari_residual", "el_residual", "sup_u", "sup_v", "seed"});
        csv.row({format_double(spec.frozen.kappa1), format_double(spec.frozen.kappa2),
                 format_double(spec.frozen.b), format_double(gs.energy),
                 to_string(gs.classification), format_double(gs.nehari_residual),
                 format_double(gs.el_residual), format_double(gs.sup_u),
                 format_double(gs.sup_v), gs.seed_id});
        rep.csvs["ground_state.csv"] = csv.body;
    } else if (spec.command == "threshold-sweep") {
        const LocalThresholds lt = local_thresholds(spec.kappa1, spec.kappa2);
        std::vector<GroundState> states(spec.b_list.size());
        // first point runs alone so the scalar-profile cache is warm before fan-out
        states[0] = system_ground_state({spec.kappa1, spec.kappa2, spec.b_list[0]},
                                        spec.grid, spec.seeds);
        detail::parallel_for(spec.b_list.size() - 1, threads, [&](std::size_t i) {
            states[i + 1] = system_ground_state({spec.kappa1, spec.kappa2, spec.b_list[i + 1]},
                                                spec.grid, spec.seeds);
        });
        CsvWriter csv({"b", "energy", "classification", "sup_u", "sup_v", "b0", "b1",
                       "consistent"});
        nlohmann::json table = nlohmann::json::array();
        for (std::size_t i = 0; i < spec.b_list.size(); ++i) {
            const double b = spec.b_list[i];
            const GroundState& gs = states[i];
            const bool scalar = gs.classification != Classification::Vector;
            bool consistent = true;
            if (b < lt.b0) consistent = scalar;
            if (b > lt.b1) consistent = !scalar;
            csv.row({format_double(b), format_double(gs.energy),
                     to_string(gs.classification), format_double(gs.sup_u),
                     format_double(gs.sup_v), format_double(lt.b0), format_double(lt.b1),
                     consistent ? "true" : "false"});
            table.push_back({{"b", b},
                             {"energy", gs.energy},
                             {"classification", to_string(gs.classification)},
                             {"sup_u", gs.sup_u},
                             {"sup_v", gs.sup_v},
                             {"consistent", consistent}});
        }
        rep.doc["payload"] = {{"b0", lt.b0}, {"b1", lt.b1}, {"rows", table}};
        rep.csvs["thresholds.csv"] = csv.body;
    } else if (spec.command == "sigma-map") {
        SigmaEngine eng(spec.dim);
        eng.ensure_row(spec.b);  // cache is immutable during parallel sampling
        eng.gamma();
        SigmaMap map;
        map.region = spec.region;
        map.resolution = spec.resolution;
        map.dim = spec.dim;
        std::size_t total = 1;
        for (int a = 0; a < spec.dim; ++a) total *= static_cast<std::size_t>(spec.resolution);
        map.samples.resize(total);
        detail::parallel_for(total, threads, [&](std::size_t k) {
            std::array<int, 3> idx{0, 0, 0};
            std::size_t rest = k;
            for (int a = spec.dim - 1; a >= 0; --a) {
                idx[a] = static_cast<int>(rest % spec.resolution);
                rest /= spec.resolution;
            }
            Vec3 z{0.0, 0.0, 0.0};
            for (int a = 0; a < spec.dim; ++a)
                z[a] = spec.region.lo[a] +
                       (spec.region.hi[a] - spec.region.lo[a]) * idx[a] /
                           (spec.resolution - 1);
            map.samples[k] = sigma_sample(eng, spec.V, spec.W, spec.b, z);
        });
        std::vector<std::string> cols;
        for (int a = 0; a < spec.dim; ++a) cols.push_back("z_" + std::to_string(a + 1));
        for (const char* c : {"kappa1", "kappa2", "sigma", "n_ground_states",
                              "grad_cand_min_norm", "clarke_critical"})
            cols.push_back(c);
        CsvWriter csv(cols);
        std::size_t n_critical = 0;
        double sigma_min = 1e300;
        for (const SigmaSample& s : map.samples) {
            double min_norm = 1e300;
            for (const Vec3& gc : s.gradient_candidates)
                min_norm = std::min(min_norm, norm(gc));
            std::vector<std::string> cells;
            for (int a = 0; a < spec.dim; ++a) cells.push_back(format_double(s.z[a]));
            cells.push_back(format_double(s.kappa1));
            cells.push_back(format_double(s.kappa2));
            cells.push_back(format_double(s.sigma));
            cells.push_back(std::to_string(s.gradient_candidates.size()));
            cells.push_back(format_double(min_norm));
            cells.push_back(s.clarke_critical ? "true" : "false");
            csv.row(cells);
            n_critical += s.clarke_critical ? 1 : 0;
            sigma_min = std::min(sigma_min, s.sigma);
        }
        rep.doc["payload"] = {{"samples", map.samples.size()},
                              {"clarke_critical_count", n_critical},
                              {"sigma_min", sigma_min}};
        rep.csvs["sigma_map.csv"] = csv.body;
    } else if (spec.command == "semiclassical") {
        ModelParams p;
        p.V = spec.V;
        p.W = spec.W;
        p.b = spec.b;
        p.alpha = spec.alpha;
        p.eps = spec.schedule.values.front();
        SigmaEngine eng(spec.grid.dim);
        SigmaEngine* engp = spec.b > 0.0 ? &eng : nullptr;
        ConcentrationReport cr =
            continuation(p, spec.z_ref, spec.schedule, spec.grid, spec.copt, engp);
        std::vector<std::string> cols = {"eps"};
        for (int a = 0; a < spec.grid.dim; ++a)
            cols.push_back("x_eps_" + std::to_string(a + 1));
        for (const char* c : {"gap", "u_at_max", "v_at_max", "mu1", "mu2", "energy_ratio",
                              "balance_norm", "profile_distance", "verdict"})
            cols.push_back(c);
        CsvWriter csv(cols);
        for (const ConcentrationRow& r : cr.rows) {
            std::vector<std::string> cells = {format_double(r.eps)};
            for (int a = 0; a < spec.grid.dim; ++a)
                cells.push_back(format_double(r.x_eps[a]));
            cells.push_back(format_double(r.gap));
            cells.push_back(format_double(r.u_at_max));
            cells.push_back(format_double(r.v_at_max));
            cells.push_back(format_double(r.mu1));
            cells.push_back(format_double(r.mu2));
            cells.push_back(format_double(r.energy_ratio));
            cells.push_back(format_double(r.balance_norm));
            cells.push_back(format_double(r.profile_distance));
            cells.push_back(r.verdict);
            csv.row(cells);
        }
        rep.csvs["concentration.csv"] = csv.body;
        rep.doc["payload"] = {{"final_verdict", cr.final_verdict},
                              {"z_min", cfg::point_json(cr.z_min, spec.grid.dim)},
                              {"sigma_ref", cr.sigma_ref},
                              {"completed", cr.completed},
                              {"rows", cr.rows.size()}};
        if (!cr.completed) {
            rep.doc["payload"]["error"] = cr.error;
            rep.solver_ok = false;
        }
    } else if (spec.command == "validate") {
        nlohmann::json props = nlohmann::json::array();
        CsvWriter csv({"property", "pass"});
        bool all = true;
        auto record = [&](const std::string& name, bool pass, const std::string& detail) {
            props.push_back({{"name", name}, {"pass", pass}, {"detail", detail}});
            csv.row({name, pass ? "true" : "false"});
            all = all && pass;
        };
        {
            const LocalThresholds a = local_thresholds(1.3, 0.7);
            const LocalThresholds b = local_thresholds(0.7, 1.3);
            record("threshold-swap-symmetry", a.b0 == b.b0 && a.b1 == b.b1,
                   "b0=" + format_double(a.b0) + " b1=" + format_double(a.b1));
        }
        {
            bool ok = std::abs(h_func(1.0) - 1.0) < 1e-12;
            for (double s : {0.5, 0.8, 1.2, 2.0})
                ok = ok && std::max(h_func(s), h_func(1.0 / s)) > 1.0;
            record("h-symmetrized-at-least-one", ok, "h(1)=" + format_double(h_func(1.0)));
        }
        {
            bool ok = true;
            for (double r : {1.0, 1.3, 2.1, 4.0}) {
                const LocalThresholds lt = local_thresholds(1.0, r);
                ok = ok && lt.b0 >= 1.0 - 1e-12 && lt.b0 <= lt.b1 + 1e-12;
            }
            record("b0-between-one-and-b1", ok, "checked ratios 1, 1.3, 2.1, 4");
        }
        {
            const Grid g = make_grid(1, 20.0, 2049);
            const Field u = Field::sample(g, [](const Vec3& x) {
                return std::sqrt(2.0) / std::cosh(x[0]);
            });
            const double m = integrate(u, 2);
            record("soliton-quadrature", std::abs(m - 4.0) < 1e-6,
                   "int U0^2 = " + format_double(m));
        }
        {
            const Grid g = make_grid(1, 20.0, 2049);
            const Field u = scalar_ground_state(1.0, g);
            const double e = energy_frozen(State(u, Field(g)), {1.0, 1.0, 0.0});
            record("scalar-ground-energy", std::abs(e - 4.0 / 3.0) < 1e-4,
                   "energy = " + format_double(e));
        }
        {
            const Grid g = make_grid(1, 20.0, 2049);
            State s(g);
            s.u = Field::sample(g, [](const Vec3& x) { return std::exp(-x[0] * x[0]); });
            s.v = s.u;
            const FrozenParams fp{1.0, 1.2, 0.4};
            ThetaResult tr = theta_project(s, fp);
            const double nv = nehari_value(tr.projected, fp);
            record("theta-projection-on-nehari", std::abs(nv) < 1e-8 * tr.theta,
                   "nehari value = " + format_double(nv));
        }
        {
            SigmaSample s;
            s.gradient_candidates = {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
            const ClarkeReport r = clarke_critical_test(s, 1);
            record("clarke-hull-margin", !r.critical && std::abs(r.hull_margin - 1.0) < 1e-12,
                   "margin = " + format_double(r.hull_margin));
        }
        rep.doc["payload"] = {{"pass", all}, {"properties", props}};
        rep.csvs["validate.csv"] = csv.body;
        if (!all) rep.solver_ok = false;
    }

    const auto t1 = std::chrono::steady_clock::now();
    rep.doc["timings"] = {
        {"total_seconds", std::chrono::duration<double>(t1 - t0).count()}};
    return rep;
}

inline std::vector<std::filesystem::path> write_outputs(const Report& rep,
                                                        const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const std::filesystem::path rp = dir / "report.json";
    write_file_atomic(rp, rep.doc.dump(2) + "\n");
    written.push_back(rp);
    for (const auto& [name, body] : rep.csvs) {
        const std::filesystem::path p = dir / name;
        write_file_atomic(p, body);
        written.push_back(p);
    }
    return written;
}

}  // namespace cnls
