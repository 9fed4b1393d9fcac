#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <cnls/model.hpp>
#include <cnls/potential.hpp>

#include "oracles.hpp"

using namespace cnls;

TEST_CASE("potential evaluation per variant", "[potential]") {
    auto c = PotentialSpec::constant(2.5);
    CHECK(eval_potential(c, {3.0, -1.0, 0.5}) == 2.5);

    auto q = PotentialSpec::capped_quadratic(1.0, 1.0, {0.0, 0.0, 0.0}, 9.0);
    CHECK(eval_potential(q, {0.0, 0.0, 0.0}) == 1.0);
    CHECK(eval_potential(q, {10.0, 0.0, 0.0}) == 10.0);  // capped at base + 9
    CHECK(eval_potential(q, {2.0, 0.0, 0.0}) == Catch::Approx(5.0));

    auto s = PotentialSpec::shifted(PotentialSpec::constant(1.0), 0.5);
    CHECK(eval_potential(s, {7.0, 7.0, 7.0}) == 1.5);

    auto w = PotentialSpec::double_well(1.0, 2.0, {{-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}}, 0.5, 9.0);
    CHECK(eval_potential(w, {1.0, 0.0, 0.0}) == Catch::Approx(1.0));
    CHECK(eval_potential(w, {50.0, 0.0, 0.0}) == Catch::Approx(3.0));
}

TEST_CASE("potential gradients and bounds", "[potential]") {
    auto q = PotentialSpec::capped_quadratic(1.0, 0.1, {0.5, 0.0, 0.0}, 9.0);
    Vec3 g1 = grad_potential(q, {1.5, 2.0, 0.0});
    CHECK(g1[0] == Catch::Approx(0.2 * 1.0));
    CHECK(g1[1] == Catch::Approx(0.2 * 2.0));
    CHECK(grad_potential(q, {100.0, 0.0, 0.0})[0] == 0.0);  // beyond the cap

    CHECK(inf_potential(q) == 1.0);
    CHECK(sup_potential(q, 1, 2.0) == Catch::Approx(1.0 + 0.1 * 2.5 * 2.5));
    CHECK(sup_potential(q, 3, 20.0) == 10.0);

    auto s = PotentialSpec::shifted(q, 0.5);
    CHECK(inf_potential(s) == 1.5);
    CHECK(grad_potential(s, {1.5, 0.0, 0.0})[0] == Catch::Approx(0.2));
}

TEST_CASE("potential json round trip is a fixed point", "[potential]") {
    auto spec = PotentialSpec::shifted(
        PotentialSpec::capped_quadratic(1.0, 0.1, {0.06, 0.04, -0.03}, 9.0), 0.5);
    auto j = to_json(spec);
    auto back = potential_from_json(j);
    CHECK(to_json(back) == j);
    Grid g = make_grid(3, 1.0, 9);
    CHECK(eval_potential(back, {0.2, -0.1, 0.0}) ==
          eval_potential(spec, {0.2, -0.1, 0.0}));
    Field f = sample_potential(spec, g);
    CHECK(f.values.front() == Catch::Approx(eval_potential(spec, {-1.0, -1.0, -1.0})));
}

namespace {
State u0_state(const Grid& g) {
    State s(g);
    s.u = oracles::sampled_u0(g);
    return s;
}
}  // namespace

TEST_CASE("frozen energy matches soliton closed forms", "[model]") {
    Grid g = make_grid(1, 20.0, 4097);
    FrozenParams p{1.0, 1.0, 0.7};
    CHECK(energy_frozen(State(g), p) == 0.0);
    State s = u0_state(g);
    CHECK(energy_frozen(s, p) == Catch::Approx(oracles::u0_energy).margin(1e-5));

    // kappa-scaled profile sqrt(k) U0(sqrt(k) x): energy k^{3/2} * 4/3 in 1D
    const double k = 4.0;
    State sk(g);
    sk.u = Field::sample(g, [&](const Vec3& x) {
        return std::sqrt(k) * oracles::u0(std::sqrt(k) * x[0]);
    });
    FrozenParams pk{k, 1.0, 0.0};
    CHECK(energy_frozen(sk, pk) ==
          Catch::Approx(std::pow(k, 1.5) * oracles::u0_energy).epsilon(1e-4));
}

TEST_CASE("eps energy coincides with frozen energy for constant data", "[model]") {
    Grid g = make_grid(1, 20.0, 2049);
    State s = u0_state(g);
    FrozenParams fp{1.3, 2.1, 0.4};
    ModelParams mp{PotentialSpec::constant(1.3), PotentialSpec::constant(2.1), 0.4, 1.0, 1.0};
    check_model(mp);
    Field Vg = sample_potential(mp.V, g), Wg = sample_potential(mp.W, g);
    CHECK(energy_eps(s, mp, Vg, Wg) == Catch::Approx(energy_frozen(s, fp)).epsilon(1e-14));
}

TEST_CASE("nehari value and theta projection", "[model]") {
    Grid g = make_grid(1, 20.0, 4097);
    FrozenParams p{1.0, 1.0, 0.3};
    State s = u0_state(g);
    State s2 = s;
    for (auto& x : s2.u.values) x *= 2.0;
    CHECK(nehari_value(s2, p) == Catch::Approx(-64.0).margin(1e-4));
    CHECK_THROWS_AS(nehari_value(State(g), p), std::invalid_argument);

    ThetaResult tr = theta_project(s2, p);
    CHECK(tr.theta == Catch::Approx(0.5).margin(1e-6));
    CHECK(std::abs(nehari_value(tr.projected, p)) < 1e-10 * 64.0);

    ThetaResult again = theta_project(tr.projected, p);
    CHECK(again.theta == Catch::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(theta_project(State(g), p), std::invalid_argument);
}

TEST_CASE("projected energy maximizes the ray", "[model]") {
    Grid g = make_grid(1, 10.0, 257);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    FrozenParams p{1.2, 0.8, 0.6};
    State s(g);
    s.u = Field::sample(g, [&](const Vec3& x) { return dist(rng) * std::exp(-x[0] * x[0]); });
    s.v = Field::sample(g, [&](const Vec3& x) { return dist(rng) * std::exp(-0.5 * x[0] * x[0]); });
    ThetaResult tr = theta_project(s, p);
    const double emax = energy_frozen(tr.projected, p);
    for (int i = 1; i <= 60; ++i) {
        const double t = 3.0 * tr.theta * i / 60.0;
        State st = s;
        for (auto& x : st.u.values) x *= t;
        for (auto& x : st.v.values) x *= t;
        CHECK(energy_frozen(st, p) <= emax * (1.0 + 1e-6) + 1e-12);
    }
}

TEST_CASE("strong-form residual is small on the sampled soliton", "[model]") {
    Grid g = make_grid(1, 20.0, 4097);
    State s = u0_state(g);
    FrozenParams p{1.0, 1.0, 0.0};
    State r = residual_frozen(s, p);
    CHECK(max_abs(r.u) < 2e-4);  // second-order truncation of the stencil
    CHECK(max_abs(r.v) == 0.0);
    State z(g);
    State rz = residual_frozen(z, p);
    CHECK(max_abs(rz) == 0.0);
}

TEST_CASE("h function branches", "[model][thresholds]") {
    CHECK(h_func(1.0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(h_func(4.0) == Catch::Approx(4.75).margin(1e-12));
    CHECK(h_func(0.25) == Catch::Approx(0.765625).margin(1e-12));
    CHECK_THROWS_AS(h_func(0.0), std::invalid_argument);
    CHECK_THROWS_AS(h_func(-2.0), std::invalid_argument);

    // the two branches agree at their crossover points
    auto diff = [](double s) {
        const double t = 7.0 + 1.0 / (s * s);
        return (s / 32.0) * t * t - 1.0 - (s * s + 3.0) / 4.0;
    };
    for (auto [lo, hi] : {std::pair{0.3, 0.95}, std::pair{0.95, 1.05}}) {
        double a = lo, b = hi;
        REQUIRE(diff(a) * diff(b) <= 0.0);
        for (int i = 0; i < 200; ++i) {
            const double m = 0.5 * (a + b);
            (diff(a) * diff(m) <= 0.0 ? b : a) = m;
        }
        const double s = 0.5 * (a + b);
        const double b1 = (s / 32.0) * std::pow(7.0 + 1.0 / (s * s), 2) - 1.0;
        const double b2 = (s * s + 3.0) / 4.0;
        CHECK(b1 == Catch::Approx(b2).epsilon(1e-9));
        CHECK(h_func(s) == Catch::Approx(std::min(b1, b2)).epsilon(1e-12));
    }
}

TEST_CASE("local thresholds", "[model][thresholds]") {
    LocalThresholds t = local_thresholds(2.7, 2.7);
    CHECK(t.b_z == Catch::Approx(1.0).margin(1e-12));
    CHECK(t.b0 == Catch::Approx(1.0).margin(1e-12));
    CHECK(t.b1 == Catch::Approx(1.0).margin(1e-12));

    LocalThresholds t2 = local_thresholds(1.0, 16.0);
    CHECK(t2.b_z == Catch::Approx(2.0).margin(1e-12));
    CHECK(t2.b0 == Catch::Approx(2.0).margin(1e-12));
    CHECK(t2.b1 == Catch::Approx(4.75).margin(1e-12));

    LocalThresholds t3 = local_thresholds(16.0, 1.0);
    CHECK(t3.b_z == t2.b_z);
    CHECK(t3.b1 == t2.b1);
    CHECK_THROWS_AS(local_thresholds(-1.0, 1.0), std::invalid_argument);

    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> dist(0.1, 10.0);
    for (int i = 0; i < 50; ++i) {
        const double k1 = dist(rng), k2 = dist(rng);
        LocalThresholds r = local_thresholds(k1, k2);
        CHECK(r.b0 >= 1.0);
        CHECK(r.b0 <= r.b1 + 1e-12);
        LocalThresholds rs = local_thresholds(k2, k1);
        CHECK(r.b0 == rs.b0);
        CHECK(r.b1 == rs.b1);
    }
}

TEST_CASE("global thresholds", "[model][thresholds]") {
    GlobalThresholds g1 = global_thresholds(1.0, 1.0, 1.0);
    CHECK(g1.b0_inf == Catch::Approx(1.0).margin(1e-12));
    CHECK(g1.b1_inf == Catch::Approx(1.0).margin(1e-12));
    CHECK(g1.b2_inf == Catch::Approx(1.0).margin(1e-12));

    GlobalThresholds g2 = global_thresholds(1.0, 16.0, 16.0);
    CHECK(g2.b0_inf == Catch::Approx(0.5).margin(1e-12));
    CHECK(g2.b1_inf == Catch::Approx(2.0).margin(1e-12));
    CHECK(g2.b2_inf == Catch::Approx(4.75).margin(1e-12));

    GlobalThresholds g3 = global_thresholds(1.0, 16.0, 1.0);
    CHECK(g3.b0_inf == Catch::Approx(1.0).margin(1e-12));
    CHECK(g3.b1_inf == Catch::Approx(2.0).margin(1e-12));
    CHECK(g3.b2_inf == Catch::Approx(4.75).margin(1e-12));

    CHECK_THROWS_AS(global_thresholds(2.0, 1.0, 1.5), std::invalid_argument);
}

TEST_CASE("pohozaev identity on the 1D soliton", "[model]") {
    Grid g = make_grid(1, 20.0, 4097);
    State s = u0_state(g);
    FrozenParams p{1.0, 1.0, 0.0};
    CHECK(pohozaev_residual(s, p) < 1e-5);

    // generic non-solution violates the identity at order one
    State bad(g);
    bad.u = Field::sample(g, [](const Vec3& x) { return 2.0 * std::exp(-0.1 * x[0] * x[0]); });
    CHECK(pohozaev_residual(bad, p) > 0.1);
}
