#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include <cnls/sigma.hpp>

#include "oracles.hpp"

using namespace cnls;

namespace {
SigmaEngine& engine1d() {
    static SigmaEngine eng(1);
    return eng;
}
}  // namespace

TEST_CASE("sigma_frozen reproduces 1D closed forms", "[sigma]") {
    Grid g = make_grid(1, 20.0, 2049);
    CHECK(sigma_frozen({1.0, 1.0, 0.0}, g) == Catch::Approx(4.0 / 3.0).margin(1e-4));
    CHECK(sigma_frozen({1.0, 1.0, 2.0}, g) == Catch::Approx(8.0 / 9.0).margin(1e-4));
    Grid gs = make_grid(1, 10.0, 2049);
    CHECK(sigma_frozen({4.0, 4.0, 2.0}, gs) == Catch::Approx(64.0 / 9.0).margin(1e-3 * 64.0 / 9.0));
}

TEST_CASE("sigma_reduced agrees with direct frozen solves", "[sigma]") {
    SigmaEngine& eng = engine1d();
    // omega2 = 1 reduces to pure scaling
    const double k = 1.44;
    const double direct = sigma_frozen({k, k, 0.3}, make_grid(1, 20.0 / std::sqrt(k), 2049));
    CHECK(eng.sigma_reduced({k, k, 0.3}) == Catch::Approx(direct).epsilon(1e-3));

    // swap symmetry is exact by construction
    CHECK(eng.sigma_reduced({2.0, 0.7, 0.3}) == eng.sigma_reduced({0.7, 2.0, 0.3}));

    // decoupled scalar branch picks the smaller kappa: Gamma_1 * min^{3/2}
    CHECK(eng.sigma_reduced({4.0, 1.0, 0.0}) == Catch::Approx(4.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("scalar-branch formula below b0", "[sigma]") {
    SigmaEngine& eng = engine1d();
    const double gamma = eng.gamma();
    CHECK(gamma == Catch::Approx(4.0 / 3.0).margin(1e-4));
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> dk(0.5, 2.0);
    for (int i = 0; i < 8; ++i) {
        const double k1 = dk(rng), k2 = dk(rng);
        const double s = eng.sigma_reduced({k1, k2, 0.0});
        CHECK(s == Catch::Approx(gamma * std::pow(std::min(k1, k2), 1.5)).epsilon(2e-3));
    }
}

TEST_CASE("sigma_reduced is monotone in the potentials", "[sigma]") {
    SigmaEngine& eng = engine1d();
    CHECK(eng.sigma_reduced({1.2, 1.3, 0.3}) >= eng.sigma_reduced({1.0, 1.0, 0.3}) - 1e-9);
    CHECK(eng.sigma_reduced({1.9, 0.9, 0.0}) >= eng.sigma_reduced({1.7, 0.8, 0.0}) - 1e-9);
    CHECK_THROWS_AS(eng.sigma_reduced({1.0, 0.01, 0.0}), std::out_of_range);
}

TEST_CASE("directional derivative bounds", "[sigma]") {
    SigmaSample s;
    s.gradient_candidates = {{2.0, 0.0, 0.0}};
    DerivBounds b = dir_deriv_bounds({1.0, 0.0, 0.0}, s);
    CHECK(b.lower == 2.0);
    CHECK(b.upper == 2.0);

    s.gradient_candidates.push_back({-1.0, 0.0, 0.0});
    b = dir_deriv_bounds({1.0, 0.0, 0.0}, s);
    CHECK(b.lower == -1.0);
    CHECK(b.upper == 2.0);

    s.gradient_candidates = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    b = dir_deriv_bounds({1.0, 0.0, 0.0}, s);
    CHECK(b.lower == 0.0);
    CHECK(b.upper == 0.0);

    SigmaSample empty;
    CHECK_THROWS_AS(dir_deriv_bounds({1.0, 0.0, 0.0}, empty), std::invalid_argument);
}

TEST_CASE("clarke hull membership", "[sigma]") {
    SigmaSample s;
    s.gradient_candidates = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    ClarkeReport r = clarke_critical_test(s, 3);
    CHECK(r.critical);
    CHECK(r.hull_margin == Catch::Approx(0.0).margin(1e-12));

    s.gradient_candidates = {{0.3, 0.4, 0.0}};
    r = clarke_critical_test(s, 3);
    CHECK_FALSE(r.critical);
    CHECK(r.hull_margin == Catch::Approx(0.5).epsilon(1e-12));

    s.gradient_candidates = {{0.3, 0.4, 0.0}, {-0.3, -0.4, 0.0}};
    r = clarke_critical_test(s, 3);
    CHECK(r.critical);

    s.gradient_candidates = {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
    r = clarke_critical_test(s, 1);
    CHECK_FALSE(r.critical);
    CHECK(r.hull_margin == Catch::Approx(1.0).epsilon(1e-12));

    // 2D triangle strictly containing the origin
    s.gradient_candidates = {{1.0, 0.1, 0.0}, {-1.0, 0.5, 0.0}, {0.0, -1.0, 0.0}};
    r = clarke_critical_test(s, 2);
    CHECK(r.critical);

    SigmaSample empty;
    CHECK_THROWS_AS(clarke_critical_test(empty, 2), std::invalid_argument);
}

TEST_CASE("finite differences sit inside the derivative bounds", "[sigma]") {
    SigmaEngine& eng = engine1d();
    auto V = PotentialSpec::capped_quadratic(1.0, 0.1, {0.0, 0.0, 0.0}, 9.0);
    auto W = PotentialSpec::shifted(V, 0.5);
    CHECK_THROWS_AS(finite_diff_sigma_grad(eng, V, W, 0.0, {0.5, 0.0, 0.0}, 0.0),
                    std::invalid_argument);
    const double step = 0.01;
    for (double z1 : {0.4, 0.8, 1.3, -0.9, 2.0}) {
        const Vec3 z{z1, 0.0, 0.0};
        SigmaSample s = sigma_sample(eng, V, W, 0.0, z);
        const Vec3 fd = finite_diff_sigma_grad(eng, V, W, 0.0, z, step);
        DerivBounds bnd = dir_deriv_bounds({1.0, 0.0, 0.0}, s);
        const double slack = 1e-3 + 5.0 * step * step;
        CHECK(fd[0] >= bnd.lower - slack);
        CHECK(fd[0] <= bnd.upper + slack);
    }
}

TEST_CASE("sigma_map structure and minimizer", "[sigma]") {
    SigmaEngine& eng = engine1d();
    auto Vc = PotentialSpec::constant(1.3);
    auto Wc = PotentialSpec::constant(1.6);
    BoxSpec region{{-2.0, 0.0, 0.0}, {2.0, 0.0, 0.0}};
    SigmaMap mc = sigma_map(eng, Vc, Wc, 0.3, region, 9);
    REQUIRE(mc.samples.size() == 9);
    for (const SigmaSample& s : mc.samples) CHECK(s.sigma == mc.samples[0].sigma);

    auto V = PotentialSpec::capped_quadratic(1.0, 0.2, {0.37, 0.0, 0.0}, 9.0);
    auto W = PotentialSpec::shifted(V, 0.5);
    SigmaMap m = sigma_map(eng, V, W, 0.0, region, 21);
    REQUIRE(m.samples.size() == 21);
    std::size_t best = 0;
    double bz = 1e300;
    for (std::size_t i = 0; i < m.samples.size(); ++i)
        if (m.samples[i].sigma < bz) {
            bz = m.samples[i].sigma;
            best = i;
        }
    // minimized at the node nearest the well center 0.37
    double nearest = 1e300;
    std::size_t nearest_i = 0;
    for (std::size_t i = 0; i < m.samples.size(); ++i) {
        const double d = std::abs(m.samples[i].z[0] - 0.37);
        if (d < nearest) {
            nearest = d;
            nearest_i = i;
        }
    }
    CHECK(best == nearest_i);

    // W = V + c: map ordering identical to V's ordering
    for (std::size_t i = 0; i + 1 < m.samples.size(); ++i) {
        const double v1 = m.samples[i].kappa1, v2 = m.samples[i + 1].kappa1;
        if (v1 < v2)
            CHECK(m.samples[i].sigma <= m.samples[i + 1].sigma + 1e-9);
        else if (v1 > v2)
            CHECK(m.samples[i].sigma >= m.samples[i + 1].sigma - 1e-9);
    }

    // empirical local Lipschitz bound along the sampled segment
    double maxcand = 0.0;
    for (const SigmaSample& s : m.samples)
        for (const Vec3& gc : s.gradient_candidates) maxcand = std::max(maxcand, norm(gc));
    for (std::size_t i = 0; i + 1 < m.samples.size(); ++i) {
        const double dz = std::abs(m.samples[i + 1].z[0] - m.samples[i].z[0]);
        CHECK(std::abs(m.samples[i + 1].sigma - m.samples[i].sigma) <=
              1.2 * maxcand * dz + 1e-9);
    }
}
