#include <cmath>

#include <doctest.h>

#include "rfl/diagnostics.hpp"
#include "rfl/mmspace.hpp"

using namespace rfl;

TEST_CASE("rfex on the static sphere is the Ricci rate") {
    auto fam = make_static_family(make_sphere(32));
    int x = 16 * 64, y = x + 2;
    CHECK(rfex(fam, 0.5, x, y) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("rfex vanishes on the flat torus") {
    auto fam = make_static_family(make_flat_torus(24));
    CHECK(rfex(fam, 0.5, 10, 14) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("sample_pairs respects bounds and count") {
    DiscreteMMSpace sph = make_sphere(24);
    auto pairs = sample_pairs(sph, 12, 0.3, 0.8, 42);
    CHECK(pairs.size() == 12);
    for (auto [x, y] : pairs) {
        double d = sph.dist(x, y);
        CHECK(d >= 0.3);
        CHECK(d <= 0.8);
    }
    // Deterministic in the seed.
    auto again = sample_pairs(sph, 12, 0.3, 0.8, 42);
    CHECK(pairs == again);
}

TEST_CASE("backsteps are decreasing and below the ceiling") {
    auto fam = make_shrinking_sphere(16);
    DiagnosticConfig cfg;
    auto bs = cfg.backsteps_for(fam, 0.2);
    REQUIRE(bs.size() == static_cast<size_t>(cfg.backstep_count));
    CHECK(bs.front() <= cfg.delta_max + 1e-12);
    for (size_t i = 1; i < bs.size(); ++i) CHECK(bs[i] < bs[i - 1]);
}

TEST_CASE("theta_star throws on a mesh too coarse to localize") {
    auto fam = make_static_family(make_cone2d(6, 8, M_PI / 2, 0.5));
    DiagnosticConfig cfg;
    CHECK_THROWS_AS(theta_star(fam, 0.5, 0, cfg), diagnostic_error);
}

TEST_CASE("rough_sub rejects pair sets outside the localization ball") {
    auto fam = make_static_family(make_sphere(16));
    DiagnosticConfig cfg;
    std::vector<std::pair<int, int>> far = {{1 * 32, 9 * 32}};
    CHECK_THROWS_AS(rough_sub_check(fam, 0.5, far, cfg.sub_eps, cfg),
                    diagnostic_error);
}

TEST_CASE("rough_super needs s < t") {
    auto fam = make_static_family(make_flat_torus(12));
    DiagnosticConfig cfg;
    std::vector<std::pair<double, double>> st = {{0.6, 0.5}};
    std::vector<std::pair<int, int>> pairs = {{0, 5}};
    CHECK_THROWS_AS(rough_super_check(fam, st, pairs, cfg), diagnostic_error);
}

TEST_CASE("log lipschitz constants vanish for static families") {
    auto fam = make_static_family(make_flat_torus(12));
    std::vector<double> grid = {0.1, 0.3, 0.5, 0.7, 0.9};
    auto [cd, cm] = log_lipschitz_constants(fam, grid, 50, 3);
    CHECK(cd == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cm == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("log lipschitz sees the homothetic rate") {
    auto fam = make_shrinking_sphere(12);
    std::vector<double> grid = {0.05, 0.15, 0.25, 0.35};
    auto [cd, cm] = log_lipschitz_constants(fam, grid, 50, 3);
    CHECK(cd > 0.5); // |d/dt log c| = 1/(1-2t) >= 1
    CHECK(cd < 10.0);
}
