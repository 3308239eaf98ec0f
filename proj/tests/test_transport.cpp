#include <cmath>
#include <random>

#include <doctest.h>

#include "rfl/mmspace.hpp"
#include "rfl/transport.hpp"

using namespace rfl;

namespace {
ProbMeasure random_measure(const DiscreteMMSpace& sp, int support,
                           std::mt19937_64& rng) {
    std::vector<double> w(sp.n_points, 0.0);
    std::uniform_int_distribution<int> atom(0, sp.n_points - 1);
    std::uniform_real_distribution<double> mass(0.1, 1.0);
    for (int k = 0; k < support; ++k) w[atom(rng)] += mass(rng);
    return measure_from_weights(std::move(w));
}
} // namespace

TEST_CASE("delta to delta is the ground distance") {
    DiscreteMMSpace sp = make_flat_torus(12);
    auto plan = exact_lp(sp, delta_measure(sp, 3), delta_measure(sp, 70));
    CHECK(std::sqrt(plan.cost) == doctest::Approx(sp.dist(3, 70)).epsilon(1e-12));
    REQUIRE(plan.entries.size() == 1);
    CHECK(plan.entries[0].mass == doctest::Approx(1.0));
}

TEST_CASE("plan marginals match inputs") {
    DiscreteMMSpace sp = make_sphere(10);
    std::mt19937_64 rng(5);
    ProbMeasure a = random_measure(sp, 25, rng);
    ProbMeasure b = random_measure(sp, 25, rng);
    auto plan = exact_lp(sp, a, b);
    auto row = plan.row_marginal(sp.n_points);
    auto col = plan.col_marginal(sp.n_points);
    double worst = 0.0;
    for (int i = 0; i < sp.n_points; ++i) {
        worst = std::max(worst, std::fabs(row[i] - a.w[i]));
        worst = std::max(worst, std::fabs(col[i] - b.w[i]));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("w2 metric axioms on random measures") {
    DiscreteMMSpace sp = make_sphere(10);
    std::mt19937_64 rng(17);
    std::vector<ProbMeasure> ms;
    for (int i = 0; i < 3; ++i) ms.push_back(random_measure(sp, 20, rng));
    for (const auto& m : ms) CHECK(w2(sp, m, m) == doctest::Approx(0.0));
    double d01 = w2(sp, ms[0], ms[1]);
    double d10 = w2(sp, ms[1], ms[0]);
    double d02 = w2(sp, ms[0], ms[2]);
    double d12 = w2(sp, ms[1], ms[2]);
    CHECK(d01 == doctest::Approx(d10).epsilon(1e-10));
    CHECK(d01 <= d02 + d12 + 1e-9);
    CHECK(d01 > 0.0);
}

TEST_CASE("sinkhorn approximates the lp value") {
    DiscreteMMSpace sp = make_sphere(10);
    std::mt19937_64 rng(23);
    ProbMeasure a = random_measure(sp, 25, rng);
    ProbMeasure b = random_measure(sp, 25, rng);
    double lp = exact_lp(sp, a, b).cost;
    auto sk = sinkhorn(sp, a, b);
    CHECK(sk.w2sq == doctest::Approx(lp).epsilon(0.05));
}

TEST_CASE("entropy of the normalized reference measure") {
    DiscreteMMSpace torus = make_flat_torus(10); // total mass 1
    ProbMeasure m = measure_from_weights(torus.weights);
    CHECK(entropy(torus, m) == doctest::Approx(0.0).epsilon(1e-12));
    // Deltas carry maximal entropy: Ent(delta) = -log w_x.
    ProbMeasure d = delta_measure(torus, 7);
    CHECK(entropy(torus, d) ==
          doctest::Approx(-std::log(torus.weights[7])).epsilon(1e-12));
}

TEST_CASE("displacement geodesic interpolates") {
    DiscreteMMSpace sp = make_flat_torus(16);
    ProbMeasure a = delta_measure(sp, 0);
    ProbMeasure b = delta_measure(sp, 4); // same row, d = 0.25
    std::vector<double> grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    auto path = displacement_geodesic(sp, a, b, grid);
    REQUIRE(path.measures.size() == grid.size());
    CHECK(path.w01 == doctest::Approx(sp.dist(0, 4)).epsilon(1e-9));
    // Midpoint sits halfway in W distance, up to re-binning.
    double dm = w2(sp, path.measures[0], path.measures[2]);
    CHECK(dm == doctest::Approx(0.5 * path.w01).epsilon(0.25));
    for (const auto& m : path.measures) m.validate();
}

TEST_CASE("measure validation") {
    ProbMeasure bad;
    bad.w = {0.5, 0.4}; // does not sum to one
    CHECK_THROWS(bad.validate());
    CHECK_THROWS(measure_from_weights(std::vector<double>{0.0, 0.0}));
}
