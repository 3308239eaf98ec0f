#include <cmath>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "rfl/mmspace.hpp"
#include "rfl/space_io.hpp"

using namespace rfl;

TEST_CASE("catalog masses") {
    CHECK(make_flat_torus(24).total_mass() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(make_sphere(24).total_mass() ==
          doctest::Approx(4 * M_PI).epsilon(0.01));
    CHECK(make_disk(24, 96).total_mass() == doctest::Approx(M_PI).epsilon(0.01));
    CHECK(make_disk(24, 96, 1.0, 2).total_mass() ==
          doctest::Approx(2 * M_PI).epsilon(0.01));
    // Cone of angle defect alpha = pi: area (2 pi - alpha)/2 * r^2.
    CHECK(make_cone2d(32, 64, M_PI).total_mass() ==
          doctest::Approx(M_PI / 2).epsilon(0.01));
    CHECK(make_cube_surface(16).total_mass() ==
          doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("validate_space passes on the catalog") {
    for (const DiscreteMMSpace& sp :
         {make_flat_torus(16), make_sphere(12), make_disk(12, 48),
          make_cone2d(12, 24, M_PI / 2), make_circle_suspension(12, 12, M_PI),
          make_cube_surface(8)}) {
        auto rep = validate_space(sp);
        CHECK(rep.all_pass());
    }
}

TEST_CASE("space json round trip") {
    DiscreteMMSpace sp = make_sphere(12);
    auto j = space_to_json(sp);
    DiscreteMMSpace back = space_from_json(j);
    REQUIRE(back.n_points == sp.n_points);
    CHECK(back.dim == sp.dim);
    for (int i = 0; i < sp.n_points; i += 37)
        for (int k = 0; k < sp.n_points; k += 53) {
            CHECK(back.weights[i] == doctest::Approx(sp.weights[i]));
            CHECK(back.dist(i, k) == doctest::Approx(sp.dist(i, k)).epsilon(1e-12));
        }
}

TEST_CASE("dense matrix round trip") {
    DiscreteMMSpace sp = make_flat_torus(6);
    sp.build_dense_dist();
    sp.geometry.reset();
    sp.coords.clear();
    auto j = space_to_json(sp);
    DiscreteMMSpace back = space_from_json(j);
    for (int i = 0; i < sp.n_points; ++i)
        CHECK(back.dist(0, i) == doctest::Approx(sp.dist(0, i)).epsilon(1e-12));
}

TEST_CASE("family json round trip") {
    SpaceFamily fam = build_family("shrinking_sphere",
                                   nlohmann::json{{"res", 12}});
    auto j = family_to_json(fam);
    SpaceFamily back = family_from_json(j);
    CHECK(back.t_lo == doctest::Approx(fam.t_lo));
    CHECK(back.t_hi == doctest::Approx(fam.t_hi));
    double t = 0.5 * (fam.t_lo + fam.t_hi);
    auto a = fam.at(t);
    auto b = back.at(t);
    CHECK(a.dist(0, 37) == doctest::Approx(b.dist(0, 37)).epsilon(1e-12));
    CHECK(a.weights[5] == doctest::Approx(b.weights[5]).epsilon(1e-12));
}

TEST_CASE("scale_space scales distance and mass") {
    DiscreteMMSpace sp = make_sphere(12);
    DiscreteMMSpace sc = scale_space(sp, 2.0, 3.0);
    CHECK(sc.dist(0, 40) == doctest::Approx(2.0 * sp.dist(0, 40)).epsilon(1e-12));
    CHECK(sc.total_mass() == doctest::Approx(3.0 * sp.total_mass()).epsilon(1e-12));
}

TEST_CASE("shrinking sphere slices") {
    SpaceFamily fam = make_shrinking_sphere(12);
    auto early = fam.at(0.0);
    auto late = fam.at(0.4);
    CHECK(late.dist(0, 40) < early.dist(0, 40));
    // Homothetic: same ratio for every pair.
    double r1 = late.dist(0, 40) / early.dist(0, 40);
    double r2 = late.dist(3, 77) / early.dist(3, 77);
    CHECK(r1 == doctest::Approx(r2).epsilon(1e-12));
    CHECK(r1 == doctest::Approx(std::sqrt(1.0 - 2 * 0.4)).epsilon(1e-12));
}

TEST_CASE("sample_pairs respects distance bounds") {
    DiscreteMMSpace sp = make_sphere(16);
    // declared in diagnostics but exercised here on the space alone
    SUBCASE("build_space guards") {
        CHECK_THROWS(build_space("no-such-kind", nlohmann::json::object()));
    }
}

TEST_CASE("static family is constant in t") {
    SpaceFamily fam = make_static_family(make_flat_torus(8));
    CHECK(fam.at(0.1).dist(0, 20) == doctest::Approx(fam.at(0.9).dist(0, 20)));
    CHECK(fam.declared_Cd == 0.0);
    CHECK(fam.declared_Cm == 0.0);
}
