#include <cmath>

#include <doctest.h>

#include "rfl/functionals.hpp"
#include "rfl/mmspace.hpp"

using namespace rfl;

TEST_CASE("gaussian volume is near one on the flat torus") {
    DiscreteMMSpace torus = make_flat_torus(48);
    // Kernel mass integrates the flat density rho = 1 when s is inside the
    // resolved window.
    double a = gaussian_volume(torus, 100, 1e-3);
    CHECK(a == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("batch matches pointwise evaluation") {
    DiscreteMMSpace sph = make_sphere(16);
    std::vector<double> s = {0.02, 0.01, 0.005};
    auto batch = gaussian_volume_batch(sph, 40, s);
    REQUIRE(batch.size() == s.size());
    for (size_t i = 0; i < s.size(); ++i)
        CHECK(batch[i] == doctest::Approx(gaussian_volume(sph, 40, s[i]))
                              .epsilon(1e-12));
}

TEST_CASE("scaling identity is exact") {
    DiscreteMMSpace sph = make_sphere(16);
    double ld = 1.7, lm = 2.3;
    DiscreteMMSpace sc = scale_space(sph, ld, lm);
    for (double s : {0.02, 0.01}) {
        double lhs = gaussian_volume(sc, 33, ld * ld * s);
        double rhs = lm / (ld * ld) * gaussian_volume(sph, 33, s);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
        double l2 = gaussian_double_integral(sc, ld * ld * s);
        double r2 = lm * lm / (ld * ld) * gaussian_double_integral(sph, s);
        CHECK(l2 == doctest::Approx(r2).epsilon(1e-12));
    }
}

TEST_CASE("density on flat spaces") {
    DiscreteMMSpace torus = make_flat_torus(24);
    CHECK(density_at(torus, 5) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sphere scalar slope") {
    DiscreteMMSpace sph = make_sphere(48);
    SGrid g = SGrid::for_mesh(sph.mesh_h, 2.3, 8, 4.0, 0.05);
    auto e = slope_k(sph, 24 * 96, g);
    CHECK(!e.diverges);
    CHECK(e.value == doctest::Approx(2.0).epsilon(0.08));
}

TEST_CASE("cap fraction") {
    DirectionalCap half;
    half.half_angle = M_PI / 2;
    CHECK(cap_fraction(2, half) == doctest::Approx(0.5).epsilon(1e-12));
    DirectionalCap full;
    full.half_angle = M_PI;
    CHECK(cap_fraction(2, full) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("directional volumes add over opposite caps") {
    DiscreteMMSpace sph = make_sphere(32);
    int x = sph.n_points / 2 + 5;
    Eigen::Vector3d p = sph.coords[x].v;
    Eigen::Vector3d ez(0.3, 0.1, 0.94);
    DirectionalCap cap;
    cap.base_point = x;
    cap.axis.z = (ez - ez.dot(p) * p).normalized();
    cap.half_angle = M_PI / 2;
    cap.radius_cap = 1.5;
    DirectionalCap opp = cap;
    opp.axis.z = -cap.axis.z;
    DirectionalCap full = cap;
    full.half_angle = M_PI;
    double s = 0.01;
    double a = directional_volume(sph, x, cap, s);
    double b = directional_volume(sph, x, opp, s);
    double f = directional_volume(sph, x, full, s);
    CHECK(a + b == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("td slope grid must respect the base mesh") {
    auto fam = make_shrinking_sphere(16);
    SGrid bad = SGrid::geometric(1e-4, 1e-5, 6);
    CHECK_THROWS(td_slope_K(fam, 0.2, bad));
}
