#include <cmath>

#include <doctest.h>

#include "rfl/heat.hpp"
#include "rfl/mmspace.hpp"
#include "rfl/oracles.hpp"

using namespace rfl;

TEST_CASE("graph propagation conserves mass") {
    auto fam = make_static_family(make_flat_torus(24));
    ProbMeasure mu = propagate_dual(fam, 0.8, 0.8 - 0.005,
                                    delta_measure(fam.base, 11));
    double mass = 0.0;
    for (double v : mu.w) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("backward euler preserves positivity") {
    auto fam = make_static_family(make_flat_torus(24));
    PropagatorConfig cfg;
    cfg.scheme = PropagatorConfig::Scheme::backward_euler;
    ProbMeasure mu = propagate_dual(fam, 0.8, 0.8 - 0.004,
                                    delta_measure(fam.base, 11), cfg);
    double neg = 0.0;
    for (double v : mu.w) neg = std::min(neg, v);
    CHECK(neg >= -1e-12);
}

TEST_CASE("semigroup composition") {
    auto fam = make_static_family(make_flat_torus(24));
    ProbMeasure d0 = delta_measure(fam.base, 0);
    ProbMeasure one = propagate_dual(fam, 0.9, 0.9 - 0.01, d0);
    ProbMeasure two = propagate_dual(fam, 0.9, 0.9 - 0.006,
                                     propagate_dual(fam, 0.9, 0.9 - 0.004, d0));
    double tv = 0.0;
    for (size_t i = 0; i < one.w.size(); ++i)
        tv += std::fabs(one.w[i] - two.w[i]);
    CHECK(0.5 * tv < 1e-6);
}

TEST_CASE("spectral sphere kernel matches the series oracle") {
    DiscreteMMSpace sph = make_sphere(24);
    int x = 7 * 48;
    double tau = 0.02;
    ProbMeasure mu = heat_kernel_measure(sph, x, tau);
    double mass = 0.0;
    for (double v : mu.w) mass += v;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    // Density against the truncated spherical-harmonics series.
    int y = 9 * 48 + 5;
    double d = sph.dist(x, y);
    double want = oracles::sphere_heat_kernel(2, 1.0, d, tau);
    CHECK(mu.w[y] / sph.weights[y] == doctest::Approx(want).epsilon(1e-3));
}

TEST_CASE("effective time") {
    auto fam = make_static_family(make_flat_torus(8));
    CHECK(effective_time(fam, 0.2, 0.7) == doctest::Approx(0.5).epsilon(1e-9));
    auto shr = make_shrinking_sphere(12);
    // c^2 < 1 after t=0, so the effective duration exceeds the nominal one.
    CHECK(effective_time(shr, 0.1, 0.3) > 0.2);
}

TEST_CASE("laplacian annihilates constants") {
    DiscreteMMSpace torus = make_flat_torus(12);
    auto op = laplacian(torus, LaplacianBackend::graph);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(torus.n_points);
    Eigen::VectorXd lf = apply_generator(op, ones);
    CHECK(lf.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("suspension kernel symmetry") {
    double v1 = suspension_heat_kernel(M_PI, 0.8, 0.1, 1.2, 0.5, 0.05);
    double v2 = suspension_heat_kernel(M_PI, 1.2, 0.5, 0.8, 0.1, 0.05);
    CHECK(v1 == doctest::Approx(v2).epsilon(1e-9));
    CHECK(v1 > 0.0);
}
