#include <cmath>

#include <doctest.h>

#include "rfl/oracles.hpp"

namespace or_ = rfl::oracles;

TEST_CASE("cone correction closed form") {
    // C_{pi/2} from the closed form.
    double c = or_::cone_correction(M_PI / 2);
    CHECK(c == doctest::Approx(6 * (1 - 0.25) * (M_PI / 2 - 1.0) /
                               (1 - std::cos(M_PI / 2))));
    CHECK(c == doctest::Approx(2.5686).epsilon(1e-3));
    CHECK_THROWS(or_::cone_correction(2 * M_PI)); // domain is (0, pi]
}

TEST_CASE("cone correction small-angle series") {
    for (double a : {0.05, 0.1, 0.2}) {
        double exact = or_::cone_correction(a);
        double series = or_::cone_correction_series(a);
        CHECK(exact == doctest::Approx(series).epsilon(1e-3));
    }
}

TEST_CASE("1d gaussian w2") {
    // Same variance: W2 is the mean shift. Same mean: |sigma1 - sigma2|.
    CHECK(or_::gaussian_w2_1d(0.0, 1.0, 3.0, 1.0) == doctest::Approx(3.0));
    CHECK(or_::gaussian_w2_1d(0.0, 4.0, 0.0, 1.0) == doctest::Approx(1.0));
    CHECK(or_::gaussian_w2_1d(1.0, 2.0, 1.0, 2.0) == doctest::Approx(0.0));
}

TEST_CASE("circle heat kernel normalizes") {
    double L = 2 * M_PI, tau = 0.03;
    int n = 400;
    double mass = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = (i + 0.5) / n * L;
        double d = std::min(x, L - x);
        mass += or_::circle_heat_kernel(L, d, tau) * (L / n);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("torus kernel is the product of circle kernels") {
    double v = or_::torus_heat_kernel(1.0, 1.0, 0.2, 0.3, 0.01);
    double w = or_::circle_heat_kernel(1.0, 0.2, 0.01) *
               or_::circle_heat_kernel(1.0, 0.3, 0.01);
    CHECK(v == doctest::Approx(w).epsilon(1e-12));
}

TEST_CASE("sphere heat kernel sane") {
    double tail = 0.0;
    double p0 = or_::sphere_heat_kernel(2, 1.0, 0.0, 0.05, 96, &tail);
    double p1 = or_::sphere_heat_kernel(2, 1.0, 0.5, 0.05);
    CHECK(p0 > p1);
    CHECK(p1 > 0.0);
    CHECK(tail < 1e-8);
}

TEST_CASE("ou dual flow matches the static OU fixed point") {
    // Static Gaussian weight (A constant): the dual flow is an
    // Ornstein-Uhlenbeck relaxation; variance stays below the step budget.
    auto st = or_::ou_dual_flow(0.7, 0.5, 0.45, 1.0, 0.0, 1.0);
    CHECK(st.variance > 0.0);
    CHECK(st.mean < 0.7);
    CHECK(st.mean > 0.0);
}

TEST_CASE("expected registry") {
    auto reg = or_::expected_registry();
    CHECK(reg.size() >= 15);
    const auto& e = or_::expected("K_sphere2");
    CHECK(e.value == doctest::Approx(8 * M_PI));
    CHECK_THROWS(or_::expected("no-such-id"));
    for (const auto& r : reg)
        CHECK((r.divergent || r.rel_tol > 0 || r.abs_tol > 0));
}
