#include <cmath>
#include <random>

#include <doctest.h>

#include "rfl/fitting.hpp"

using namespace rfl;

TEST_CASE("fit_slope recovers a synthetic expansion") {
    std::vector<double> s, y;
    for (double v = 2e-3; v > 1e-4; v *= 0.7) {
        s.push_back(v);
        y.push_back(1.8 * v + 0.4 * std::pow(v, 1.5));
    }
    auto e = fit_slope(s, y);
    CHECK(!e.diverges);
    CHECK(e.value == doctest::Approx(1.8).epsilon(1e-6));
    CHECK(std::fabs(e.c_half) < 1e-6);
}

TEST_CASE("fit_slope flags a sqrt divergence") {
    std::vector<double> s, y;
    for (double v = 2e-3; v > 1e-4; v *= 0.7) {
        s.push_back(v);
        y.push_back(-2.5 * std::sqrt(v) + 0.3 * v);
    }
    auto e = fit_slope(s, y);
    CHECK(e.diverges);
    CHECK(e.divergence_sign == -1);
}

TEST_CASE("fit_expansion recovers coefficients") {
    std::vector<double> s, y;
    for (double v = 4e-3; v > 2e-4; v *= 0.7) {
        s.push_back(v);
        y.push_back(3.1 - 6.1 * std::sqrt(v) + 2.0 * v);
    }
    auto f = fit_expansion(s, y);
    CHECK(f.a0 == doctest::Approx(3.1).epsilon(1e-8));
    CHECK(f.b_sqrt == doctest::Approx(-6.1).epsilon(1e-6));
    CHECK(f.c_lin == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("fit_line with noise") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 1e-3);
    std::vector<double> x, y;
    for (int i = 0; i < 30; ++i) {
        x.push_back(0.1 * i);
        y.push_back(0.7 - 0.25 * x.back() + noise(rng));
    }
    auto f = fit_line(x, y);
    CHECK(f.intercept == doctest::Approx(0.7).epsilon(0.01));
    CHECK(f.slope == doctest::Approx(-0.25).epsilon(0.02));
    CHECK(f.se_slope > 0.0);
}

TEST_CASE("least_squares standard errors") {
    std::vector<double> ones, ts, y;
    for (int i = 1; i <= 12; ++i) {
        double t = 0.1 * i;
        ones.push_back(1.0);
        ts.push_back(t);
        y.push_back(2.0 + 5.0 * t);
    }
    std::vector<std::vector<double>> X = {ones, ts};
    std::vector<double> se;
    double rms = 0.0;
    auto c = least_squares(X, y, &se, &rms);
    REQUIRE(c.size() == 2);
    CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(c[1] == doctest::Approx(5.0).epsilon(1e-10));
    CHECK(rms < 1e-10);
}

TEST_CASE("sgrid guards") {
    SGrid g = SGrid::geometric(1e-2, 1e-3, 8, 4.0);
    CHECK(g.s_values.size() == 8);
    CHECK(g.s_values.front() == doctest::Approx(1e-2));
    CHECK(g.s_values.back() == doctest::Approx(1e-3));
    for (size_t i = 1; i < g.s_values.size(); ++i)
        CHECK(g.s_values[i] < g.s_values[i - 1]);
    // Too many points in a narrow window: spacing ratio leaves [0.3, 0.9].
    CHECK_THROWS(SGrid::geometric(1.05e-3, 1e-3, 12, 4.0));
    CHECK(g.valid_for_mesh(std::sqrt(1e-3 / 4.0)));
    CHECK(!g.valid_for_mesh(0.5));
}
