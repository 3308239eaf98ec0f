#pragma once

#include <limits>
#include <string>
#include <vector>

namespace rfl::oracles {

/// Curvature-functional contribution of a 2D cone point with defect
/// alpha in (0, pi]: 6 (1 - alpha/2pi) (alpha - sin alpha) / (1 - cos alpha).
double cone_correction(double alpha);

/// Small-alpha series 2a - a^2/pi + a^3/15 (cross-check only).
double cone_correction_series(double alpha);

/// W2 between 1D Gaussians N(m1, v1), N(m2, v2) (variances).
double gaussian_w2_1d(double m1, double v1, double m2, double v2);

/// Heat kernel density on the n-sphere of given radius at geodesic
/// distance d, time tau, truncated at l <= lmax. Returns the density
/// w.r.t. the volume measure; *tail (optional) receives a bound on the
/// truncated series tail.
double sphere_heat_kernel(int n, double radius, double d, double tau,
                          int lmax = 96, double* tail = nullptr);

/// Wrapped heat kernel density on a circle of circumference L at arc
/// distance d, time tau.
double circle_heat_kernel(double L, double d, double tau, int kmax = 256);

/// Heat kernel on the flat 2-torus (side lengths Lx, Ly), product of
/// wrapped 1D kernels.
double torus_heat_kernel(double Lx, double Ly, double dx, double dy, double tau);

/// Gaussian law of the dual heat flow P^_{t,s} delta_x for the 1D
/// Gaussian-weight family d_r = sqrt(A(r)) |.|, f(x) = a x^2/2.
struct OUState {
    double mean = 0.0;
    double variance = 0.0;    // in the x chart (Lebesgue coordinates)
};
OUState ou_dual_flow(double x, double t, double s, double A0, double Adot,
                     double a, int steps = 4096);

struct ExpectedValue {
    std::string id;
    double value = 0.0;
    bool divergent = false;
    int divergence_sign = 0;
    std::string provenance;
    double rel_tol = 0.0;     // 0 = use abs_tol
    double abs_tol = 0.0;
};

std::vector<ExpectedValue> expected_registry();
const ExpectedValue& expected(const std::string& id);

} // namespace rfl::oracles
