#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

double clamp1(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

double circle_delta(double a, double b, double L) {
    double d = std::fabs(a - b);
    d = std::fmod(d, L);
    return std::min(d, L - d);
}
} // namespace

SuspensionGeometry::SuspensionGeometry(double base_length) : L_(base_length) {
    if (!(base_length > 0))
        throw geometry_error("suspension: base length must be positive");
}

bool SuspensionGeometry::is_pole(const ChartPoint& x) const {
    return x.v.x() < 1e-12 || x.v.x() > kPi - 1e-12;
}

double SuspensionGeometry::distance(const ChartPoint& a,
                                    const ChartPoint& b) const {
    double s1 = a.v.x(), s2 = b.v.x();
    double dn = std::min(circle_delta(a.v.y(), b.v.y(), L_), kPi);
    if (is_pole(a) || is_pole(b)) dn = 0.0; // theta is immaterial at a pole
    double c = std::cos(s1) * std::cos(s2) +
               std::sin(s1) * std::sin(s2) * std::cos(dn);
    double d = std::acos(clamp1(c));
    if (is_pole(a) && is_pole(b))
        d = (s1 < kPi / 2) == (s2 < kPi / 2) ? 0.0 : kPi;
    return d;
}

double SuspensionGeometry::density(const ChartPoint& x) const {
    // m(B(r, pole)) = L (1 - cos r) ~ (L/2) r^2.
    return is_pole(x) ? L_ / (2 * kPi) : 1.0;
}

double SuspensionGeometry::injectivity_proxy(const ChartPoint& x) const {
    double s = x.v.x();
    return std::max(std::min(s, kPi - s), 1e-12);
}

bool SuspensionGeometry::singular(const ChartPoint& x) const {
    return std::fabs(L_ - 2 * kPi) > 1e-12 && is_pole(x);
}

double SuspensionGeometry::ricci(const ChartPoint& x, const TangentVec&) const {
    if (singular(x)) throw geometry_error("suspension ricci: pole is singular");
    return 1.0; // locally isometric to the unit round sphere
}

double SuspensionGeometry::scalar_curvature(const ChartPoint& x) const {
    if (singular(x)) throw geometry_error("suspension scalar curvature: pole");
    return 2.0;
}

nlohmann::json SuspensionGeometry::params_json() const {
    return {{"base_length", L_}};
}

} // namespace rfl
