#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

double clamp1(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }
} // namespace

SphereGeometry::SphereGeometry(double radius) : radius_(radius) {
    if (!(radius > 0)) throw geometry_error("sphere: radius must be positive");
}

double SphereGeometry::distance(const ChartPoint& a, const ChartPoint& b) const {
    return radius_ * std::acos(clamp1(a.v.dot(b.v)));
}

ChartPoint SphereGeometry::geodesic(const ChartPoint& a, const ChartPoint& b,
                                    double u) const {
    double ang = std::acos(clamp1(a.v.dot(b.v)));
    if (ang < 1e-14) return a;
    if (ang > kPi - 1e-12)
        throw geometry_error("sphere geodesic: antipodal endpoints");
    Vec3 w = (b.v - a.v * std::cos(ang)).normalized();
    ChartPoint p;
    p.v = a.v * std::cos(u * ang) + w * std::sin(u * ang);
    return p;
}

ChartPoint SphereGeometry::exp(const ChartPoint& x, const TangentVec& z,
                               double r) const {
    Vec3 t = z.z - x.v * z.z.dot(x.v);
    double n = t.norm();
    if (n < 1e-13) {
        if (r == 0.0) return x;
        throw geometry_error("sphere exp: tangent parallel to base point");
    }
    t /= n;
    double ang = r / radius_;
    ChartPoint p;
    p.v = x.v * std::cos(ang) + t * std::sin(ang);
    return p;
}

TangentVec SphereGeometry::log(const ChartPoint& x, const ChartPoint& y) const {
    Vec3 t = y.v - x.v * y.v.dot(x.v);
    double n = t.norm();
    if (n < 1e-14) throw geometry_error("sphere log: coincident or antipodal");
    return TangentVec{t / n};
}

double SphereGeometry::injectivity_proxy(const ChartPoint&) const {
    return kPi * radius_;
}

double SphereGeometry::ricci(const ChartPoint&, const TangentVec&) const {
    return 1.0 / (radius_ * radius_);
}

double SphereGeometry::scalar_curvature(const ChartPoint&) const {
    return 2.0 / (radius_ * radius_);
}

double SphereGeometry::riemann_bound() const { return 1.0 / (radius_ * radius_); }

double SphereGeometry::half_laplacian_dsq(double d) const {
    double th = d / radius_;
    if (th < 1e-9) return 2.0;
    return 1.0 + th * std::cos(th) / std::sin(th);
}

nlohmann::json SphereGeometry::params_json() const {
    return {{"radius", radius_}};
}

} // namespace rfl
