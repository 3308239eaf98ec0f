#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_angle(double phi, double beta) {
    double w = std::fmod(phi, beta);
    return w < 0 ? w + beta : w;
}

// Shortest angular separation on the cone link (circle of length beta).
double link_delta(double p, double q, double beta) {
    double d = std::fabs(p - q);
    d = std::fmod(d, beta);
    return std::min(d, beta - d);
}
} // namespace

ConeGeometry::ConeGeometry(double alpha, double outer_radius)
    : alpha_(alpha), beta_(2 * kPi - alpha), outer_(outer_radius) {
    if (!(alpha > 0) || !(alpha < 2 * kPi))
        throw geometry_error("cone2d: defect must lie in (0, 2 pi)");
    if (!(outer_radius > 0))
        throw geometry_error("cone2d: outer radius must be positive");
}

double ConeGeometry::distance(const ChartPoint& a, const ChartPoint& b) const {
    double r1 = a.v.x(), r2 = b.v.x();
    double dphi = link_delta(a.v.y(), b.v.y(), beta_);
    // Unroll: a straight chord exists iff the angular gap is at most pi;
    // otherwise the minimizing path passes through the apex.
    if (dphi >= kPi) return r1 + r2;
    double c = r1 * r1 + r2 * r2 - 2 * r1 * r2 * std::cos(dphi);
    return std::sqrt(std::max(c, 0.0));
}

ChartPoint ConeGeometry::geodesic(const ChartPoint& a, const ChartPoint& b,
                                  double u) const {
    double r1 = a.v.x(), r2 = b.v.x();
    double dphi = link_delta(a.v.y(), b.v.y(), beta_);
    if (dphi >= kPi) {
        // Through the apex: radial in, radial out.
        double s = u * (r1 + r2);
        ChartPoint p;
        if (s <= r1) p.v = Vec3(r1 - s, a.v.y(), 0);
        else p.v = Vec3(s - r1, b.v.y(), 0);
        return p;
    }
    // Signed shortest angular displacement from a to b.
    double raw = std::fmod(b.v.y() - a.v.y(), beta_);
    if (raw > beta_ / 2) raw -= beta_;
    if (raw < -beta_ / 2) raw += beta_;
    Eigen::Vector2d p1(r1, 0), p2(r2 * std::cos(raw), r2 * std::sin(raw));
    Eigen::Vector2d q = (1 - u) * p1 + u * p2;
    ChartPoint p;
    p.v = Vec3(q.norm(), wrap_angle(a.v.y() + std::atan2(q.y(), q.x()), beta_), 0);
    return p;
}

ChartPoint ConeGeometry::exp(const ChartPoint& x, const TangentVec& z,
                             double r) const {
    if (singular(x)) throw geometry_error("cone exp: apex is singular");
    // Tangent frame at x: z = (radial, angular) components of a unit vector
    // in the local unrolled plane.
    Eigen::Vector2d p(x.v.x(), 0);
    Eigen::Vector2d q = p + r * Eigen::Vector2d(z.z.x(), z.z.y());
    if (q.norm() > outer_ + 1e-12)
        throw geometry_error("cone exp: leaves the truncated cone");
    ChartPoint out;
    out.v = Vec3(q.norm(), wrap_angle(x.v.y() + std::atan2(q.y(), q.x()), beta_), 0);
    return out;
}

TangentVec ConeGeometry::log(const ChartPoint& x, const ChartPoint& y) const {
    if (singular(x)) throw geometry_error("cone log: apex is singular");
    double dphi = link_delta(x.v.y(), y.v.y(), beta_);
    Eigen::Vector2d d;
    if (dphi >= kPi) {
        d = Eigen::Vector2d(-1, 0); // toward the apex
    } else {
        double raw = std::fmod(y.v.y() - x.v.y(), beta_);
        if (raw > beta_ / 2) raw -= beta_;
        if (raw < -beta_ / 2) raw += beta_;
        Eigen::Vector2d p1(x.v.x(), 0);
        Eigen::Vector2d p2(y.v.x() * std::cos(raw), y.v.x() * std::sin(raw));
        d = p2 - p1;
        double n = d.norm();
        if (n < 1e-15) throw geometry_error("cone log: coincident points");
        d /= n;
    }
    return TangentVec{Vec3(d.x(), d.y(), 0)};
}

double ConeGeometry::density(const ChartPoint& x) const {
    // Lebesgue density at the apex is the angular fraction of the plane.
    return singular(x) ? beta_ / (2 * kPi) : 1.0;
}

double ConeGeometry::injectivity_proxy(const ChartPoint& x) const {
    double r = x.v.x();
    // Chords stay minimizing until the angular gap reaches pi; the apex
    // and the outer rim also truncate.
    double cut = beta_ >= 2 * kPi ? r : r * std::sin(std::min(beta_ / 2, kPi / 2));
    return std::max(std::min({r, outer_ - r, cut}), 1e-12);
}

bool ConeGeometry::singular(const ChartPoint& x) const {
    return x.v.x() < 1e-12 * outer_;
}

double ConeGeometry::ricci(const ChartPoint& x, const TangentVec&) const {
    if (singular(x)) throw geometry_error("cone ricci: apex is singular");
    return 0.0;
}

double ConeGeometry::scalar_curvature(const ChartPoint& x) const {
    if (singular(x)) throw geometry_error("cone scalar curvature: apex");
    return 0.0;
}

nlohmann::json ConeGeometry::params_json() const {
    return {{"alpha", alpha_}, {"outer_radius", outer_}};
}

} // namespace rfl
