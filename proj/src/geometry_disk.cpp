#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

Eigen::Vector2d xy(const ChartPoint& p) { return {p.v.x(), p.v.y()}; }

bool on_rim(const ChartPoint& p, double R) {
    return p.label < 0 || std::fabs(xy(p).norm() - R) < 1e-12 * (1 + R);
}
} // namespace

DiskGeometry::DiskGeometry(double radius, int copies)
    : radius_(radius), copies_(copies) {
    if (!(radius > 0)) throw geometry_error("disk: radius must be positive");
    if (copies < 1) throw geometry_error("disk: copy count must be >= 1");
}

double DiskGeometry::crossing_distance(const Eigen::Vector2d& p,
                                       const Eigen::Vector2d& q,
                                       double* best_angle) const {
    auto len = [&](double phi) {
        Eigen::Vector2d b(radius_ * std::cos(phi), radius_ * std::sin(phi));
        return (p - b).norm() + (q - b).norm();
    };
    // The minimizing rim point lies on the shorter arc between the two
    // angular positions: coarse scan there, then golden-section refine.
    double ap = std::atan2(p.y(), p.x());
    double aq = std::atan2(q.y(), q.x());
    double gap = aq - ap;
    if (gap > kPi) gap -= 2 * kPi;
    if (gap < -kPi) gap += 2 * kPi;
    const int n = std::max(8, static_cast<int>(std::fabs(gap) / 0.08));
    double best = 1e300, phi0 = ap;
    for (int i = 0; i <= n; ++i) {
        double phi = ap + gap * i / n;
        double v = len(phi);
        if (v < best) { best = v; phi0 = phi; }
    }
    double step = std::fabs(gap) / n + 1e-12;
    double lo = phi0 - step, hi = phi0 + step;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = hi - gr * (hi - lo), b = lo + gr * (hi - lo);
    double fa = len(a), fb = len(b);
    for (int it = 0; it < 48; ++it) {
        if (fa < fb) {
            hi = b; b = a; fb = fa;
            a = hi - gr * (hi - lo); fa = len(a);
        } else {
            lo = a; a = b; fa = fb;
            b = lo + gr * (hi - lo); fb = len(b);
        }
    }
    double phi = 0.5 * (lo + hi);
    if (best_angle) *best_angle = phi;
    return len(phi);
}

double DiskGeometry::distance(const ChartPoint& a, const ChartPoint& b) const {
    bool same = a.label == b.label || on_rim(a, radius_) || on_rim(b, radius_);
    if (same) return (xy(a) - xy(b)).norm();
    return crossing_distance(xy(a), xy(b));
}

double DiskGeometry::distance_lower_bound(const ChartPoint& a,
                                          const ChartPoint& b) const {
    bool same = a.label == b.label || on_rim(a, radius_) || on_rim(b, radius_);
    if (same) return (xy(a) - xy(b)).norm();
    return (radius_ - xy(a).norm()) + (radius_ - xy(b).norm());
}

ChartPoint DiskGeometry::geodesic(const ChartPoint& a, const ChartPoint& b,
                                  double u) const {
    bool same = a.label == b.label || on_rim(a, radius_) || on_rim(b, radius_);
    if (same) {
        ChartPoint p;
        p.label = on_rim(a, radius_) ? b.label : a.label;
        Eigen::Vector2d q = (1 - u) * xy(a) + u * xy(b);
        p.v = Vec3(q.x(), q.y(), 0);
        return p;
    }
    double phi = 0;
    crossing_distance(xy(a), xy(b), &phi);
    Eigen::Vector2d m(radius_ * std::cos(phi), radius_ * std::sin(phi));
    double l1 = (xy(a) - m).norm(), l2 = (xy(b) - m).norm();
    double s = u * (l1 + l2);
    ChartPoint p;
    if (s <= l1) {
        Eigen::Vector2d q = xy(a) + (s / l1) * (m - xy(a));
        p.label = a.label;
        p.v = Vec3(q.x(), q.y(), 0);
    } else {
        Eigen::Vector2d q = m + ((s - l1) / l2) * (xy(b) - m);
        p.label = b.label;
        p.v = Vec3(q.x(), q.y(), 0);
    }
    return p;
}

ChartPoint DiskGeometry::exp(const ChartPoint& x, const TangentVec& z,
                             double r) const {
    if (singular(x)) throw geometry_error("disk exp: singular base point");
    Eigen::Vector2d q = xy(x) + r * Eigen::Vector2d(z.z.x(), z.z.y());
    if (q.norm() > radius_ + 1e-12)
        throw geometry_error("disk exp: leaves the domain (r too large)");
    ChartPoint p;
    p.label = x.label;
    p.v = Vec3(q.x(), q.y(), 0);
    return p;
}

TangentVec DiskGeometry::log(const ChartPoint& x, const ChartPoint& y) const {
    if (singular(x)) throw geometry_error("disk log: singular base point");
    Eigen::Vector2d d;
    if (x.label == y.label || on_rim(y, radius_)) {
        d = xy(y) - xy(x);
    } else {
        double phi = 0;
        crossing_distance(xy(x), xy(y), &phi);
        d = Eigen::Vector2d(radius_ * std::cos(phi), radius_ * std::sin(phi)) - xy(x);
    }
    double n = d.norm();
    if (n < 1e-15) throw geometry_error("disk log: coincident points");
    return TangentVec{Vec3(d.x() / n, d.y() / n, 0)};
}

double DiskGeometry::density(const ChartPoint& x) const {
    return on_rim(x, radius_) ? copies_ / 2.0 : 1.0;
}

double DiskGeometry::injectivity_proxy(const ChartPoint& x) const {
    double r = xy(x).norm();
    return std::max(radius_ - r, 1e-12);
}

bool DiskGeometry::singular(const ChartPoint& x) const {
    // The rim is a smooth hypersurface only in the doubled case.
    return copies_ != 2 && on_rim(x, radius_);
}

nlohmann::json DiskGeometry::params_json() const {
    return {{"radius", radius_}, {"copies", copies_}};
}

} // namespace rfl
