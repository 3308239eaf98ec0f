#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

GaussianLineGeometry::GaussianLineGeometry(double A, double a, double b, double c)
    : A_(A), a_(a), b_(b), c_(c) {
    if (!(A > 0)) throw geometry_error("euclidean_gaussian: A must be positive");
}

double GaussianLineGeometry::distance(const ChartPoint& p,
                                      const ChartPoint& q) const {
    return std::sqrt(A_) * std::fabs(p.v.x() - q.v.x());
}

ChartPoint GaussianLineGeometry::geodesic(const ChartPoint& p,
                                          const ChartPoint& q, double u) const {
    ChartPoint r;
    r.v = Vec3(p.v.x() + u * (q.v.x() - p.v.x()), 0, 0);
    return r;
}

ChartPoint GaussianLineGeometry::exp(const ChartPoint& x, const TangentVec& z,
                                     double r) const {
    // z is +-1 in the x chart; r is metric length.
    ChartPoint p;
    p.v = Vec3(x.v.x() + (z.z.x() >= 0 ? 1.0 : -1.0) * r / std::sqrt(A_), 0, 0);
    return p;
}

TangentVec GaussianLineGeometry::log(const ChartPoint& x,
                                     const ChartPoint& y) const {
    if (x.v.x() == y.v.x())
        throw geometry_error("gaussian line log: coincident points");
    return TangentVec{Vec3(y.v.x() > x.v.x() ? 1.0 : -1.0, 0, 0)};
}

double GaussianLineGeometry::weight(double x) const { return std::exp(-f(x)); }

double GaussianLineGeometry::density(const ChartPoint& x) const {
    // m(B(r,x)) ~ e^{-f(x)} 2 r / sqrt(A); omega_1 = 2.
    return weight(x.v.x()) / std::sqrt(A_);
}

nlohmann::json GaussianLineGeometry::params_json() const {
    return {{"A", A_}, {"a", a_}, {"b", b_}, {"c", c_}};
}

} // namespace rfl
