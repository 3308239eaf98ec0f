#include <cmath>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {
double wrap_delta(double a, double b, double side) {
    double d = std::fabs(a - b);
    d = std::fmod(d, side);
    return std::min(d, side - d);
}

// Signed shortest displacement from a to b modulo side.
double wrap_dir(double a, double b, double side) {
    double d = std::fmod(b - a, side);
    if (d > side / 2) d -= side;
    if (d < -side / 2) d += side;
    return d;
}

double wrap_coord(double x, double side) {
    double y = std::fmod(x, side);
    return y < 0 ? y + side : y;
}
} // namespace

TorusGeometry::TorusGeometry(int dim, double sx, double sy,
                             std::function<double(double)> density,
                             std::function<double(double)> density_dd)
    : dim_(dim), sx_(sx), sy_(sy), density_(std::move(density)),
      density_dd_(std::move(density_dd)) {
    if (dim != 1 && dim != 2) throw geometry_error("flat_torus: dim must be 1 or 2");
    if (!(sx > 0) || (dim == 2 && !(sy > 0)))
        throw geometry_error("flat_torus: sides must be positive");
}

double TorusGeometry::distance(const ChartPoint& a, const ChartPoint& b) const {
    double dx = wrap_delta(a.v.x(), b.v.x(), sx_);
    if (dim_ == 1) return dx;
    double dy = wrap_delta(a.v.y(), b.v.y(), sy_);
    return std::hypot(dx, dy);
}

ChartPoint TorusGeometry::geodesic(const ChartPoint& a, const ChartPoint& b,
                                   double u) const {
    double dx = wrap_dir(a.v.x(), b.v.x(), sx_);
    double dy = dim_ == 2 ? wrap_dir(a.v.y(), b.v.y(), sy_) : 0.0;
    ChartPoint p;
    p.v = Vec3(wrap_coord(a.v.x() + u * dx, sx_),
               dim_ == 2 ? wrap_coord(a.v.y() + u * dy, sy_) : 0.0, 0.0);
    return p;
}

ChartPoint TorusGeometry::exp(const ChartPoint& x, const TangentVec& z,
                              double r) const {
    ChartPoint p;
    p.v = Vec3(wrap_coord(x.v.x() + r * z.z.x(), sx_),
               dim_ == 2 ? wrap_coord(x.v.y() + r * z.z.y(), sy_) : 0.0, 0.0);
    return p;
}

TangentVec TorusGeometry::log(const ChartPoint& x, const ChartPoint& y) const {
    Vec3 d(wrap_dir(x.v.x(), y.v.x(), sx_),
           dim_ == 2 ? wrap_dir(x.v.y(), y.v.y(), sy_) : 0.0, 0.0);
    double n = d.norm();
    if (n < 1e-15) throw geometry_error("torus log: coincident points");
    return TangentVec{d / n};
}

double TorusGeometry::density(const ChartPoint& x) const {
    return density_ ? density_(x.v.x()) : 1.0;
}

double TorusGeometry::density_dd(double x) const {
    if (!density_dd_) throw geometry_error("flat_torus: no density second derivative");
    return density_dd_(x);
}

double TorusGeometry::injectivity_proxy(const ChartPoint&) const {
    return dim_ == 2 ? std::min(sx_, sy_) / 2 : sx_ / 2;
}

nlohmann::json TorusGeometry::params_json() const {
    nlohmann::json j{{"dim", dim_}, {"side_x", sx_}};
    if (dim_ == 2) j["side_y"] = sy_;
    if (density_) j["weighted"] = true;
    return j;
}

} // namespace rfl
