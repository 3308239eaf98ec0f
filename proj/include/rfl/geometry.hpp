#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rfl {

using Vec3 = Eigen::Vector3d;

enum class GeomKind {
    euclidean_gaussian,
    sphere,
    flat_torus,
    disk,
    cone2d,
    glued_domain,
    suspension,
    polytope_surface,
};

std::string to_string(GeomKind k);
GeomKind geom_kind_from_string(const std::string& s);

/// A point in a model-space chart. `label` disambiguates copies (glued
/// domains) or faces (polytope surfaces); `v` carries the chart
/// coordinates, with a per-geometry convention documented in each
/// geometry implementation.
struct ChartPoint {
    int label = 0;
    Vec3 v = Vec3::Zero();
};

/// Unit tangent vector at a chart point, expressed in the geometry's
/// tangent-frame convention at that point.
struct TangentVec {
    Vec3 z = Vec3::Zero();
};

struct geometry_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Analytic model geometry: distances, geodesics, exponential map,
/// densities and curvature data for the model-space catalog.
class ModelGeometry {
public:
    virtual ~ModelGeometry() = default;

    virtual GeomKind kind() const = 0;
    virtual int dim() const = 0;

    virtual double distance(const ChartPoint& a, const ChartPoint& b) const = 0;

    /// Cheap lower bound on distance(a, b), used to skip kernel-cutoff
    /// pairs before paying for an exact evaluation. Defaults to exact.
    virtual double distance_lower_bound(const ChartPoint& a,
                                        const ChartPoint& b) const {
        return distance(a, b);
    }

    /// Point at parameter u in [0,1] along a minimizing geodesic a -> b.
    virtual ChartPoint geodesic(const ChartPoint& a, const ChartPoint& b,
                                double u) const {
        (void)a; (void)b; (void)u;
        throw geometry_error("geodesic: not supported for " + to_string(kind()));
    }
    virtual bool has_geodesics() const { return false; }

    /// exp_x(r z). Throws at singular points or when r exceeds the
    /// injectivity proxy.
    virtual ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                           double r) const {
        (void)x; (void)z; (void)r;
        throw geometry_error("exp: not supported for " + to_string(kind()));
    }

    /// Unit initial direction of a minimizing geodesic x -> y, in the
    /// tangent frame at x.
    virtual TangentVec log(const ChartPoint& x, const ChartPoint& y) const {
        (void)x; (void)y;
        throw geometry_error("log: not supported for " + to_string(kind()));
    }
    virtual bool has_exp() const { return false; }

    /// n-dimensional volume density rho(x) of the measure w.r.t. the
    /// model volume; 1 unless the space is weighted or singular.
    virtual double density(const ChartPoint& x) const { (void)x; return 1.0; }

    /// Truncation scale delta_x for directional functionals.
    virtual double injectivity_proxy(const ChartPoint& x) const {
        (void)x;
        throw geometry_error("injectivity proxy: not supported");
    }

    virtual bool singular(const ChartPoint& x) const { (void)x; return false; }

    /// Ric(z,z) for a unit tangent z at x (base metric, t = 0 scaling).
    virtual double ricci(const ChartPoint& x, const TangentVec& z) const {
        (void)x; (void)z;
        throw geometry_error("ricci: not available for " + to_string(kind()));
    }
    virtual bool has_curvature() const { return false; }

    virtual double scalar_curvature(const ChartPoint& x) const {
        (void)x;
        throw geometry_error("scalar curvature: not available");
    }

    /// Upper bound on the modulus of the Riemann tensor (base metric).
    virtual double riemann_bound() const {
        throw geometry_error("riemann bound: not available");
    }

    /// 0.5 * Laplacian_y of y -> d^2(x,y), evaluated at distance d from x,
    /// when a closed form exists.
    virtual double half_laplacian_dsq(double d) const {
        (void)d;
        throw geometry_error("half_laplacian_dsq: not available");
    }
    virtual bool has_laplacian_dsq() const { return false; }

    /// Ambient embedding used by kernels and plots (R^3, zero-padded).
    virtual Vec3 embed(const ChartPoint& x) const {
        return x.v;
    }

    virtual nlohmann::json params_json() const = 0;
};

using GeometryPtr = std::shared_ptr<const ModelGeometry>;

} // namespace rfl
