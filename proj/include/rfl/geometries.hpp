#pragma once

#include <functional>

#include "rfl/geometry.hpp"

namespace rfl {

/// Round n-sphere of given radius; chart = unit vector in R^3 (n = 2).
class SphereGeometry final : public ModelGeometry {
public:
    explicit SphereGeometry(double radius);
    GeomKind kind() const override { return GeomKind::sphere; }
    int dim() const override { return 2; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    ChartPoint geodesic(const ChartPoint& a, const ChartPoint& b,
                        double u) const override;
    bool has_geodesics() const override { return true; }
    ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                   double r) const override;
    TangentVec log(const ChartPoint& x, const ChartPoint& y) const override;
    bool has_exp() const override { return true; }
    double injectivity_proxy(const ChartPoint& x) const override;
    double ricci(const ChartPoint& x, const TangentVec& z) const override;
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint& x) const override;
    double riemann_bound() const override;
    double half_laplacian_dsq(double d) const override;
    bool has_laplacian_dsq() const override { return true; }
    nlohmann::json params_json() const override;

    double radius() const { return radius_; }

private:
    double radius_;
};

/// Flat torus (dim 2, sides sx, sy) or flat circle (dim 1, circumference
/// sx), optionally carrying a smooth positive weight density along the
/// first coordinate. Chart = (x, y, 0) with x in [0, sx), y in [0, sy).
class TorusGeometry final : public ModelGeometry {
public:
    TorusGeometry(int dim, double sx, double sy,
                  std::function<double(double)> density = {},
                  std::function<double(double)> density_dd = {});
    GeomKind kind() const override { return GeomKind::flat_torus; }
    int dim() const override { return dim_; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    ChartPoint geodesic(const ChartPoint& a, const ChartPoint& b,
                        double u) const override;
    bool has_geodesics() const override { return true; }
    ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                   double r) const override;
    TangentVec log(const ChartPoint& x, const ChartPoint& y) const override;
    bool has_exp() const override { return true; }
    double density(const ChartPoint& x) const override;
    double injectivity_proxy(const ChartPoint& x) const override;
    double ricci(const ChartPoint&, const TangentVec&) const override { return 0.0; }
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint&) const override { return 0.0; }
    double riemann_bound() const override { return 0.0; }
    double half_laplacian_dsq(double) const override { return dim_; }
    bool has_laplacian_dsq() const override { return true; }
    nlohmann::json params_json() const override;

    double side_x() const { return sx_; }
    double side_y() const { return sy_; }
    bool weighted() const { return static_cast<bool>(density_); }
    /// Second derivative of the weight density (weighted identities).
    double density_dd(double x) const;

private:
    int dim_;
    double sx_, sy_;
    std::function<double(double)> density_;
    std::function<double(double)> density_dd_;
};

/// 1D Euclidean line with quadratic Gaussian weight f(x) = a x^2/2 + b x + c
/// and metric sqrt(A) |x - y|. Chart = (x, 0, 0).
class GaussianLineGeometry final : public ModelGeometry {
public:
    GaussianLineGeometry(double A, double a, double b, double c);
    GeomKind kind() const override { return GeomKind::euclidean_gaussian; }
    int dim() const override { return 1; }
    double distance(const ChartPoint& p, const ChartPoint& q) const override;
    ChartPoint geodesic(const ChartPoint& p, const ChartPoint& q,
                        double u) const override;
    bool has_geodesics() const override { return true; }
    ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                   double r) const override;
    TangentVec log(const ChartPoint& x, const ChartPoint& y) const override;
    bool has_exp() const override { return true; }
    double density(const ChartPoint& x) const override;
    double injectivity_proxy(const ChartPoint&) const override { return 1e30; }
    double ricci(const ChartPoint&, const TangentVec&) const override { return 0.0; }
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint&) const override { return 0.0; }
    double riemann_bound() const override { return 0.0; }
    nlohmann::json params_json() const override;

    double metric_A() const { return A_; }
    double weight(double x) const;      // e^{-f(x)}
    double f(double x) const { return 0.5 * a_ * x * x + b_ * x + c_; }
    double quad_a() const { return a_; }

private:
    double A_, a_, b_, c_;
};

/// Flat disk of given radius, k copies glued along the rim (k = 1 is the
/// plain disk). Chart = (x, y, 0), label = copy index; rim points use
/// label -1 (shared between copies).
class DiskGeometry final : public ModelGeometry {
public:
    DiskGeometry(double radius, int copies);
    GeomKind kind() const override {
        return copies_ > 1 ? GeomKind::glued_domain : GeomKind::disk;
    }
    int dim() const override { return 2; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    double distance_lower_bound(const ChartPoint& a,
                                const ChartPoint& b) const override;
    ChartPoint geodesic(const ChartPoint& a, const ChartPoint& b,
                        double u) const override;
    bool has_geodesics() const override { return true; }
    ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                   double r) const override;
    TangentVec log(const ChartPoint& x, const ChartPoint& y) const override;
    bool has_exp() const override { return true; }
    double density(const ChartPoint& x) const override;
    double injectivity_proxy(const ChartPoint& x) const override;
    bool singular(const ChartPoint& x) const override;
    double ricci(const ChartPoint&, const TangentVec&) const override { return 0.0; }
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint&) const override { return 0.0; }
    double riemann_bound() const override { return 0.0; }
    nlohmann::json params_json() const override;

    double radius() const { return radius_; }
    int copies() const { return copies_; }
    /// Length of the shortest rim-crossing path between interior points
    /// of different copies (planar coordinates p, q).
    double crossing_distance(const Eigen::Vector2d& p,
                             const Eigen::Vector2d& q,
                             double* best_angle = nullptr) const;

private:
    double radius_;
    int copies_;
};

/// Flat 2D cone with defect alpha (total angle beta = 2 pi - alpha),
/// truncated at an outer radius. Chart = (r, phi, 0) with phi in [0, beta).
class ConeGeometry final : public ModelGeometry {
public:
    ConeGeometry(double alpha, double outer_radius);
    GeomKind kind() const override { return GeomKind::cone2d; }
    int dim() const override { return 2; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    ChartPoint geodesic(const ChartPoint& a, const ChartPoint& b,
                        double u) const override;
    bool has_geodesics() const override { return true; }
    ChartPoint exp(const ChartPoint& x, const TangentVec& z,
                   double r) const override;
    TangentVec log(const ChartPoint& x, const ChartPoint& y) const override;
    bool has_exp() const override { return true; }
    double density(const ChartPoint& x) const override; // apex: beta / 2 pi
    double injectivity_proxy(const ChartPoint& x) const override;
    bool singular(const ChartPoint& x) const override;
    double ricci(const ChartPoint& x, const TangentVec&) const override;
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint& x) const override;
    double riemann_bound() const override { return 0.0; }
    nlohmann::json params_json() const override;

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double outer_radius() const { return outer_; }

private:
    double alpha_, beta_, outer_;
};

/// Spherical suspension over a circle of length L: chart = (s, theta, 0),
/// s in [0, pi] the polar angle, theta in [0, L) the base coordinate.
/// Poles are the single points s = 0 and s = pi (theta canonically 0).
class SuspensionGeometry final : public ModelGeometry {
public:
    explicit SuspensionGeometry(double base_length);
    GeomKind kind() const override { return GeomKind::suspension; }
    int dim() const override { return 2; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    double density(const ChartPoint& x) const override;
    double injectivity_proxy(const ChartPoint& x) const override;
    bool singular(const ChartPoint& x) const override;
    double ricci(const ChartPoint& x, const TangentVec&) const override;
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint& x) const override;
    double riemann_bound() const override { return 1.0; }
    nlohmann::json params_json() const override;

    double base_length() const { return L_; }
    bool is_pole(const ChartPoint& x) const;

private:
    double L_;
};

/// Surface of an axis-aligned cube with given edge length. Chart =
/// (u, v, 0) in [0, edge]^2, label = face index 0..5. Distances are exact
/// geodesic distances computed by unfolding face sequences.
class CubeSurfaceGeometry final : public ModelGeometry {
public:
    explicit CubeSurfaceGeometry(double edge);
    GeomKind kind() const override { return GeomKind::polytope_surface; }
    int dim() const override { return 2; }
    double distance(const ChartPoint& a, const ChartPoint& b) const override;
    double density(const ChartPoint&) const override { return 1.0; }
    double injectivity_proxy(const ChartPoint& x) const override;
    double ricci(const ChartPoint&, const TangentVec&) const override { return 0.0; }
    bool has_curvature() const override { return true; }
    double scalar_curvature(const ChartPoint&) const override { return 0.0; }
    double riemann_bound() const override { return 0.0; }
    Vec3 embed(const ChartPoint& x) const override;
    nlohmann::json params_json() const override;

    double edge() const { return edge_; }

private:
    struct Unfolding {
        Eigen::Matrix2d rot;          // target chart -> source plane
        Eigen::Vector2d shift;
        // Unfolded shared edges the straight segment must cross, in order.
        std::vector<Eigen::Vector2d> edge_a, edge_b;
    };
    double edge_;
    // unfoldings_[a][b]: ways to lay face b out in face a's plane.
    std::vector<std::vector<std::vector<Unfolding>>> unfoldings_;
    void build_unfoldings();
};

} // namespace rfl
