#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "rfl/geometry.hpp"

namespace rfl {

/// Isometry-orbit decomposition of the atom set. Atoms in one orbit see
/// the same space (equal values of any isometry-invariant functional),
/// so whole-space sums reduce to sums over representatives.
struct OrbitSymmetry {
    std::vector<int> rep;        ///< one atom index per orbit
    std::vector<double> mass;    ///< total atom weight of each orbit
};

/// Finite atomized metric measure space. Distances come either from a
/// dense matrix or from the attached analytic geometry.
class DiscreteMMSpace {
public:
    int n_points = 0;
    int dim = 0;
    std::vector<double> weights;
    std::vector<ChartPoint> coords;        // empty when raw-matrix input
    GeometryPtr geometry;                  // may be null
    std::vector<uint8_t> boundary;         // empty when not tracked
    double mesh_h = 0.0;                   // quadrature spacing, 0 = unknown
    std::string id;                        // generator tag for reports

    std::optional<OrbitSymmetry> symmetry;

    /// Global factor applied on top of the base distances (family slices).
    double dist_scale = 1.0;
    /// Factor on the geometry's analytic Lebesgue density, tracking
    /// distance/measure rescalings: rho(x) = density_scale * geom density.
    double density_scale = 1.0;

    double dist(int i, int j) const;
    bool has_dense_dist() const { return dense_dist_.size() > 0; }
    void set_dense_dist(Eigen::MatrixXd d);
    const Eigen::MatrixXd& dense_dist() const { return dense_dist_; }
    /// Materialize the dense matrix from the geometry (small spaces only).
    void build_dense_dist();

    double total_mass() const;

private:
    Eigen::MatrixXd dense_dist_;
};

struct DirectionalCap {
    int base_point = -1;
    TangentVec axis;
    double half_angle = 0.0;               // in (0, pi]
    std::optional<double> radius_cap;      // overrides delta_x
};

/// Analytic flow structure shared by the whole model catalog: the base
/// space scaled in distance and reweighted per atom over time.
struct FlowModel {
    std::function<double(double)> metric_scale;                 // d_t = c(t) d_base
    std::function<double(double, int)> weight_at;               // w_i(t)
    /// Ric_{f_t}(v,v) + 0.5 * dt g_t(v,v) for a g_t-unit vector v at x.
    std::function<double(double, const ChartPoint&, const TangentVec&)>
        rfex_integrand;
    std::function<double(double)> riemann_bound_t;              // sigma_t
    bool weights_static_shape = true;  // w_i(t) = mass_scale(t) * w_i(base)
};

/// Time-indexed family t -> DiscreteMMSpace on a fixed shared point set.
class SpaceFamily {
public:
    double t_lo = 0.0, t_hi = 0.0;
    std::function<DiscreteMMSpace(double)> generator;
    double declared_Cd = 0.0, declared_Cm = 0.0;
    std::optional<FlowModel> model;       // set for the analytic catalog
    DiscreteMMSpace base;                 // slice shape shared across t
    std::string id;
    // Set when the family came from a named catalog entry (file round-trip).
    std::string gen_name;
    std::string gen_params;               // compact JSON text

    DiscreteMMSpace at(double t) const;
    bool contains(double t) const { return t >= t_lo && t <= t_hi; }
};

// ---------------------------------------------------------------------------
// Generators (the model-space catalog)

struct SpaceSpec {
    std::string kind;                      // generator name
    nlohmann::json const* params = nullptr;
};

DiscreteMMSpace build_space(const std::string& kind, const nlohmann::json& params);

// Direct constructors used by tests and the acceptance suites.
DiscreteMMSpace make_flat_torus(int res, double side = 1.0);
DiscreteMMSpace make_weighted_circle(int res, double circumference,
                                     std::function<double(double)> density);
DiscreteMMSpace make_sphere(int n_lat, double radius = 1.0);
DiscreteMMSpace make_disk(int n_r, int n_phi, double radius = 1.0, int copies = 1);
DiscreteMMSpace make_cone2d(int n_r, int n_phi, double alpha, double outer_radius = 1.0);
DiscreteMMSpace make_gaussian_line(int res, double half_width,
                                   double A = 1.0, double a = 1.0,
                                   double b = 0.0, double c = 0.0);
DiscreteMMSpace make_circle_suspension(int n_s, int n_theta, double L);
DiscreteMMSpace make_cube_surface(int res_per_face, double edge = 1.0);

// Families.
SpaceFamily make_static_family(DiscreteMMSpace space, double t_lo = 0.0,
                               double t_hi = 1.0);
/// Shrinking round sphere g_t = (1 - 2(n-1) t) g.
SpaceFamily make_shrinking_sphere(int n_lat, double radius = 1.0);
/// Linear shrinking suspension over a circle of length L: g_t = (1-2t) g.
SpaceFamily make_shrinking_suspension(int n_s, int n_theta, double L);
/// 1D Gaussian-weight flow: d_t = sqrt(A0 + Adot t) |.|, f(x) = a x^2 / 2.
SpaceFamily make_gaussian_flow(int res, double half_width, double A0,
                               double Adot, double a);
/// Shrinking Gaussian: A_t = 1 - 2t, f = |x|^2/2.
SpaceFamily make_shrinking_gaussian(int res, double half_width);

// ---------------------------------------------------------------------------
// Operations

struct ValidationIssue {
    std::string check;
    bool pass = true;
    double worst = 0.0;
    std::vector<int> witness;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool all_pass() const;
};

ValidationReport validate_space(const DiscreteMMSpace& space,
                                uint64_t seed = 12345);

DiscreteMMSpace scale_space(const DiscreteMMSpace& space, double lambda_d,
                            double lambda_m);

DiscreteMMSpace family_at(const SpaceFamily& family, double t);

struct ExpResult {
    int nearest_atom = -1;
    ChartPoint chart;
};

ExpResult exp_map(const DiscreteMMSpace& space, int x, const TangentVec& z,
                  double r);

std::pair<double, double> log_lipschitz_constants(
    const SpaceFamily& family, const std::vector<double>& t_grid,
    int pair_samples = 200, uint64_t seed = 7);

/// Index of the atom closest to a chart point.
int nearest_atom(const DiscreteMMSpace& space, const ChartPoint& p);

} // namespace rfl
