#pragma once

#include <functional>
#include <memory>
#include <string>

#include <Eigen/Sparse>

#include "rfl/mmspace.hpp"
#include "rfl/transport.hpp"

namespace rfl {

struct heat_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LaplacianBackend { spectral, graph, finite_difference };

/// Generator of the heat semigroup on a DiscreteMMSpace. Matrix backends
/// carry L explicitly; the spectral backend carries an analytic kernel
/// evaluator p_tau(i, j) (density w.r.t. the atom weights).
struct LaplacianOp {
    LaplacianBackend backend = LaplacianBackend::graph;
    std::string space_id;
    Eigen::SparseMatrix<double> L; // empty for spectral
    std::function<double(int, int, double)> kernel;
    std::shared_ptr<const DiscreteMMSpace> space;
};

LaplacianOp laplacian(const DiscreteMMSpace& space, LaplacianBackend backend);

/// L f for matrix backends; throws for spectral.
Eigen::VectorXd apply_generator(const LaplacianOp& op, const Eigen::VectorXd& f);

struct PropagatorConfig {
    enum class Scheme { crank_nicolson, backward_euler };
    Scheme scheme = Scheme::crank_nicolson;
    double dt_max = 1e-3;
    double tolerance = 1e-6;
};

/// Dual heat propagator: mu at time t pulled back to time s <= t.
ProbMeasure propagate_dual(const SpaceFamily& family, double t, double s,
                           const ProbMeasure& mu, PropagatorConfig cfg = {});

/// Static heat kernel measure P^_tau delta_x; backend chosen per kind.
ProbMeasure heat_kernel_measure(const DiscreteMMSpace& space, int x, double tau,
                                PropagatorConfig cfg = {});

/// Analytic heat kernel density on the suspension over a circle of length
/// L (Gegenbauer series), evaluated at polar angles s, s' and base gap.
double suspension_heat_kernel(double L, double s1, double th1, double s2,
                              double th2, double tau);

/// Effective static duration of a homothetic family between s and t:
/// integral of metric_scale(u)^{-2} du.
double effective_time(const SpaceFamily& family, double s, double t);

} // namespace rfl
