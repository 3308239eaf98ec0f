#pragma once

#include <string>
#include <vector>

#include "rfl/mmspace.hpp"

namespace rfl {

struct transport_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Probability measure on the atom set of a DiscreteMMSpace.
struct ProbMeasure {
    std::vector<double> w;
    void validate() const; // throws unless sum = 1 (1e-12) and entries >= 0
};

ProbMeasure delta_measure(const DiscreteMMSpace& space, int atom);
/// Normalize a nonnegative weight vector to total mass one.
ProbMeasure measure_from_weights(std::vector<double> w);

struct SolverMeta {
    std::string method;
    int iterations = 0;
    double duality_gap = 0.0;
    double residual = 0.0;
    bool converged = true;
};

struct PlanEntry {
    int i = 0, j = 0;
    double mass = 0.0;
};

struct TransportPlan {
    std::vector<PlanEntry> entries;
    double cost = 0.0; // sum mass * d^2
    SolverMeta meta;
    std::vector<double> row_marginal(int n) const;
    std::vector<double> col_marginal(int n) const;
};

/// Exact squared-W2 optimal coupling (transportation network simplex on
/// the support-restricted dense cost matrix).
TransportPlan exact_lp(const DiscreteMMSpace& space, const ProbMeasure& mu,
                       const ProbMeasure& nu);

double w2(const DiscreteMMSpace& space, const ProbMeasure& mu,
          const ProbMeasure& nu);

struct SinkhornOptions {
    double eps_target = 0.0; // 0: auto, 1e-3 * mean cost
    double tol = 1e-9;       // L1 marginal residual
    int max_iter = 20000;
    bool debias = true;
};

struct SinkhornResult {
    double w2sq = 0.0;
    TransportPlan plan;
};

SinkhornResult sinkhorn(const DiscreteMMSpace& space, const ProbMeasure& mu,
                        const ProbMeasure& nu, SinkhornOptions opt = {});

/// Boltzmann entropy Ent(mu | m); +inf when mu is not absolutely continuous.
double entropy(const DiscreteMMSpace& space, const ProbMeasure& mu);

struct GeodesicPath {
    std::vector<double> a_grid;
    std::vector<ProbMeasure> measures;
    double w01 = 0.0;         // endpoint W distance
    double rebin_error = 0.0; // O(h) re-binning budget
};

GeodesicPath displacement_geodesic(const DiscreteMMSpace& space,
                                   const ProbMeasure& mu0,
                                   const ProbMeasure& mu1,
                                   const std::vector<double>& a_grid);

struct EndpointSlopes {
    double at1 = 0.0, at0 = 0.0;
    double err1 = 0.0, err0 = 0.0; // stencil error estimates
};

EndpointSlopes entropy_endpoint_slopes(const DiscreteMMSpace& space,
                                       const GeodesicPath& path);

} // namespace rfl
