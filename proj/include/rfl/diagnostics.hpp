#pragma once

#include <optional>
#include <utility>

#include "rfl/fitting.hpp"
#include "rfl/heat.hpp"
#include "rfl/transport.hpp"

namespace rfl {

struct diagnostic_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Knobs shared by the flow diagnostics. The back-step grid realizes the
/// paper's s -> t limit; localization radii its eps -> 0 and y,z -> x
/// limits.
struct DiagnosticConfig {
    std::vector<double> s_backsteps;   // decreasing t-s values; empty = auto
    double eps_loc = 0.3;              // localization radius (length units)
    int pair_budget = 6;
    double dt_w = 1e-3;                // step for backward d/dt W^2
    double tol = 0.05;                 // generic inequality slack
    double tol_K = 1.5;                // |K_t| ceiling for minimal-SRF
    double sub_eps = 0.5;              // eps of the rough/weak sub checks
    double n_super_window = 0.2;       // [s,t] length for the N-super integral
    double divergence_threshold = 1.0; // growth across halving radii
    double support_tail = 1e-9;        // mollified-measure truncation mass
    double delta_max = 0.02;           // ceiling for auto back-steps
    int backstep_count = 5;
    uint64_t seed = 1234;
    PropagatorConfig propagator;

    std::vector<double> backsteps_for(const SpaceFamily& family, double t) const;
};

struct PairDiagnostic {
    double t = 0.0;
    int x = -1, y = -1;
    double d_t = 0.0;
    SlopeEstimate theta;
    std::optional<SlopeEstimate> eta;
    std::optional<double> rfex;
    double margin_lower = 0.0, margin_upper = 0.0; // sandwich slacks
};

SlopeEstimate theta(const SpaceFamily& family, double t, int x, int y,
                    const DiagnosticConfig& cfg = {});
SlopeEstimate theta_star(const SpaceFamily& family, double t, int x,
                         const DiagnosticConfig& cfg = {});
SlopeEstimate theta_flat(const SpaceFamily& family, double t, int x, int y,
                         const DiagnosticConfig& cfg = {});

SlopeEstimate eta(const SpaceFamily& family, double t, int x, int y, double eps,
                  const DiagnosticConfig& cfg = {});
SlopeEstimate eta_star(const SpaceFamily& family, double t, int x,
                       const DiagnosticConfig& cfg = {});

double rfex(const SpaceFamily& family, double t, int x, int y);

struct SandwichReport {
    std::vector<PairDiagnostic> pairs;
    int violations = 0;
};
SandwichReport sandwich_check(const SpaceFamily& family, double t,
                              const std::vector<std::pair<int, int>>& pairs,
                              const DiagnosticConfig& cfg = {});

/// One inequality check: pass iff margin >= -tol; witnesses list failures.
struct FlagResult {
    bool pass = true;
    double margin = 0.0; // worst signed slack, relative units
    std::vector<std::string> witnesses;
    std::string note;
};

FlagResult rough_super_check(const SpaceFamily& family,
                             const std::vector<std::pair<double, double>>& st,
                             const std::vector<std::pair<int, int>>& pairs,
                             const DiagnosticConfig& cfg = {});
FlagResult rough_sub_check(const SpaceFamily& family, double t,
                           const std::vector<std::pair<int, int>>& pairs,
                           double eps, const DiagnosticConfig& cfg = {});
FlagResult weak_super_check(const SpaceFamily& family, double t,
                            const std::vector<std::pair<int, int>>& pairs,
                            const DiagnosticConfig& cfg = {});
FlagResult weak_sub_check(const SpaceFamily& family, double t,
                          const std::vector<std::pair<int, int>>& pairs,
                          double eps, const DiagnosticConfig& cfg = {});
FlagResult n_super_check(const SpaceFamily& family, double t,
                         const std::vector<std::pair<int, int>>& pairs, double N,
                         const DiagnosticConfig& cfg = {});

enum class LaplaceMode { sharp, weak, dynamic };

/// Static Laplace comparison margin: bound(K, d) - 0.5 * Delta_y d^2(x, .).
double laplace_comparison_check(const DiscreteMMSpace& space, int x, int y,
                                LaplaceMode mode, double K,
                                LaplacianBackend backend = LaplacianBackend::graph);
/// Dynamic SRF characterization: n + (2/r) int dt d_t q dq - 0.5 Delta d_t^2.
double laplace_comparison_dynamic(const SpaceFamily& family, double t, int x,
                                  int y,
                                  LaplacianBackend backend = LaplacianBackend::graph);

struct Verdict {
    FlagResult rough_super, rough_sub, weak_super, weak_sub;
    std::vector<std::pair<double, FlagResult>> n_super; // (N, result)
    FlagResult minimal_srf;
    std::vector<std::pair<double, double>> K_samples;   // (t, K_t slope)
};

Verdict classify(const SpaceFamily& family, const DiagnosticConfig& cfg = {});

/// Random atom pairs with d in [d_lo, d_hi], skipping singular atoms.
std::vector<std::pair<int, int>> sample_pairs(const DiscreteMMSpace& space,
                                              int count, double d_lo,
                                              double d_hi, uint64_t seed);

} // namespace rfl
