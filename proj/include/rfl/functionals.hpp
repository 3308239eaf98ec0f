#pragma once

#include <vector>

#include "rfl/fitting.hpp"
#include "rfl/mmspace.hpp"

namespace rfl {

struct functional_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A_s(x) = (12 pi s)^(-n/2) sum_j w_j exp(-d(x,j)^2 / (12 s)).
double gaussian_volume(const DiscreteMMSpace& space, int x, double s);
/// One value per grid entry, sharing distance evaluations across s.
std::vector<double> gaussian_volume_batch(const DiscreteMMSpace& space, int x,
                                          const std::vector<double>& s);

/// Lebesgue density rho(x); analytic when the geometry provides it,
/// ball-ratio extrapolation otherwise (*se receives the fit error).
double density_at(const DiscreteMMSpace& space, int x, double* se = nullptr);

/// Double integral A_s = (12 pi s)^(-n/2) sum_ij w_i w_j exp(-d^2/(12 s)),
/// reduced over isometry orbits when the space carries them.
double gaussian_double_integral(const DiscreteMMSpace& space, double s);
std::vector<double> gaussian_double_integral_batch(const DiscreteMMSpace& space,
                                                   const std::vector<double>& s);
/// A_0 = int rho dm.
double gaussian_double_integral_limit(const DiscreteMMSpace& space);

SlopeEstimate slope_k(const DiscreteMMSpace& space, int x, const SGrid& grid);
SlopeEstimate slope_K(const DiscreteMMSpace& space, const SGrid& grid);

double directional_volume(const DiscreteMMSpace& space, int x,
                          const DirectionalCap& cap, double s);
SlopeEstimate slope_k_directional(const DiscreteMMSpace& space, int x,
                                  const DirectionalCap& cap, const SGrid& grid);

ExpansionFit boundary_expansion_fit(const DiscreteMMSpace& space,
                                    const SGrid& grid);

// Time-dependent variants: kernel built from d_{t+s}, measure from m_t.
double td_gaussian_volume(const SpaceFamily& family, double t, int x, double s);
SlopeEstimate td_slope_k(const SpaceFamily& family, double t, int x,
                         const SGrid& grid);
SlopeEstimate td_slope_K(const SpaceFamily& family, double t, const SGrid& grid);
SlopeEstimate td_slope_k_directional(const SpaceFamily& family, double t, int x,
                                     const DirectionalCap& cap,
                                     const SGrid& grid);

/// Angular fraction |Z| / |S_x| of a cap (dimension-aware).
double cap_fraction(int dim, const DirectionalCap& cap);

} // namespace rfl
