#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace rfl {

/// Decreasing geometric grid of kernel scales for the s -> 0 slope fits.
struct SGrid {
    std::vector<double> s_values;          // strictly decreasing, positive
    double s_min_factor = 9.0;             // s_min >= factor * h^2
    double s_max = 0.0;

    static SGrid geometric(double s_max, double s_min, int count,
                           double s_min_factor = 9.0);
    /// Default window for a space of mesh h and feature scale (injectivity
    /// or boundary scale): s in [factor*h^2, min(s_cap, (scale/9)^2/12)].
    static SGrid for_mesh(double h, double feature_scale, int count = 24,
                          double factor = 9.0, double s_cap = 0.05);
    bool valid_for_mesh(double h) const;
};

/// Extrapolated initial slope of s -> (A_0 - A_s): fit against
/// c_half sqrt(s) + c_one s + c_three_half s^(3/2) (+ an s^2 column that
/// absorbs the smooth quadratic remainder of closed-space expansions).
struct SlopeEstimate {
    double value = 0.0;                    // = c_one when finite
    bool diverges = false;
    int divergence_sign = 0;               // sign of c_half when divergent
    double c_half = 0.0;
    double c_one = 0.0;
    double c_three_half = 0.0;
    double se_half = 0.0;                  // standard error of c_half
    double se_one = 0.0;
    double residual = 0.0;                 // fit RMS
    double liminf_proxy = 0.0;             // min of difference quotients
    std::vector<double> window;            // s grid actually used

    bool is_finite() const { return !diverges; }
    double infinity_value() const {
        return divergence_sign > 0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
    }
};

/// a0 + b sqrt(s) + c s fit of s -> A_s itself.
struct ExpansionFit {
    double a0 = 0.0;
    double b_sqrt = 0.0;
    double c_lin = 0.0;
    double se_a0 = 0.0, se_b = 0.0, se_c = 0.0;
    double residual = 0.0;
};

/// Fit y_i = c_half sqrt(s_i) + c_one s_i + c_three_half s_i^(3/2) (+ s^2).
/// sigma_threshold controls the +-infinity classification on c_half.
SlopeEstimate fit_slope(const std::vector<double>& s,
                        const std::vector<double>& y,
                        double sigma_threshold = 3.0);

ExpansionFit fit_expansion(const std::vector<double>& s,
                           const std::vector<double>& y);

/// Ordinary least squares with standard errors; columns of X are the
/// basis functions. Returns coefficients; se and rms filled on request.
std::vector<double> least_squares(const std::vector<std::vector<double>>& X,
                                  const std::vector<double>& y,
                                  std::vector<double>* se, double* rms);

/// Simple (value, slope) line fit with standard errors.
struct LineFit {
    double intercept = 0.0, slope = 0.0;
    double se_intercept = 0.0, se_slope = 0.0;
    double rms = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace rfl
