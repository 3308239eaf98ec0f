#include "rfl/fitting.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>

namespace rfl {

SGrid SGrid::geometric(double s_max, double s_min, int count,
                       double s_min_factor) {
    if (!(s_max > s_min) || s_min <= 0 || count < 4)
        throw std::invalid_argument("SGrid: need s_max > s_min > 0, count >= 4");
    SGrid g;
    g.s_max = s_max;
    g.s_min_factor = s_min_factor;
    const double ratio = std::pow(s_min / s_max, 1.0 / (count - 1));
    if (ratio < 0.3 || ratio > 0.9)
        throw std::invalid_argument("SGrid: spacing ratio outside [0.3, 0.9]");
    double s = s_max;
    for (int i = 0; i < count; ++i) {
        g.s_values.push_back(s);
        s *= ratio;
    }
    return g;
}

SGrid SGrid::for_mesh(double h, double feature_scale, int count, double factor,
                      double s_cap) {
    // Kernel effective radius 3*sqrt(12 s) must stay below the feature scale.
    double s_max = std::min(s_cap, feature_scale * feature_scale / (9.0 * 12.0));
    double s_min = factor * h * h;
    if (!(s_max > 1.5 * s_min))
        throw std::invalid_argument("SGrid::for_mesh: mesh too coarse for window");
    return geometric(s_max, s_min, count, factor);
}

bool SGrid::valid_for_mesh(double h) const {
    if (s_values.size() < 4) return false;
    for (size_t i = 1; i < s_values.size(); ++i) {
        double r = s_values[i] / s_values[i - 1];
        if (r < 0.3 - 1e-12 || r > 0.9 + 1e-12) return false;
    }
    return s_values.back() >= s_min_factor * h * h * (1.0 - 1e-9);
}

std::vector<double> least_squares(const std::vector<std::vector<double>>& X,
                                  const std::vector<double>& y,
                                  std::vector<double>* se, double* rms) {
    const int n = static_cast<int>(y.size());
    const int p = static_cast<int>(X.size());
    if (n < p) throw std::invalid_argument("least_squares: underdetermined");
    Eigen::MatrixXd A(n, p);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) {
        b(i) = y[i];
        for (int j = 0; j < p; ++j) A(i, j) = X[j][i];
    }
    // Column equilibration + SVD keeps near-collinear bases (narrow
    // geometric windows) from amplifying roundoff into the coefficients.
    Eigen::VectorXd scale(p);
    for (int j = 0; j < p; ++j) {
        double nrm = A.col(j).norm();
        scale(j) = nrm > 0 ? nrm : 1.0;
        A.col(j) /= scale(j);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A,
                                          Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    double cutoff = sv(0) * 1e-10;
    Eigen::VectorXd inv_sv(p);
    for (int j = 0; j < p; ++j) inv_sv(j) = sv(j) > cutoff ? 1.0 / sv(j) : 0.0;
    Eigen::VectorXd coef_s =
        svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().transpose() * b);
    Eigen::VectorXd coef = coef_s.cwiseQuotient(scale);
    Eigen::VectorXd resid = b - A * coef_s;
    double s2 = n > p ? resid.squaredNorm() / (n - p) : 0.0;
    if (rms) *rms = std::sqrt(resid.squaredNorm() / n);
    if (se) {
        se->assign(p, 0.0);
        for (int j = 0; j < p; ++j) {
            double var = 0.0;
            for (int k = 0; k < p; ++k) {
                double v = svd.matrixV()(j, k) * inv_sv(k);
                var += v * v;
            }
            (*se)[j] = std::sqrt(s2 * var) / scale(j);
        }
    }
    std::vector<double> out(p);
    for (int j = 0; j < p; ++j) out[j] = coef(j);
    return out;
}

SlopeEstimate fit_slope(const std::vector<double>& s,
                        const std::vector<double>& y,
                        double sigma_threshold) {
    if (s.size() != y.size() || s.size() < 6)
        throw std::invalid_argument("fit_slope: need >= 6 samples");
    const int n = static_cast<int>(s.size());
    // The extra s^2 column keeps the smooth quadratic part of closed-space
    // expansions from leaking into the sqrt(s) boundary coefficient.
    std::vector<std::vector<double>> X(4, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        X[0][i] = std::sqrt(s[i]);
        X[1][i] = s[i];
        X[2][i] = s[i] * std::sqrt(s[i]);
        X[3][i] = s[i] * s[i];
    }
    // Condition check on the scaled design.
    {
        Eigen::MatrixXd A(n, 4);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < 4; ++j) A(i, j) = X[j][i] / X[j][n - 1];
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
        double cond = svd.singularValues()(0) /
                      std::max(svd.singularValues()(3), 1e-300);
        if (cond > 1e8)
            throw std::runtime_error("fit_slope: ill-conditioned fit window");
    }
    std::vector<double> se;
    double rms = 0.0;
    auto coef = least_squares(X, y, &se, &rms);

    SlopeEstimate est;
    est.c_half = coef[0];
    est.c_one = coef[1];
    est.c_three_half = coef[2];
    est.se_half = se[0];
    est.se_one = se[1];
    est.residual = rms;
    est.window = s;
    est.liminf_proxy = y[0] / s[0];
    for (int i = 0; i < n; ++i)
        est.liminf_proxy = std::min(est.liminf_proxy, y[i] / s[i]);
    // Materiality floor: a sqrt(s) coefficient below kDivergenceFloor is
    // treated as fit leakage, not a boundary/vertex term.
    const double kDivergenceFloor = 0.5;
    if (std::abs(est.c_half) > kDivergenceFloor &&
        std::abs(est.c_half) > sigma_threshold * std::max(est.se_half, 1e-300)) {
        est.diverges = true;
        est.divergence_sign = est.c_half > 0 ? 1 : -1;
        est.value = est.infinity_value();
    } else {
        est.value = est.c_one;
    }
    return est;
}

ExpansionFit fit_expansion(const std::vector<double>& s,
                           const std::vector<double>& y) {
    if (s.size() != y.size() || s.size() < 4)
        throw std::invalid_argument("fit_expansion: need >= 4 samples");
    const int n = static_cast<int>(s.size());
    std::vector<std::vector<double>> X(3, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        X[0][i] = 1.0;
        X[1][i] = std::sqrt(s[i]);
        X[2][i] = s[i];
    }
    std::vector<double> se;
    double rms = 0.0;
    auto coef = least_squares(X, y, &se, &rms);
    ExpansionFit fit;
    fit.a0 = coef[0];
    fit.b_sqrt = coef[1];
    fit.c_lin = coef[2];
    fit.se_a0 = se[0];
    fit.se_b = se[1];
    fit.se_c = se[2];
    fit.residual = rms;
    return fit;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    if (n < 2 || y.size() != x.size())
        throw std::invalid_argument("fit_line: need >= 2 samples");
    std::vector<std::vector<double>> X(2, std::vector<double>(n));
    for (int i = 0; i < n; ++i) {
        X[0][i] = 1.0;
        X[1][i] = x[i];
    }
    std::vector<double> se;
    double rms = 0.0;
    auto coef = least_squares(X, y, &se, &rms);
    LineFit f;
    f.intercept = coef[0];
    f.slope = coef[1];
    f.se_intercept = se[0];
    f.se_slope = se[1];
    f.rms = rms;
    return f;
}

} // namespace rfl
