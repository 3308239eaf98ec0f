#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rfl/diagnostics.hpp"
#include "rfl/functionals.hpp"

namespace rfl {

namespace {

ProbMeasure truncate_measure(const ProbMeasure& mu, double tail) {
    if (tail <= 0) return mu;
    std::vector<int> idx;
    for (size_t i = 0; i < mu.w.size(); ++i)
        if (mu.w[i] > 0) idx.push_back(static_cast<int>(i));
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return mu.w[a] > mu.w[b]; });
    ProbMeasure out;
    out.w.assign(mu.w.size(), 0.0);
    double kept = 0.0;
    for (int i : idx) {
        out.w[i] = mu.w[i];
        kept += mu.w[i];
        if (kept >= 1.0 - tail) break;
    }
    for (double& v : out.w) v /= kept;
    return out;
}

double w2sq(const DiscreteMMSpace& slice, const ProbMeasure& mu,
            const ProbMeasure& nu, double tail) {
    return exact_lp(slice, truncate_measure(mu, tail), truncate_measure(nu, tail))
        .cost;
}

/// Heat-mollified atom measure restricted to the eps-ball and renormalized.
ProbMeasure mollified(const DiscreteMMSpace& slice, int x, double tau,
                      double eps) {
    ProbMeasure mu = heat_kernel_measure(slice, x, tau);
    double kept = 0.0;
    for (int j = 0; j < slice.n_points; ++j) {
        if (slice.dist(x, j) > eps) mu.w[j] = 0.0;
        kept += mu.w[j];
    }
    if (kept <= 0) throw diagnostic_error("mollified: empty ball");
    for (double& v : mu.w) v /= kept;
    return mu;
}

ProbMeasure uniform_ball(const DiscreteMMSpace& slice, int x, double eps) {
    std::vector<double> w(slice.n_points, 0.0);
    for (int j = 0; j < slice.n_points; ++j)
        if (slice.dist(x, j) <= eps) w[j] = slice.weights[j];
    return measure_from_weights(std::move(w));
}

/// Backward d/dt W_t^2 with Richardson refinement. Homothetic models need
/// no extra transport solves: W_u^2 = c(u)^2 W_base^2.
double dt_minus_w2sq(const SpaceFamily& family, double t, const ProbMeasure& mu,
                     const ProbMeasure& nu, const DiagnosticConfig& cfg,
                     double w2sq_t) {
    double h = std::min(cfg.dt_w, 0.45 * (t - family.t_lo));
    if (h <= 0) throw diagnostic_error("dt W^2: t at interval start");
    if (family.model) {
        auto g = [&](double u) {
            double c = family.model->metric_scale(u);
            return c * c;
        };
        double d1 = (g(t) - g(t - h)) / h;
        double d2 = (g(t) - g(t - h / 2)) / (h / 2);
        return (2 * d2 - d1) * w2sq_t / g(t);
    }
    double wt = w2sq_t;
    double w1 = w2sq(family.at(t - h), mu, nu, cfg.support_tail);
    double w2h = w2sq(family.at(t - h / 2), mu, nu, cfg.support_tail);
    double d1 = (wt - w1) / h;
    double d2 = (wt - w2h) / (h / 2);
    return 2 * d2 - d1;
}

SlopeEstimate fit_backstep_quotients(const std::vector<double>& deltas,
                                     const std::vector<double>& logs) {
    // y(delta) = bias + theta * delta + O(delta^2); the intercept absorbs
    // the delta-independent part of the discretization error.
    std::vector<std::vector<double>> X(3, std::vector<double>(deltas.size()));
    for (size_t k = 0; k < deltas.size(); ++k) {
        X[0][k] = 1.0;
        X[1][k] = deltas[k];
        X[2][k] = deltas[k] * deltas[k];
    }
    std::vector<double> se;
    double rms = 0.0;
    std::vector<double> c = least_squares(X, logs, &se, &rms);
    SlopeEstimate est;
    est.value = c[1];
    est.c_half = c[0]; // intercept (bias term)
    est.c_one = c[1];
    est.c_three_half = c[2];
    est.se_half = se[0];
    est.se_one = se[1];
    est.residual = rms;
    est.window = deltas;
    est.liminf_proxy = logs[0] / deltas[0];
    for (size_t k = 0; k < deltas.size(); ++k)
        est.liminf_proxy = std::min(est.liminf_proxy, logs[k] / deltas[k]);
    return est;
}

std::vector<int> ball_atoms(const DiscreteMMSpace& slice, int x, double r) {
    std::vector<int> out;
    for (int j = 0; j < slice.n_points; ++j)
        if (slice.dist(x, j) <= r) out.push_back(j);
    return out;
}

std::vector<std::pair<int, int>> pairs_in_ball(const DiscreteMMSpace& slice,
                                               const std::vector<int>& atoms,
                                               int budget, std::mt19937_64& rng) {
    std::vector<std::pair<int, int>> all;
    for (size_t a = 0; a < atoms.size(); ++a)
        for (size_t b = a + 1; b < atoms.size(); ++b)
            if (slice.dist(atoms[a], atoms[b]) > 0)
                all.emplace_back(atoms[a], atoms[b]);
    if (static_cast<int>(all.size()) > budget) {
        std::shuffle(all.begin(), all.end(), rng);
        all.resize(budget);
    }
    return all;
}

/// Pairs of maximal separation inside the ball. Their geodesics pass
/// closest to the ball center, so they are the pairs that actually probe
/// the curvature there; random pairs mostly sense ambient discretization.
std::vector<std::pair<int, int>> extremal_pairs(const DiscreteMMSpace& slice,
                                                const std::vector<int>& atoms,
                                                int budget) {
    std::vector<std::pair<int, int>> all;
    for (size_t a = 0; a < atoms.size(); ++a)
        for (size_t b = a + 1; b < atoms.size(); ++b)
            if (slice.dist(atoms[a], atoms[b]) > 0)
                all.emplace_back(atoms[a], atoms[b]);
    std::sort(all.begin(), all.end(), [&](const auto& p, const auto& q) {
        return slice.dist(p.first, p.second) > slice.dist(q.first, q.second);
    });
    if (static_cast<int>(all.size()) > budget) all.resize(budget);
    return all;
}

double local_spacing(const DiscreteMMSpace& slice, const std::vector<int>& atoms,
                     int a) {
    double nn = std::numeric_limits<double>::infinity();
    for (int b : atoms)
        if (b != a) nn = std::min(nn, slice.dist(a, b));
    return nn;
}

struct EtaDetail {
    double value = 0.0;
    double ent0 = 0.0, ent1 = 0.0;
    double w2sq_t = 0.0;
    double err = 0.0;
};

EtaDetail eta_detail(const SpaceFamily& family, double t, int x, int y,
                     double eps, const DiagnosticConfig& cfg) {
    DiscreteMMSpace slice = family.at(t);
    if (slice.dist(x, y) <= 0) throw diagnostic_error("eta: coincident pair");
    double tau1 = 0.5 * (eps / 3) * (eps / 3);
    std::vector<std::pair<ProbMeasure, ProbMeasure>> cands;
    cands.emplace_back(mollified(slice, x, tau1, eps),
                       mollified(slice, y, tau1, eps));
    cands.emplace_back(mollified(slice, x, tau1 / 2, eps),
                       mollified(slice, y, tau1 / 2, eps));
    cands.emplace_back(uniform_ball(slice, x, eps), uniform_ball(slice, y, eps));

    // Wide interpolation grid: each step moves the blobs by W/4, which has
    // to clear the atom spacing or the nearest-atom re-binning freezes the
    // entropy and the convexity reads as zero. The endpoint slope
    // difference of the quadratic model is twice its curvature.
    std::vector<double> a_grid = {0.0, 0.25, 0.5, 0.75, 1.0};
    EtaDetail best;
    bool have = false;
    for (auto& [mu0, mu1] : cands) {
        GeodesicPath path = displacement_geodesic(slice, mu0, mu1, a_grid);
        if (path.w01 <= 0) continue;
        std::vector<double> ones, lin, quad, ent;
        for (size_t k = 0; k < a_grid.size(); ++k) {
            double e = entropy(slice, path.measures[k]);
            if (!std::isfinite(e)) break;
            ones.push_back(1.0);
            lin.push_back(a_grid[k]);
            quad.push_back(a_grid[k] * a_grid[k]);
            ent.push_back(e);
        }
        if (ent.size() != a_grid.size()) continue;
        std::vector<double> se;
        double rms = 0.0;
        auto c = least_squares({ones, lin, quad}, ent, &se, &rms);
        double wsq = path.w01 * path.w01;
        double dtw = dt_minus_w2sq(family, t, mu0, mu1, cfg, wsq);
        EtaDetail d;
        d.value = (2.0 * c[2] + 0.5 * dtw) / wsq;
        d.ent0 = ent.front();
        d.ent1 = ent.back();
        d.w2sq_t = wsq;
        d.err = (2.0 * se[2] + rms) / wsq;
        if (!have || d.value < best.value) best = d;
        have = true;
    }
    if (!have) throw diagnostic_error("eta: no admissible geodesic candidate");
    return best;
}

double diameter_estimate(const DiscreteMMSpace& slice, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, slice.n_points - 1);
    double d = 0.0;
    for (int k = 0; k < 300; ++k)
        d = std::max(d, slice.dist(pick(rng), pick(rng)));
    return d;
}

} // namespace

std::vector<double> DiagnosticConfig::backsteps_for(const SpaceFamily& family,
                                                    double t) const {
    double span = t - family.t_lo;
    if (!s_backsteps.empty()) {
        std::vector<double> out;
        for (double d : s_backsteps)
            if (d > 0 && d < span) out.push_back(d);
        if (out.empty())
            throw diagnostic_error("backsteps: grid outside family interval");
        std::sort(out.rbegin(), out.rend());
        return out;
    }
    double c = family.model ? family.model->metric_scale(t) : 1.0;
    double h = family.base.mesh_h * c;
    double lo = std::max(2.0 * h * h, 1e-8);
    if (lo >= 0.45 * span)
        throw diagnostic_error("backsteps: mesh too coarse for this t");
    double hi = std::min(std::max(delta_max, 3.0 * lo), 0.45 * span);
    int n = std::max(2, backstep_count);
    std::vector<double> out(n);
    double r = std::pow(lo / hi, 1.0 / (n - 1));
    for (int k = 0; k < n; ++k) out[k] = hi * std::pow(r, k);
    return out;
}

SlopeEstimate theta(const SpaceFamily& family, double t, int x, int y,
                    const DiagnosticConfig& cfg) {
    if (x == y) throw diagnostic_error("theta: x == y");
    DiscreteMMSpace slice_t = family.at(t);
    double d = slice_t.dist(x, y);
    if (d <= 0) throw diagnostic_error("theta: zero distance");
    std::vector<double> deltas = cfg.backsteps_for(family, t);
    std::vector<double> logs(deltas.size());
    for (size_t k = 0; k < deltas.size(); ++k) {
        double s = t - deltas[k];
        ProbMeasure mx = propagate_dual(family, t, s, delta_measure(family.base, x),
                                        cfg.propagator);
        ProbMeasure my = propagate_dual(family, t, s, delta_measure(family.base, y),
                                        cfg.propagator);
        double w = std::sqrt(w2sq(family.at(s), mx, my, cfg.support_tail));
        if (w <= 0) throw diagnostic_error("theta: vanishing W_s");
        logs[k] = std::log(d / w); // = theta * delta + bias + o(delta)
    }
    return fit_backstep_quotients(deltas, logs);
}

SlopeEstimate theta_star(const SpaceFamily& family, double t, int x,
                         const DiagnosticConfig& cfg) {
    DiscreteMMSpace slice = family.at(t);
    std::vector<double> radii = {cfg.eps_loc, cfg.eps_loc / 2, cfg.eps_loc / 4};
    std::vector<double> sups;
    for (double r : radii) {
        std::vector<int> atoms = ball_atoms(slice, x, r);
        auto pairs = extremal_pairs(slice, atoms, cfg.pair_budget);
        if (pairs.empty())
            throw diagnostic_error("theta_star: insufficient atoms near x");
        // Back-steps shrink with the probe radius (delta << d^2 keeps the
        // difference quotients in the linear regime), floored by the local
        // atom spacing the heat solver can resolve.
        DiagnosticConfig local = cfg;
        if (cfg.s_backsteps.empty()) {
            double h_loc = 0.0;
            for (auto [y, z] : pairs)
                h_loc = std::max({h_loc, local_spacing(slice, atoms, y),
                                  local_spacing(slice, atoms, z)});
            double lo = 2.0 * h_loc * h_loc;
            double hi = 0.09 * r * r;
            if (hi < 1.5 * lo)
                throw diagnostic_error("theta_star: mesh too coarse near x");
            int n = std::max(4, cfg.backstep_count);
            double ratio = std::pow(lo / hi, 1.0 / (n - 1));
            local.s_backsteps.resize(n);
            for (int k = 0; k < n; ++k)
                local.s_backsteps[k] = hi * std::pow(ratio, k);
        }
        double sup = -std::numeric_limits<double>::infinity();
        for (auto [y, z] : pairs)
            sup = std::max(sup, theta(family, t, y, z, local).value);
        sups.push_back(sup);
    }
    SlopeEstimate est;
    est.window = radii;
    bool growing = sups[2] > sups[1] && sups[1] > sups[0] &&
                   sups[2] - sups[0] > cfg.divergence_threshold;
    if (growing) {
        est.diverges = true;
        est.divergence_sign = 1;
        est.value = sups[2];
        est.liminf_proxy = sups[2];
        return est;
    }
    LineFit fit = fit_line(radii, sups);
    est.value = fit.intercept;
    est.se_one = fit.se_intercept;
    est.residual = fit.rms;
    est.liminf_proxy = *std::max_element(sups.begin(), sups.end());
    return est;
}

SlopeEstimate theta_flat(const SpaceFamily& family, double t, int x, int y,
                         const DiagnosticConfig& cfg) {
    DiscreteMMSpace slice_t = family.at(t);
    double eps = cfg.eps_loc;
    double tau = 0.5 * (eps / 3) * (eps / 3);
    std::vector<std::pair<ProbMeasure, ProbMeasure>> cands;
    cands.emplace_back(delta_measure(slice_t, x), delta_measure(slice_t, y));
    cands.emplace_back(uniform_ball(slice_t, x, eps), uniform_ball(slice_t, y, eps));
    cands.emplace_back(mollified(slice_t, x, tau, eps),
                       mollified(slice_t, y, tau, eps));

    std::vector<double> deltas = cfg.backsteps_for(family, t);
    SlopeEstimate best;
    bool have = false;
    for (auto& [mu, nu] : cands) {
        double wt = std::sqrt(w2sq(slice_t, mu, nu, cfg.support_tail));
        if (wt <= 0) continue;
        std::vector<double> logs(deltas.size());
        for (size_t k = 0; k < deltas.size(); ++k) {
            double s = t - deltas[k];
            ProbMeasure ms = propagate_dual(family, t, s, mu, cfg.propagator);
            ProbMeasure ns = propagate_dual(family, t, s, nu, cfg.propagator);
            double ws = std::sqrt(w2sq(family.at(s), ms, ns, cfg.support_tail));
            logs[k] = std::log(wt / ws);
        }
        SlopeEstimate est = fit_backstep_quotients(deltas, logs);
        if (!have || est.value < best.value) best = est;
        have = true;
    }
    if (!have) throw diagnostic_error("theta_flat: no candidate measures");
    return best;
}

SlopeEstimate eta(const SpaceFamily& family, double t, int x, int y, double eps,
                  const DiagnosticConfig& cfg) {
    EtaDetail d = eta_detail(family, t, x, y, eps, cfg);
    SlopeEstimate est;
    est.value = d.value;
    est.c_one = d.value;
    est.residual = d.err;
    return est;
}

SlopeEstimate eta_star(const SpaceFamily& family, double t, int x,
                       const DiagnosticConfig& cfg) {
    DiscreteMMSpace slice = family.at(t);
    std::mt19937_64 rng(cfg.seed + 1);
    std::vector<double> radii = {cfg.eps_loc, cfg.eps_loc / 2, cfg.eps_loc / 4};
    std::vector<double> sups;
    for (double r : radii) {
        std::vector<int> atoms = ball_atoms(slice, x, r);
        auto pairs = pairs_in_ball(slice, atoms, cfg.pair_budget, rng);
        if (pairs.empty())
            throw diagnostic_error("eta_star: insufficient atoms near x");
        double sup = -std::numeric_limits<double>::infinity();
        for (auto [y, z] : pairs)
            sup = std::max(sup, eta(family, t, y, z, r / 2, cfg).value);
        sups.push_back(sup);
    }
    SlopeEstimate est;
    est.window = radii;
    bool growing = sups[2] > sups[1] && sups[1] > sups[0] &&
                   sups[2] - sups[0] > cfg.divergence_threshold;
    if (growing) {
        est.diverges = true;
        est.divergence_sign = 1;
        est.value = sups[2];
        return est;
    }
    LineFit fit = fit_line(radii, sups);
    est.value = fit.intercept;
    est.se_one = fit.se_intercept;
    est.residual = fit.rms;
    est.liminf_proxy = *std::max_element(sups.begin(), sups.end());
    return est;
}

double rfex(const SpaceFamily& family, double t, int x, int y) {
    if (!family.model)
        throw diagnostic_error("rfex: family carries no analytic model");
    const DiscreteMMSpace& base = family.base;
    if (!base.geometry || !base.geometry->has_geodesics())
        throw diagnostic_error("rfex: geometry without geodesics");
    const ChartPoint& cx = base.coords.at(x);
    const ChartPoint& cy = base.coords.at(y);
    const ModelGeometry& g = *base.geometry;
    auto tangent_at = [&](const ChartPoint& p, double a) {
        TangentVec v;
        if (!g.has_exp()) return v; // catalog integrands ignore direction
        if (a < 1.0)
            v = g.log(p, cy);
        else {
            v = g.log(p, cx);
            v.z = -v.z;
        }
        double n = v.z.norm();
        if (n > 0) v.z /= n;
        return v;
    };
    // Simpson over the (single listed) minimizing geodesic.
    const int m = 32; // intervals
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
        double a = static_cast<double>(i) / m;
        ChartPoint p = g.geodesic(cx, cy, a);
        double f = family.model->rfex_integrand(t, p, tangent_at(p, a));
        double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * f;
    }
    return acc / (3.0 * m);
}

SandwichReport sandwich_check(const SpaceFamily& family, double t,
                              const std::vector<std::pair<int, int>>& pairs,
                              const DiagnosticConfig& cfg) {
    SandwichReport rep;
    rep.pairs.resize(pairs.size());
    double sigma = family.model ? family.model->riemann_bound_t(t) : 0.0;
    DiscreteMMSpace slice = family.at(t);
    int violations = 0;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) reduction(+ : violations)
#endif
    for (int p = 0; p < static_cast<int>(pairs.size()); ++p) {
        auto [x, y] = pairs[p];
        PairDiagnostic diag;
        diag.t = t;
        diag.x = x;
        diag.y = y;
        diag.d_t = slice.dist(x, y);
        diag.theta = theta(family, t, x, y, cfg);
        diag.rfex = rfex(family, t, x, y);
        double err = cfg.tol + 2.0 * diag.theta.se_one;
        double arg = std::sqrt(std::max(sigma, 0.0)) * diag.d_t;
        double bound = arg < 1.5 ? sigma * std::tan(arg) * std::tan(arg)
                                 : std::numeric_limits<double>::infinity();
        diag.margin_lower = diag.theta.value - *diag.rfex + err;
        diag.margin_upper = *diag.rfex + bound + err - diag.theta.value;
        if (diag.margin_lower < 0 || diag.margin_upper < 0) ++violations;
        rep.pairs[p] = diag;
    }
    rep.violations = violations;
    return rep;
}

FlagResult rough_super_check(const SpaceFamily& family,
                             const std::vector<std::pair<double, double>>& st,
                             const std::vector<std::pair<int, int>>& pairs,
                             const DiagnosticConfig& cfg) {
    FlagResult res;
    res.margin = std::numeric_limits<double>::infinity();
    for (auto [s, t] : st)
        if (!(s < t)) throw diagnostic_error("rough_super: need s < t");
    struct Job {
        double s, t;
        int x, y;
    };
    std::vector<Job> jobs;
    for (auto [s, t] : st)
        for (auto [x, y] : pairs) jobs.push_back({s, t, x, y});
#pragma omp parallel for schedule(dynamic)
    for (size_t k = 0; k < jobs.size(); ++k) {
        const Job& jb = jobs[k];
        DiscreteMMSpace slice_t = family.at(jb.t);
        double d = slice_t.dist(jb.x, jb.y);
        if (d <= 0) continue;
        ProbMeasure mx = propagate_dual(family, jb.t, jb.s,
                                        delta_measure(family.base, jb.x),
                                        cfg.propagator);
        ProbMeasure my = propagate_dual(family, jb.t, jb.s,
                                        delta_measure(family.base, jb.y),
                                        cfg.propagator);
        double w = w2sq(family.at(jb.s), mx, my, cfg.support_tail);
        double rel = (d * d - w) / (d * d);
#pragma omp critical
        {
            if (rel < res.margin) res.margin = rel;
            if (rel < -cfg.tol) {
                res.pass = false;
                std::ostringstream os;
                os << "t=" << jb.t << " s=" << jb.s << " pair=(" << jb.x << ","
                   << jb.y << ") W2^2/d^2=" << w / (d * d);
                res.witnesses.push_back(os.str());
            }
        }
    }
    return res;
}

FlagResult rough_sub_check(const SpaceFamily& family, double t,
                           const std::vector<std::pair<int, int>>& pairs,
                           double eps, const DiagnosticConfig& cfg) {
    FlagResult res;
    res.margin = std::numeric_limits<double>::infinity();
    DiscreteMMSpace slice_t = family.at(t);
    std::vector<double> deltas = cfg.backsteps_for(family, t);
    bool any = false;
    struct Job {
        int x, y;
        double d, delta;
    };
    std::vector<Job> jobs;
    for (auto [x, y] : pairs) {
        double d = slice_t.dist(x, y);
        if (d <= 0 || d > cfg.eps_loc) continue;
        any = true;
        for (double delta : deltas) jobs.push_back({x, y, d, delta});
    }
#pragma omp parallel for schedule(dynamic)
    for (size_t k = 0; k < jobs.size(); ++k) {
        const Job& jb = jobs[k];
        double s = t - jb.delta;
        ProbMeasure mx = propagate_dual(family, t, s,
                                        delta_measure(family.base, jb.x),
                                        cfg.propagator);
        ProbMeasure my = propagate_dual(family, t, s,
                                        delta_measure(family.base, jb.y),
                                        cfg.propagator);
        double w = w2sq(family.at(s), mx, my, cfg.support_tail);
        // Signed rate: (W^2_s - d^2 (1 - eps (t-s))) / (d^2 (t-s)).
        double d = jb.d;
        double rate = (w - d * d * (1.0 - eps * jb.delta)) / (d * d * jb.delta);
#pragma omp critical
        {
            if (rate < res.margin) res.margin = rate;
            if (rate < -cfg.tol) {
                res.pass = false;
                std::ostringstream os;
                os << "t=" << t << " s=" << s << " pair=(" << jb.x << ","
                   << jb.y << ") rate=" << rate;
                res.witnesses.push_back(os.str());
            }
        }
    }
    if (!any)
        throw diagnostic_error("rough_sub: no pair within localization radius");
    return res;
}

FlagResult weak_super_check(const SpaceFamily& family, double t,
                            const std::vector<std::pair<int, int>>& pairs,
                            const DiagnosticConfig& cfg) {
    FlagResult res;
    res.margin = std::numeric_limits<double>::infinity();
    for (auto [x, y] : pairs) {
        double v = eta(family, t, x, y, cfg.eps_loc, cfg).value;
        if (v < res.margin) res.margin = v;
        if (v < -cfg.tol) {
            res.pass = false;
            std::ostringstream os;
            os << "t=" << t << " pair=(" << x << "," << y << ") eta=" << v;
            res.witnesses.push_back(os.str());
        }
    }
    return res;
}

FlagResult weak_sub_check(const SpaceFamily& family, double t,
                          const std::vector<std::pair<int, int>>& pairs,
                          double eps, const DiagnosticConfig& cfg) {
    FlagResult res;
    res.margin = std::numeric_limits<double>::infinity();
    res.note = "existence realized as a search over the sampled geodesic class";
    for (auto [x, y] : pairs) {
        // eta already infimizes over the candidate class; the sub condition
        // asks for one candidate with value <= eps.
        double v = eta(family, t, x, y, cfg.eps_loc, cfg).value;
        double slack = eps - v;
        if (slack < res.margin) res.margin = slack;
        if (slack < -cfg.tol) {
            res.pass = false;
            std::ostringstream os;
            os << "t=" << t << " pair=(" << x << "," << y
               << ") no witness within budget, best eta=" << v;
            res.witnesses.push_back(os.str());
        }
    }
    return res;
}

FlagResult n_super_check(const SpaceFamily& family, double t,
                         const std::vector<std::pair<int, int>>& pairs, double N,
                         const DiagnosticConfig& cfg) {
    if (N < 1) throw diagnostic_error("n_super: N must be >= 1");
    FlagResult res;
    res.margin = std::numeric_limits<double>::infinity();
    double window = std::min(cfg.n_super_window, 0.9 * (t - family.t_lo));
    if (window <= 0) throw diagnostic_error("n_super: t at interval start");
    double s = t - window;
    const int nr = 5;
    DiscreteMMSpace slice_t = family.at(t);
#pragma omp parallel for schedule(dynamic)
    for (size_t pi = 0; pi < pairs.size(); ++pi) {
        auto [x, y] = pairs[pi];
        double d = slice_t.dist(x, y);
        if (d <= 0) continue;
        // Rough form: trapezoidal quadrature of the entropy-gap square.
        std::vector<double> gap2(nr);
        ProbMeasure mx_s, my_s;
        for (int k = 0; k < nr; ++k) {
            double r = t - window * (1.0 - static_cast<double>(k) / (nr - 1));
            ProbMeasure mx = propagate_dual(family, t, r,
                                            delta_measure(family.base, x),
                                            cfg.propagator);
            ProbMeasure my = propagate_dual(family, t, r,
                                            delta_measure(family.base, y),
                                            cfg.propagator);
            DiscreteMMSpace slice_r = family.at(r);
            double g = entropy(slice_r, mx) - entropy(slice_r, my);
            gap2[k] = g * g;
            if (k == 0) {
                mx_s = mx;
                my_s = my;
            }
        }
        double G = 0.0;
        double hr = window / (nr - 1);
        for (int k = 0; k + 1 < nr; ++k) G += 0.5 * hr * (gap2[k] + gap2[k + 1]);
        double w = w2sq(family.at(s), mx_s, my_s, cfg.support_tail);
        double rough = (d * d - (2.0 / N) * G - w) / (d * d);

        // Weak form on the mollified geodesic class.
        EtaDetail ed = eta_detail(family, t, x, y, cfg.eps_loc, cfg);
        double eg = ed.ent1 - ed.ent0;
        double weak = ed.value - eg * eg / (N * ed.w2sq_t);

        double m = std::min(rough, weak);
#pragma omp critical
        {
            if (m < res.margin) res.margin = m;
            if (m < -cfg.tol) {
                res.pass = false;
                std::ostringstream os;
                os << "N=" << N << " t=" << t << " pair=(" << x << "," << y
                   << ") rough=" << rough << " weak=" << weak;
                res.witnesses.push_back(os.str());
            }
        }
    }
    return res;
}

double laplace_comparison_check(const DiscreteMMSpace& space, int x, int y,
                                LaplaceMode mode, double K,
                                LaplacianBackend backend) {
    if (mode == LaplaceMode::dynamic)
        throw diagnostic_error("dynamic mode needs a family");
    double d = space.dist(x, y);
    if (d <= 0) throw diagnostic_error("laplace comparison: r = 0");
    LaplacianOp op = laplacian(space, backend);
    Eigen::VectorXd f(space.n_points);
    for (int j = 0; j < space.n_points; ++j) {
        double dj = space.dist(x, j);
        f[j] = dj * dj;
    }
    double half = 0.5 * apply_generator(op, f)[y];
    double n = space.dim;
    double bound;
    if (mode == LaplaceMode::weak) {
        bound = n - K * d * d / 3.0;
    } else {
        if (K > 0) {
            double a = std::sqrt(K) * d;
            bound = 1.0 + (n - 1) * a / std::tan(a);
        } else if (K < 0) {
            double a = std::sqrt(-K) * d;
            bound = 1.0 + (n - 1) * a / std::tanh(a);
        } else {
            bound = n;
        }
    }
    return bound - half;
}

double laplace_comparison_dynamic(const SpaceFamily& family, double t, int x,
                                  int y, LaplacianBackend backend) {
    DiscreteMMSpace slice = family.at(t);
    double r = slice.dist(x, y);
    if (r <= 0) throw diagnostic_error("laplace comparison: r = 0");
    LaplacianOp op = laplacian(slice, backend);
    Eigen::VectorXd f(slice.n_points);
    for (int j = 0; j < slice.n_points; ++j) {
        double dj = slice.dist(x, j);
        f[j] = dj * dj;
    }
    double half = 0.5 * apply_generator(op, f)[y];
    if (!family.base.geometry || !family.base.geometry->has_geodesics())
        throw diagnostic_error("dynamic comparison: geodesics unavailable");
    if (!family.model)
        throw diagnostic_error("dynamic comparison: analytic model required");
    const ModelGeometry& g = *family.base.geometry;
    const ChartPoint& cx = family.base.coords.at(x);
    const ChartPoint& cy = family.base.coords.at(y);
    double h = std::min(1e-4, 0.4 * (t - family.t_lo));
    double cdot = (family.model->metric_scale(t + h >= family.t_hi ? t : t + h) -
                   family.model->metric_scale(t - h)) /
                  ((t + h >= family.t_hi ? t : t + h) - (t - h));
    // dt d_t(gamma_q, y) = cdot * d_base(gamma_q, y); Simpson in q.
    const int m = 16;
    double acc = 0.0;
    for (int i = 0; i <= m; ++i) {
        double q = r * i / m;
        ChartPoint p = g.geodesic(cx, cy, static_cast<double>(i) / m);
        double dtd = cdot * g.distance(p, cy) * family.base.dist_scale;
        double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        acc += w * dtd * q;
    }
    double integral = acc * (r / m) / 3.0;
    double rhs = slice.dim + (2.0 / r) * integral;
    return rhs - half;
}

std::vector<std::pair<int, int>> sample_pairs(const DiscreteMMSpace& space,
                                              int count, double d_lo,
                                              double d_hi, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, space.n_points - 1);
    std::set<std::pair<int, int>> seen;
    std::vector<std::pair<int, int>> out;
    int attempts = 0, cap = 500 * std::max(count, 1);
    while (static_cast<int>(out.size()) < count && attempts++ < cap) {
        int i = pick(rng), j = pick(rng);
        if (i == j) continue;
        if (i > j) std::swap(i, j);
        if (seen.count({i, j})) continue;
        if (space.geometry && !space.coords.empty() &&
            (space.geometry->singular(space.coords[i]) ||
             space.geometry->singular(space.coords[j])))
            continue;
        double d = space.dist(i, j);
        if (d < d_lo || d > d_hi) continue;
        seen.insert({i, j});
        out.push_back({i, j});
    }
    if (out.empty()) throw diagnostic_error("sample_pairs: no admissible pair");
    return out;
}

Verdict classify(const SpaceFamily& family, const DiagnosticConfig& cfg) {
    Verdict v;
    double span = family.t_hi - family.t_lo;
    double t_mid = family.t_lo + 0.5 * span;
    std::vector<double> t_samples = {family.t_lo + 0.3 * span, t_mid,
                                     family.t_lo + 0.7 * span};
    DiscreteMMSpace slice = family.at(t_mid);
    double diam = diameter_estimate(slice, cfg.seed);
    double c_mid = family.model ? family.model->metric_scale(t_mid) : 1.0;
    double h = family.base.mesh_h * c_mid;
    auto pairs = sample_pairs(slice, cfg.pair_budget, 3 * h,
                              std::min(cfg.eps_loc, 0.45 * diam), cfg.seed);

    std::vector<std::pair<double, double>> st;
    for (double t : t_samples) {
        std::vector<double> deltas = cfg.backsteps_for(family, t);
        st.emplace_back(t - deltas.front(), t);
        st.emplace_back(t - deltas.back(), t);
    }
    v.rough_super = rough_super_check(family, st, pairs, cfg);
    v.rough_sub = rough_sub_check(family, t_mid, pairs, cfg.sub_eps, cfg);
    v.weak_super = weak_super_check(family, t_mid, pairs, cfg);
    v.weak_sub = weak_sub_check(family, t_mid, pairs, cfg.sub_eps, cfg);

    double n = family.base.dim;
    for (double N : {n, 2 * n, 10 * n})
        v.n_super.emplace_back(N, n_super_check(family, t_mid, pairs, N, cfg));

    v.minimal_srf.pass = v.rough_super.pass;
    v.minimal_srf.margin = v.rough_super.margin;
    for (double t : t_samples) {
        double s_cap = std::min(0.05, 0.45 * (family.t_hi - t));
        if (s_cap <= 0) continue;
        SGrid grid = SGrid::for_mesh(h, diam / 3.0, 16, 9.0, s_cap);
        double K = td_slope_K(family, t, grid).value;
        v.K_samples.emplace_back(t, K);
        double slack = cfg.tol_K - K;
        if (slack < v.minimal_srf.margin) v.minimal_srf.margin = slack;
        if (K > cfg.tol_K) {
            v.minimal_srf.pass = false;
            std::ostringstream os;
            os << "K_t=" << K << " at t=" << t;
            v.minimal_srf.witnesses.push_back(os.str());
        }
    }
    if (!v.rough_super.pass)
        v.minimal_srf.witnesses.insert(v.minimal_srf.witnesses.end(),
                                       v.rough_super.witnesses.begin(),
                                       v.rough_super.witnesses.end());
    return v;
}

} // namespace rfl
