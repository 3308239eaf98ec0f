#include <cmath>
#include <vector>

#include <Eigen/SparseLU>

#include "rfl/geometries.hpp"
#include "rfl/heat.hpp"
#include "rfl/oracles.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

double wrap_delta(double a, double b, double side) {
    double d = std::fabs(a - b);
    d = std::fmod(d, side);
    return std::min(d, side - d);
}

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Gaussian-kernel graph Laplacian, self-adjoint w.r.t. the atom weights.
SpMat graph_laplacian(const DiscreteMMSpace& sp) {
    int n = sp.n_points;
    double h = sp.mesh_h > 0 ? sp.mesh_h : 1.0;
    double sigma = 1.5 * h;
    double cut = 4.0 * sigma;
    int dim = sp.dim;
    // Continuum calibration: sum_j w_j G_sigma(d)(f_j - f_i) ~
    // (2 pi sigma^2)^{n/2} (sigma^2/2) Lap f.
    double c0 = 2.0 / (sigma * sigma * std::pow(2 * kPi * sigma * sigma, dim / 2.0));
    std::vector<Trip> trips;
    for (int i = 0; i < n; ++i) {
        double diag = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            if (sp.geometry &&
                sp.dist_scale * sp.geometry->distance_lower_bound(
                                    sp.coords[i], sp.coords[j]) > cut)
                continue;
            double d = sp.dist(i, j);
            if (d > cut) continue;
            double a = c0 * sp.weights[j] * std::exp(-d * d / (2 * sigma * sigma));
            trips.emplace_back(i, j, a);
            diag -= a;
        }
        trips.emplace_back(i, i, diag);
    }
    SpMat L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());
    return L;
}

// Flux-form 1D weighted Laplacian: interval (Neumann) for the Gaussian
// line, periodic for the weighted circle. Self-adjoint w.r.t. w_i.
SpMat fd_laplacian(const DiscreteMMSpace& sp) {
    int n = sp.n_points;
    std::vector<Trip> trips;
    auto add = [&](int i, int j, double v) { trips.emplace_back(i, j, v); };
    if (sp.geometry && sp.geometry->kind() == GeomKind::euclidean_gaussian) {
        const auto* g = dynamic_cast<const GaussianLineGeometry*>(sp.geometry.get());
        double h = sp.coords[1].v.x() - sp.coords[0].v.x();
        double A = g->metric_A();
        for (int i = 0; i < n; ++i) {
            double wi = g->weight(sp.coords[i].v.x());
            double up = i + 1 < n
                            ? g->weight(0.5 * (sp.coords[i].v.x() +
                                               sp.coords[i + 1].v.x()))
                            : 0.0;
            double dn = i > 0 ? g->weight(0.5 * (sp.coords[i].v.x() +
                                                 sp.coords[i - 1].v.x()))
                              : 0.0;
            double c = 1.0 / (A * h * h * wi);
            if (i + 1 < n) add(i, i + 1, c * up);
            if (i > 0) add(i, i - 1, c * dn);
            add(i, i, -c * (up + dn));
        }
    } else if (sp.geometry && sp.geometry->kind() == GeomKind::flat_torus &&
               sp.dim == 1) {
        const auto* g = dynamic_cast<const TorusGeometry*>(sp.geometry.get());
        double L = g->side_x();
        double h = L / n;
        auto rho = [&](double x) {
            ChartPoint p;
            p.v = Vec3(std::fmod(std::fmod(x, L) + L, L), 0, 0);
            return g->density(p);
        };
        for (int i = 0; i < n; ++i) {
            double xi = sp.coords[i].v.x();
            double wi = rho(xi);
            double up = rho(xi + h / 2), dn = rho(xi - h / 2);
            double c = 1.0 / (h * h * wi);
            add(i, (i + 1) % n, c * up);
            add(i, (i + n - 1) % n, c * dn);
            add(i, i, -c * (up + dn));
        }
    } else {
        throw heat_error("finite_difference backend: 1D line or circle only");
    }
    SpMat L(n, n);
    L.setFromTriplets(trips.begin(), trips.end());
    return L;
}

std::function<double(int, int, double)> spectral_kernel(
    std::shared_ptr<const DiscreteMMSpace> sp) {
    const ModelGeometry* g = sp->geometry.get();
    switch (g->kind()) {
    case GeomKind::sphere: {
        double R = static_cast<const SphereGeometry*>(g)->radius();
        return [sp, R](int i, int j, double tau) {
            double d = sp->geometry->distance(sp->coords[i], sp->coords[j]);
            int lmax = static_cast<int>(std::ceil(R * std::sqrt(38.0 / tau))) + 8;
            lmax = std::min(lmax, 4000);
            return oracles::sphere_heat_kernel(2, R, d, tau, lmax);
        };
    }
    case GeomKind::flat_torus: {
        const auto* t = static_cast<const TorusGeometry*>(g);
        if (t->weighted())
            throw heat_error("spectral backend: weighted circle unsupported");
        if (t->dim() == 1) {
            double L = t->side_x();
            return [sp, L](int i, int j, double tau) {
                double d = wrap_delta(sp->coords[i].v.x(), sp->coords[j].v.x(), L);
                return oracles::circle_heat_kernel(L, d, tau);
            };
        }
        double Lx = t->side_x(), Ly = t->side_y();
        return [sp, Lx, Ly](int i, int j, double tau) {
            double dx = wrap_delta(sp->coords[i].v.x(), sp->coords[j].v.x(), Lx);
            double dy = wrap_delta(sp->coords[i].v.y(), sp->coords[j].v.y(), Ly);
            return oracles::torus_heat_kernel(Lx, Ly, dx, dy, tau);
        };
    }
    case GeomKind::suspension: {
        double L = static_cast<const SuspensionGeometry*>(g)->base_length();
        return [sp, L](int i, int j, double tau) {
            const ChartPoint& a = sp->coords[i];
            const ChartPoint& b = sp->coords[j];
            return suspension_heat_kernel(L, a.v.x(), a.v.y(), b.v.x(), b.v.y(),
                                          tau);
        };
    }
    default:
        throw heat_error("spectral backend: unsupported kind " +
                         to_string(g->kind()));
    }
}

Eigen::VectorXd cn_evolve(const SpMat& L, Eigen::VectorXd v, double tau,
                          const PropagatorConfig& cfg, bool transpose) {
    if (tau <= 0) return v;
    int K = std::max(1, static_cast<int>(std::ceil(tau / cfg.dt_max)));
    double dt = tau / K;
    int n = static_cast<int>(v.size());
    SpMat I(n, n);
    I.setIdentity();
    SpMat Lw = transpose ? SpMat(L.transpose()) : L;
    bool cn = cfg.scheme == PropagatorConfig::Scheme::crank_nicolson;
    SpMat A = I - (cn ? dt / 2 : dt) * Lw;
    Eigen::SparseLU<SpMat> solver;
    solver.compute(A);
    if (solver.info() != Eigen::Success)
        throw heat_error("heat step: factorization failed");
    SpMat B;
    if (cn) B = I + (dt / 2) * Lw;
    for (int k = 0; k < K; ++k) {
        if (cn) v = B * v;
        v = solver.solve(v);
        if (solver.info() != Eigen::Success)
            throw heat_error("heat step: solve failed");
    }
    return v;
}

ProbMeasure clip_normalize(Eigen::VectorXd v, double tol) {
    double neg = 0.0;
    for (int i = 0; i < v.size(); ++i) neg = std::min(neg, v[i]);
    if (neg < -tol)
        throw heat_error("heat flow: negativity " + std::to_string(neg) +
                         " beyond tolerance");
    double s = 0.0;
    for (int i = 0; i < v.size(); ++i) {
        if (v[i] < 0) v[i] = 0;
        s += v[i];
    }
    if (!(s > 0)) throw heat_error("heat flow: vanished measure");
    ProbMeasure mu;
    mu.w.resize(v.size());
    for (int i = 0; i < v.size(); ++i) mu.w[i] = v[i] / s;
    return mu;
}
} // namespace

double suspension_heat_kernel(double L, double s1, double th1, double s2,
                              double th2, double tau) {
    if (tau <= 0) throw heat_error("suspension kernel: tau must be positive");
    double dth = wrap_delta(th1, th2, L);
    double x1 = std::cos(s1), x2 = std::cos(s2);
    double sn1 = std::sin(s1), sn2 = std::sin(s2);
    double sum = 0.0;
    int kmax = static_cast<int>(std::ceil(std::sqrt(38.0 / tau) * L / (2 * kPi))) + 1;
    kmax = std::min(kmax, 400);
    for (int k = 0; k <= kmax; ++k) {
        double mu = 2 * kPi * k / L;
        if (mu * mu * tau > 38) break;
        double alpha = mu + 0.5;
        double ang = k == 0 ? 1.0 / L : (2.0 / L) * std::cos(mu * dth);
        double pref = std::pow(sn1 * sn2, mu);
        if (pref == 0.0 && k > 0) continue;
        // Gegenbauer recurrence C_j^alpha at x1 and x2.
        double c1p = 0, c1 = 1, c2p = 0, c2 = 1;
        int jmax = static_cast<int>(std::ceil(std::sqrt(38.0 / tau))) + 2;
        jmax = std::min(jmax, 400);
        double mode = 0.0;
        for (int j = 0; j <= jmax; ++j) {
            double nu = mu + j;
            double lam = nu * (nu + 1);
            if (lam * tau <= 38) {
                double logN = std::log(kPi) + (1 - 2 * alpha) * std::log(2.0) +
                              std::lgamma(j + 2 * alpha) - std::lgamma(j + 1.0) -
                              std::log(j + alpha) - 2 * std::lgamma(alpha);
                mode += std::exp(-lam * tau - logN) * c1 * c2;
            }
            // advance recurrence
            double n1 = (2 * (j + alpha) * x1 * c1 - (j + 2 * alpha - 1) * c1p) /
                        (j + 1);
            double n2 = (2 * (j + alpha) * x2 * c2 - (j + 2 * alpha - 1) * c2p) /
                        (j + 1);
            c1p = c1; c1 = n1;
            c2p = c2; c2 = n2;
        }
        sum += ang * pref * mode;
    }
    return std::max(sum, 0.0);
}

LaplacianOp laplacian(const DiscreteMMSpace& space, LaplacianBackend backend) {
    LaplacianOp op;
    op.backend = backend;
    op.space_id = space.id;
    op.space = std::make_shared<DiscreteMMSpace>(space);
    switch (backend) {
    case LaplacianBackend::spectral:
        if (!space.geometry)
            throw heat_error("spectral backend: geometry required");
        op.kernel = spectral_kernel(op.space);
        break;
    case LaplacianBackend::graph:
        op.L = graph_laplacian(space);
        break;
    case LaplacianBackend::finite_difference:
        op.L = fd_laplacian(space);
        break;
    }
    return op;
}

Eigen::VectorXd apply_generator(const LaplacianOp& op, const Eigen::VectorXd& f) {
    if (op.backend == LaplacianBackend::spectral)
        throw heat_error("apply_generator: spectral backend has no matrix");
    return op.L * f;
}

namespace {
LaplacianBackend default_backend(const DiscreteMMSpace& sp) {
    if (!sp.geometry) return LaplacianBackend::graph;
    switch (sp.geometry->kind()) {
    case GeomKind::sphere:
    case GeomKind::suspension:
        return LaplacianBackend::spectral;
    case GeomKind::flat_torus: {
        const auto* t = static_cast<const TorusGeometry*>(sp.geometry.get());
        return t->weighted() ? LaplacianBackend::finite_difference
                             : LaplacianBackend::spectral;
    }
    case GeomKind::euclidean_gaussian:
        return LaplacianBackend::finite_difference;
    default:
        return LaplacianBackend::graph;
    }
}

// Static dual flow: nu_k = w_k sum_j p(k,j) mu_j for spectral, density
// evolution for matrix backends.
Eigen::VectorXd static_dual(const DiscreteMMSpace& sp, const LaplacianOp& op,
                            const ProbMeasure& mu, double tau,
                            const PropagatorConfig& cfg) {
    int n = sp.n_points;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    if (op.backend == LaplacianBackend::spectral) {
        // Distances are invariant under dist_scale on the base space only;
        // the kernel works in base coordinates with base-time tau.
        for (int j = 0; j < n; ++j) {
            if (mu.w[j] <= 0) continue;
            for (int k = 0; k < n; ++k)
                out[k] += mu.w[j] * op.kernel(j, k, tau) * sp.weights[k];
        }
        return out;
    }
    Eigen::VectorXd rho(n);
    for (int i = 0; i < n; ++i) {
        if (sp.weights[i] <= 0 && mu.w[i] > 0)
            throw heat_error("dual flow: mass on a weightless atom");
        rho[i] = sp.weights[i] > 0 ? mu.w[i] / sp.weights[i] : 0.0;
    }
    rho = cn_evolve(op.L, rho, tau, cfg, false);
    for (int i = 0; i < n; ++i) out[i] = rho[i] * sp.weights[i];
    return out;
}
} // namespace

double effective_time(const SpaceFamily& family, double s, double t) {
    if (!family.model) throw heat_error("effective_time: no analytic model");
    const auto& c = family.model->metric_scale;
    // Simpson on metric_scale^{-2}
    int K = 64;
    double h = (t - s) / K;
    double sum = 0.0;
    auto f = [&](double u) {
        double cu = c(u);
        return 1.0 / (cu * cu);
    };
    for (int k = 0; k < K; ++k) {
        double a = s + k * h;
        sum += (h / 6) * (f(a) + 4 * f(a + h / 2) + f(a + h));
    }
    return sum;
}

ProbMeasure propagate_dual(const SpaceFamily& family, double t, double s,
                           const ProbMeasure& mu, PropagatorConfig cfg) {
    if (s > t) throw heat_error("propagate_dual: s must be <= t");
    if (!family.contains(t) || !family.contains(s))
        throw heat_error("propagate_dual: times outside interval");
    if (t == s) return mu;
    if (family.model && family.model->weights_static_shape) {
        double tau = effective_time(family, s, t);
        const DiscreteMMSpace& base = family.base;
        LaplacianOp op = laplacian(base, default_backend(base));
        return clip_normalize(static_dual(base, op, mu, tau, cfg),
                              cfg.tolerance);
    }
    // General path: transposed Crank-Nicolson steps in reverse order, with
    // the generator rebuilt at each step midpoint.
    int K = std::max(1, static_cast<int>(std::ceil((t - s) / cfg.dt_max)));
    double dt = (t - s) / K;
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(mu.w.data(), mu.w.size());
    bool cn = cfg.scheme == PropagatorConfig::Scheme::crank_nicolson;
    for (int k = K - 1; k >= 0; --k) {
        double mid = s + (k + 0.5) * dt;
        DiscreteMMSpace slice = family.at(mid);
        LaplacianBackend be = default_backend(slice);
        if (be == LaplacianBackend::spectral) be = LaplacianBackend::graph;
        LaplacianOp op = laplacian(slice, be);
        int n = slice.n_points;
        SpMat I(n, n);
        I.setIdentity();
        SpMat Lt = SpMat(op.L.transpose());
        SpMat A = I - (cn ? dt / 2 : dt) * Lt;
        Eigen::SparseLU<SpMat> solver;
        solver.compute(A);
        if (solver.info() != Eigen::Success)
            throw heat_error("propagate_dual: factorization failed");
        v = solver.solve(v);
        if (solver.info() != Eigen::Success)
            throw heat_error("propagate_dual: solve failed");
        if (cn) v = v + (dt / 2) * (Lt * v);
    }
    return clip_normalize(v, cfg.tolerance);
}

ProbMeasure heat_kernel_measure(const DiscreteMMSpace& space, int x, double tau,
                                PropagatorConfig cfg) {
    if (tau < 0) throw heat_error("heat_kernel_measure: tau must be >= 0");
    ProbMeasure d = delta_measure(space, x);
    if (tau == 0) return d;
    LaplacianOp op = laplacian(space, default_backend(space));
    // Scale-adjust: semigroup time in base coordinates.
    double base_tau = tau / (space.dist_scale * space.dist_scale);
    return clip_normalize(static_dual(space, op, d, base_tau, cfg),
                          cfg.tolerance);
}

} // namespace rfl
