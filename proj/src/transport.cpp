#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "rfl/transport.hpp"

namespace rfl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSupportTrunc = 1e-14;

std::vector<int> support_of(const ProbMeasure& mu) {
    std::vector<int> s;
    for (int i = 0; i < static_cast<int>(mu.w.size()); ++i)
        if (mu.w[i] > kSupportTrunc) s.push_back(i);
    return s;
}
} // namespace

void ProbMeasure::validate() const {
    double s = 0.0;
    for (double x : w) {
        if (x < 0) throw transport_error("ProbMeasure: negative mass");
        s += x;
    }
    if (std::fabs(s - 1.0) > 1e-12)
        throw transport_error("ProbMeasure: total mass " + std::to_string(s));
}

ProbMeasure delta_measure(const DiscreteMMSpace& space, int atom) {
    ProbMeasure mu;
    mu.w.assign(space.n_points, 0.0);
    mu.w.at(atom) = 1.0;
    return mu;
}

ProbMeasure measure_from_weights(std::vector<double> w) {
    double s = 0.0;
    for (double x : w) {
        if (x < 0) throw transport_error("measure_from_weights: negative entry");
        s += x;
    }
    if (!(s > 0)) throw transport_error("measure_from_weights: zero total mass");
    for (double& x : w) x /= s;
    ProbMeasure mu;
    mu.w = std::move(w);
    return mu;
}

std::vector<double> TransportPlan::row_marginal(int n) const {
    std::vector<double> r(n, 0.0);
    for (const auto& e : entries) r.at(e.i) += e.mass;
    return r;
}

std::vector<double> TransportPlan::col_marginal(int n) const {
    std::vector<double> c(n, 0.0);
    for (const auto& e : entries) c.at(e.j) += e.mass;
    return c;
}

// ---------------------------------------------------------------------------
// Exact LP: successive shortest augmenting paths with dual potentials on
// the support-restricted bipartite graph.

TransportPlan exact_lp(const DiscreteMMSpace& space, const ProbMeasure& mu,
                       const ProbMeasure& nu) {
    if (mu.w.size() != nu.w.size() ||
        static_cast<int>(mu.w.size()) != space.n_points)
        throw transport_error("exact_lp: measure size mismatch");
    mu.validate();
    nu.validate();
    std::vector<int> S = support_of(mu), D = support_of(nu);
    int n = static_cast<int>(S.size()), m = static_cast<int>(D.size());
    if (n == 0 || m == 0) throw transport_error("exact_lp: empty support");

    // On a line the monotone rearrangement is optimal for the convex cost;
    // skip the LP entirely.
    if (space.geometry && !space.coords.empty() &&
        space.geometry->kind() == GeomKind::euclidean_gaussian) {
        auto by_x = [&](int i, int j) {
            return space.coords[i].v.x() < space.coords[j].v.x();
        };
        std::sort(S.begin(), S.end(), by_x);
        std::sort(D.begin(), D.end(), by_x);
        TransportPlan plan;
        plan.meta.method = "monotone_1d";
        double cost = 0.0, comp = 0.0;
        size_t i = 0, j = 0;
        double ra = mu.w[S[0]], rb = nu.w[D[0]];
        while (i < S.size() && j < D.size()) {
            double f = std::min(ra, rb);
            if (f > 0) {
                double d = space.dist(S[i], D[j]);
                plan.entries.push_back({S[i], D[j], f});
                double y = f * d * d - comp;
                double t = cost + y;
                comp = (t - cost) - y;
                cost = t;
            }
            ra -= f;
            rb -= f;
            if (ra <= 1e-16 && i + 1 < S.size()) ra = mu.w[S[++i]];
            else if (ra <= 1e-16) ++i;
            if (rb <= 1e-16 && j + 1 < D.size()) rb = nu.w[D[++j]];
            else if (rb <= 1e-16) ++j;
        }
        plan.cost = cost;
        plan.meta.iterations = static_cast<int>(plan.entries.size());
        return plan;
    }

    Eigen::MatrixXd C(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double d = space.dist(S[i], D[j]);
            C(i, j) = d * d;
        }

    std::vector<double> a(n), b(m);
    for (int i = 0; i < n; ++i) a[i] = mu.w[S[i]];
    for (int j = 0; j < m; ++j) b[j] = nu.w[D[j]];

    // Transportation network simplex on the dense support cost matrix.
    // Supplies get a tiny graded perturbation so every basis is
    // nondegenerate (no cycling, unique leaving arc); the final flows are
    // re-solved on the unperturbed marginals over the optimal tree.
    const int N = n + m; // sources 0..n-1, sinks n..n+m-1
    std::vector<double> ap = a, bp = b;
    {
        double kappa = 1e-9 * *std::min_element(a.begin(), a.end()) / N;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            ap[i] += kappa * (i + 1);
            total += kappa * (i + 1);
        }
        bp[m - 1] += total;
    }

    struct Arc {
        int i, j;
        double flow;
    };
    std::vector<Arc> arcs;
    arcs.reserve(N - 1);
    { // Northwest-corner initial spanning tree.
        int i = 0, j = 0;
        double ra = ap[0], rb = bp[0];
        while (true) {
            double f = std::min(ra, rb);
            arcs.push_back({i, j, f});
            ra -= f;
            rb -= f;
            if (i == n - 1 && j == m - 1) break;
            if (ra > rb && j < m - 1) {
                ++j;
                rb = bp[j];
            } else {
                ++i;
                ra = i < n ? ap[i] : 0.0;
            }
        }
        if (static_cast<int>(arcs.size()) != N - 1)
            throw transport_error("exact_lp: degenerate initial basis");
    }

    std::vector<std::vector<int>> adj(N);
    auto rebuild_adj = [&] {
        for (auto& l : adj) l.clear();
        for (int k = 0; k < static_cast<int>(arcs.size()); ++k) {
            adj[arcs[k].i].push_back(k);
            adj[n + arcs[k].j].push_back(k);
        }
    };
    rebuild_adj();

    std::vector<double> u(n), v(m);
    std::vector<int> parent(N), parc(N), stack;
    auto retree = [&] {
        std::fill(parent.begin(), parent.end(), -2);
        parent[0] = -1;
        parc[0] = -1;
        u[0] = 0.0;
        stack.assign(1, 0);
        int seen = 1;
        while (!stack.empty()) {
            int node = stack.back();
            stack.pop_back();
            for (int k : adj[node]) {
                int other = node < n ? n + arcs[k].j : arcs[k].i;
                if (parent[other] != -2) continue;
                parent[other] = node;
                parc[other] = k;
                if (other >= n)
                    v[other - n] = C(arcs[k].i, arcs[k].j) - u[arcs[k].i];
                else
                    u[other] = C(arcs[k].i, arcs[k].j) - v[arcs[k].j];
                stack.push_back(other);
                ++seen;
            }
        }
        if (seen != N) throw transport_error("exact_lp: basis tree disconnected");
    };

    const double cmax = std::max(C.maxCoeff(), 1.0);
    const double opt_tol = 1e-12 * cmax;
    const long long nm = static_cast<long long>(n) * m;
    const long long block = std::max<long long>(1024, nm / 64);
    long long cursor = 0;
    int iterations = 0;
    const int max_pivots = 200 * N + 10000;
    std::vector<int> path_up; // scratch for cycle walks

    retree();
    while (iterations < max_pivots) {
        // Entering arc: most negative reduced cost within a scan block,
        // wrapping around; a full clean wrap certifies optimality.
        int ei = -1, ej = -1;
        long long scanned = 0;
        double best = -opt_tol;
        while (scanned < nm) {
            long long stop = std::min(nm - scanned, block);
            for (long long t = 0; t < stop; ++t) {
                long long idx = cursor + t;
                if (idx >= nm) idx -= nm;
                int i = static_cast<int>(idx / m), j = static_cast<int>(idx % m);
                double rc = C(i, j) - u[i] - v[j];
                if (rc < best) {
                    best = rc;
                    ei = i;
                    ej = j;
                }
            }
            scanned += stop;
            cursor += stop;
            if (cursor >= nm) cursor -= nm;
            if (ei >= 0) break;
        }
        if (ei < 0) break; // optimal
        ++iterations;

        // Unique tree cycle through the entering arc (ei, ej): node path
        // ei -> ... -> lca -> ... -> n+ej, signs alternating with the two
        // path ends both decreasing.
        std::vector<char> on_path(N, 0);
        for (int x = ei; x >= 0; x = parent[x]) on_path[x] = 1;
        int lca = n + ej;
        while (!on_path[lca]) lca = parent[lca];
        path_up.clear(); // ei..lca then (reversed) lca..n+ej
        for (int x = ei; x != lca; x = parent[x]) path_up.push_back(x);
        path_up.push_back(lca);
        size_t head = path_up.size();
        for (int x = n + ej; x != lca; x = parent[x]) path_up.push_back(x);
        std::reverse(path_up.begin() + head, path_up.end());
        for (int x = ei; x >= 0; x = parent[x]) on_path[x] = 0;

        double theta = kInf;
        int leave = -1;
        int sign = -1; // arc adjacent to the entering source decreases
        std::vector<std::pair<int, int>> cyc; // (arc id, sign)
        for (size_t t = 0; t + 1 < path_up.size(); ++t) {
            int child = path_up[t], par = path_up[t + 1];
            int k = parent[child] == par ? parc[child] : parc[par];
            cyc.push_back({k, sign});
            if (sign < 0 && arcs[k].flow < theta) {
                theta = arcs[k].flow;
                leave = k;
            }
            sign = -sign;
        }
        if (leave < 0) throw transport_error("exact_lp: unbounded pivot");
        for (auto [k, sg] : cyc) arcs[k].flow += sg * theta;
        arcs[leave] = {ei, ej, theta};
        rebuild_adj();
        retree();
    }
    if (iterations >= max_pivots)
        throw transport_error("exact_lp: pivot limit exceeded");

    // Re-solve the tree flows against the unperturbed marginals by leaf
    // stripping; roundoff-scale negatives are clamped.
    {
        std::vector<double> excess(N);
        for (int i = 0; i < n; ++i) excess[i] = a[i];
        for (int j = 0; j < m; ++j) excess[n + j] = -b[j];
        std::vector<int> deg(N);
        for (const Arc& e : arcs) {
            ++deg[e.i];
            ++deg[n + e.j];
        }
        std::vector<char> removed(arcs.size(), 0), gone(N, 0);
        std::vector<int> queue;
        for (int x = 0; x < N; ++x)
            if (deg[x] == 1) queue.push_back(x);
        while (!queue.empty()) {
            int x = queue.back();
            queue.pop_back();
            if (gone[x]) continue;
            int kfound = -1;
            for (int k : adj[x])
                if (!removed[k]) {
                    kfound = k;
                    break;
                }
            if (kfound < 0) continue;
            Arc& e = arcs[kfound];
            double f = x < n ? excess[x] : -excess[x];
            e.flow = std::max(0.0, f);
            removed[kfound] = 1;
            gone[x] = 1;
            int other = x == e.i ? n + e.j : e.i;
            excess[other] += excess[x];
            excess[x] = 0;
            if (--deg[other] == 1 && !gone[other]) queue.push_back(other);
        }
    }

    TransportPlan plan;
    plan.meta.method = "network_simplex";
    plan.meta.iterations = iterations;
    double cost = 0.0, comp = 0.0;
    for (const Arc& e : arcs)
        if (e.flow > 1e-15) {
            plan.entries.push_back({S[e.i], D[e.j], e.flow});
            // compensated summation keeps the cost order-independent
            double term = e.flow * C(e.i, e.j) - comp;
            double t = cost + term;
            comp = (t - cost) - term;
            cost = t;
        }
    plan.cost = cost;
    double dual = 0.0;
    double shift = *std::min_element(u.begin(), u.end());
    for (int i = 0; i < n; ++i) dual += (u[i] - shift) * a[i];
    for (int j = 0; j < m; ++j) dual += (v[j] + shift) * b[j];
    plan.meta.duality_gap = cost - dual;
    return plan;
}

double w2(const DiscreteMMSpace& space, const ProbMeasure& mu,
          const ProbMeasure& nu) {
    return std::sqrt(std::max(0.0, exact_lp(space, mu, nu).cost));
}

// ---------------------------------------------------------------------------
// Entropic solver (log-domain, epsilon scaling)

namespace {
struct SinkhornCore {
    double sharp_cost = 0.0;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    Eigen::MatrixXd pi; // coupling on supports
};

SinkhornCore sinkhorn_core(const Eigen::MatrixXd& C,
                           const std::vector<double>& a,
                           const std::vector<double>& b, double eps_target,
                           double tol, int max_iter) {
    int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd la(n), lb(m);
    for (int i = 0; i < n; ++i) la[i] = std::log(a[i]);
    for (int j = 0; j < m; ++j) lb[j] = std::log(b[j]);

    double eps = std::max(C.maxCoeff(), eps_target);
    int it = 0;
    SinkhornCore out;
    auto lse_rows = [&](double e) {
        // f_i = -e log sum_j b_j exp((g_j - C_ij)/e)
        for (int i = 0; i < n; ++i) {
            double mx = -kInf;
            for (int j = 0; j < m; ++j)
                mx = std::max(mx, (g[j] - C(i, j)) / e + lb[j]);
            double s = 0.0;
            for (int j = 0; j < m; ++j)
                s += std::exp((g[j] - C(i, j)) / e + lb[j] - mx);
            f[i] = -e * (mx + std::log(s));
        }
    };
    auto lse_cols = [&](double e) {
        for (int j = 0; j < m; ++j) {
            double mx = -kInf;
            for (int i = 0; i < n; ++i)
                mx = std::max(mx, (f[i] - C(i, j)) / e + la[i]);
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                s += std::exp((f[i] - C(i, j)) / e + la[i] - mx);
            g[j] = -e * (mx + std::log(s));
        }
    };
    while (true) {
        bool last = eps <= eps_target * (1 + 1e-12);
        int warm = last ? max_iter : 12;
        for (int k = 0; k < warm && it < max_iter; ++k) {
            ++it;
            lse_rows(eps);
            lse_cols(eps);
            if (last && (it % 8 == 0)) {
                // L1 row-marginal residual of the implied coupling
                double res = 0.0;
                for (int i = 0; i < n; ++i) {
                    double s = 0.0;
                    for (int j = 0; j < m; ++j)
                        s += a[i] * b[j] *
                             std::exp((f[i] + g[j] - C(i, j)) / eps);
                    res += std::fabs(s - a[i]);
                }
                out.residual = res;
                if (res < tol) {
                    out.converged = true;
                    break;
                }
            }
        }
        if (last) break;
        eps = std::max(eps / 2, eps_target);
    }
    out.iterations = it;
    out.pi.resize(n, m);
    double cost = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double p = a[i] * b[j] * std::exp((f[i] + g[j] - C(i, j)) / eps);
            out.pi(i, j) = p;
            cost += p * C(i, j);
        }
    out.sharp_cost = cost;
    return out;
}
} // namespace

SinkhornResult sinkhorn(const DiscreteMMSpace& space, const ProbMeasure& mu,
                        const ProbMeasure& nu, SinkhornOptions opt) {
    if (mu.w.size() != nu.w.size() ||
        static_cast<int>(mu.w.size()) != space.n_points)
        throw transport_error("sinkhorn: measure size mismatch");
    mu.validate();
    nu.validate();
    std::vector<int> S = support_of(mu), D = support_of(nu);
    int n = static_cast<int>(S.size()), m = static_cast<int>(D.size());
    Eigen::MatrixXd C(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double d = space.dist(S[i], D[j]);
            C(i, j) = d * d;
        }
    std::vector<double> a(n), b(m);
    for (int i = 0; i < n; ++i) a[i] = mu.w[S[i]];
    for (int j = 0; j < m; ++j) b[j] = nu.w[D[j]];

    double eps = opt.eps_target > 0 ? opt.eps_target : 1e-3 * C.mean();
    if (!(eps > 0)) eps = 1e-12;
    SinkhornCore core = sinkhorn_core(C, a, b, eps, opt.tol, opt.max_iter);
    if (!core.converged)
        throw transport_error("sinkhorn: no convergence, residual " +
                              std::to_string(core.residual));
    double w2sq = core.sharp_cost;
    if (opt.debias) {
        SinkhornCore caa = sinkhorn_core(
            [&] {
                Eigen::MatrixXd Caa(n, n);
                for (int i = 0; i < n; ++i)
                    for (int k = 0; k < n; ++k) {
                        double d = space.dist(S[i], S[k]);
                        Caa(i, k) = d * d;
                    }
                return Caa;
            }(),
            a, a, eps, opt.tol, opt.max_iter);
        SinkhornCore cbb = sinkhorn_core(
            [&] {
                Eigen::MatrixXd Cbb(m, m);
                for (int j = 0; j < m; ++j)
                    for (int k = 0; k < m; ++k) {
                        double d = space.dist(D[j], D[k]);
                        Cbb(j, k) = d * d;
                    }
                return Cbb;
            }(),
            b, b, eps, opt.tol, opt.max_iter);
        w2sq = core.sharp_cost - 0.5 * caa.sharp_cost - 0.5 * cbb.sharp_cost;
        w2sq = std::max(w2sq, 0.0);
    }
    SinkhornResult res;
    res.w2sq = w2sq;
    res.plan.meta.method = "sinkhorn";
    res.plan.meta.iterations = core.iterations;
    res.plan.meta.residual = core.residual;
    res.plan.meta.converged = true;
    res.plan.cost = core.sharp_cost;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            if (core.pi(i, j) > 1e-15)
                res.plan.entries.push_back({S[i], D[j], core.pi(i, j)});
    return res;
}

// ---------------------------------------------------------------------------

double entropy(const DiscreteMMSpace& space, const ProbMeasure& mu) {
    if (static_cast<int>(mu.w.size()) != space.n_points)
        throw transport_error("entropy: measure size mismatch");
    double e = 0.0;
    for (int i = 0; i < space.n_points; ++i) {
        double p = mu.w[i];
        if (p <= 0) continue;
        if (space.weights[i] <= 0) return kInf;
        e += p * std::log(p / space.weights[i]);
    }
    return e;
}

GeodesicPath displacement_geodesic(const DiscreteMMSpace& space,
                                   const ProbMeasure& mu0,
                                   const ProbMeasure& mu1,
                                   const std::vector<double>& a_grid) {
    if (!space.geometry || !space.geometry->has_geodesics())
        throw transport_error("displacement_geodesic: no analytic geodesics");
    for (int i : support_of(mu0))
        if (space.geometry->singular(space.coords[i]))
            throw transport_error("displacement_geodesic: singular support point");
    for (int j : support_of(mu1))
        if (space.geometry->singular(space.coords[j]))
            throw transport_error("displacement_geodesic: singular support point");

    TransportPlan plan = exact_lp(space, mu0, mu1);
    GeodesicPath path;
    path.a_grid = a_grid;
    path.w01 = std::sqrt(std::max(0.0, plan.cost));
    path.rebin_error = space.mesh_h;
    for (double a : a_grid) {
        if (a < -1e-12 || a > 1 + 1e-12)
            throw transport_error("displacement_geodesic: a outside [0,1]");
        ProbMeasure m;
        m.w.assign(space.n_points, 0.0);
        if (a <= 1e-15) {
            m = mu0;
        } else if (a >= 1 - 1e-15) {
            m = mu1;
        } else {
            for (const auto& e : plan.entries) {
                int idx;
                if (e.i == e.j) {
                    idx = e.i;
                } else {
                    ChartPoint p = space.geometry->geodesic(
                        space.coords[e.i], space.coords[e.j], a);
                    idx = nearest_atom(space, p);
                }
                m.w[idx] += e.mass;
            }
        }
        path.measures.push_back(std::move(m));
    }
    return path;
}

namespace {
// Derivative at x0 of the quadratic through three samples.
double three_point_slope(double x0, double x1, double x2, double f0, double f1,
                         double f2, double* err) {
    double d01 = (f1 - f0) / (x1 - x0);
    double d12 = (f2 - f1) / (x2 - x1);
    double d012 = (d12 - d01) / (x2 - x0);
    double slope = d01 + d012 * (x0 - x1);
    if (err) *err = std::fabs(slope - d01);
    return slope;
}
} // namespace

EndpointSlopes entropy_endpoint_slopes(const DiscreteMMSpace& space,
                                       const GeodesicPath& path) {
    size_t n = path.a_grid.size();
    if (n < 4)
        throw transport_error("entropy_endpoint_slopes: need >= 4 grid points");
    std::vector<double> E(n);
    for (size_t k = 0; k < n; ++k) E[k] = entropy(space, path.measures[k]);
    if (!std::isfinite(E.front()) || !std::isfinite(E.back()))
        throw transport_error("entropy_endpoint_slopes: infinite endpoint entropy");
    EndpointSlopes out;
    out.at0 = three_point_slope(path.a_grid[0], path.a_grid[1], path.a_grid[2],
                                E[0], E[1], E[2], &out.err0);
    out.at1 = three_point_slope(path.a_grid[n - 1], path.a_grid[n - 2],
                                path.a_grid[n - 3], E[n - 1], E[n - 2], E[n - 3],
                                &out.err1);
    return out;
}

} // namespace rfl
