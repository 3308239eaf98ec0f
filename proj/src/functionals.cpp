#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rfl/functionals.hpp"
#include "rfl/geometry.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kKernelCut = 36.85; // exp(-cut) ~ 1e-16

struct Kahan {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        double y = v - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

double omega_n(int n) {
    if (n == 1) return 2.0;
    if (n == 2) return kPi;
    throw functional_error("density: unsupported intrinsic dimension");
}

// Adds sum_j w[j] exp(-(scale_k d(x,j))^2 / (12 s_k)) * mult into acc[k].
// `raw` is the distance source including its own dist_scale; `scale`
// multiplies it per grid entry.
void kernel_row(const DiscreteMMSpace& sp, int x, const std::vector<double>& s,
                const std::vector<double>& scale, const std::vector<double>& w,
                double mult, std::vector<Kahan>& acc) {
    size_t K = s.size();
    std::vector<double> dcut(K);
    double dmax = 0.0;
    for (size_t k = 0; k < K; ++k) {
        dcut[k] = std::sqrt(12.0 * s[k] * kKernelCut) / scale[k];
        dmax = std::max(dmax, dcut[k]);
    }
    bool geo = sp.geometry && !sp.coords.empty();
    for (int j = 0; j < sp.n_points; ++j) {
        if (w[j] <= 0) continue;
        if (geo && j != x &&
            sp.dist_scale *
                    sp.geometry->distance_lower_bound(sp.coords[x], sp.coords[j]) >
                dmax)
            continue;
        double d = sp.dist(x, j);
        if (d > dmax) continue;
        for (size_t k = 0; k < K; ++k) {
            double sd = scale[k] * d;
            double arg = sd * sd / (12.0 * s[k]);
            if (arg < kKernelCut) acc[k].add(mult * w[j] * std::exp(-arg));
        }
    }
}

std::vector<double> unit_scale(size_t n) { return std::vector<double>(n, 1.0); }

void check_grid(const SGrid& grid, const DiscreteMMSpace& sp) {
    if (grid.s_values.empty())
        throw functional_error("slope fit: empty s grid");
    if (sp.mesh_h > 0 && !grid.valid_for_mesh(sp.mesh_h))
        throw functional_error("slope fit: s grid below the mesh floor");
}
} // namespace

double cap_fraction(int dim, const DirectionalCap& cap) {
    if (cap.half_angle <= 0 || cap.half_angle > kPi + 1e-12)
        throw functional_error("cap: half_angle must lie in (0, pi]");
    if (dim == 1) return cap.half_angle < kPi - 1e-12 ? 0.5 : 1.0;
    if (dim == 2) return cap.half_angle / kPi;
    throw functional_error("cap: unsupported dimension");
}

std::vector<double> gaussian_volume_batch(const DiscreteMMSpace& space, int x,
                                          const std::vector<double>& s) {
    for (double v : s)
        if (!(v > 0)) throw functional_error("gaussian_volume: s must be positive");
    std::vector<Kahan> acc(s.size());
    kernel_row(space, x, s, unit_scale(s.size()), space.weights, 1.0, acc);
    std::vector<double> out(s.size());
    for (size_t k = 0; k < s.size(); ++k)
        out[k] = acc[k].sum * std::pow(12 * kPi * s[k], -space.dim / 2.0);
    return out;
}

double gaussian_volume(const DiscreteMMSpace& space, int x, double s) {
    return gaussian_volume_batch(space, x, {s})[0];
}

double density_at(const DiscreteMMSpace& space, int x, double* se) {
    if (space.geometry && !space.coords.empty()) {
        if (se) *se = 0.0;
        return space.density_scale * space.geometry->density(space.coords[x]);
    }
    double h = space.mesh_h;
    if (!(h > 0))
        throw functional_error("density_at: mesh scale unknown for ball ratios");
    double om = omega_n(space.dim);
    std::vector<double> rs, vals;
    for (int j = 0; j < 6; ++j) {
        double r = (2.0 + 0.75 * j) * h;
        double m = 0.0;
        for (int i = 0; i < space.n_points; ++i)
            if (space.dist(x, i) <= r) m += space.weights[i];
        rs.push_back(r);
        vals.push_back(m / (om * std::pow(r, space.dim)));
    }
    LineFit fit = fit_line(rs, vals);
    if (se) *se = fit.se_intercept;
    return fit.intercept;
}

namespace {
std::vector<double> double_integral_core(const DiscreteMMSpace& sp,
                                         const std::vector<double>& s,
                                         const std::vector<double>& scale,
                                         const std::vector<double>& w,
                                         const std::vector<int>& reps,
                                         const std::vector<double>& rep_mass) {
    size_t K = s.size();
    int R = static_cast<int>(reps.size());
    std::vector<double> total(K, 0.0);
#ifdef _OPENMP
#pragma omp parallel
    {
        std::vector<Kahan> local(K);
#pragma omp for schedule(dynamic)
        for (int r = 0; r < R; ++r)
            kernel_row(sp, reps[r], s, scale, w, rep_mass[r], local);
#pragma omp critical
        for (size_t k = 0; k < K; ++k) total[k] += local[k].sum;
    }
#else
    std::vector<Kahan> local(K);
    for (int r = 0; r < R; ++r)
        kernel_row(sp, reps[r], s, scale, w, rep_mass[r], local);
    for (size_t k = 0; k < K; ++k) total[k] = local[k].sum;
#endif
    for (size_t k = 0; k < K; ++k)
        total[k] *= std::pow(12 * kPi * s[k], -sp.dim / 2.0);
    return total;
}

void orbit_lists(const DiscreteMMSpace& sp, const std::vector<double>& w,
                 std::vector<int>& reps, std::vector<double>& mass) {
    if (sp.symmetry) {
        reps = sp.symmetry->rep;
        mass = sp.symmetry->mass;
    } else {
        reps.resize(sp.n_points);
        for (int i = 0; i < sp.n_points; ++i) reps[i] = i;
        mass = w;
    }
}
} // namespace

std::vector<double> gaussian_double_integral_batch(const DiscreteMMSpace& space,
                                                   const std::vector<double>& s) {
    for (double v : s)
        if (!(v > 0))
            throw functional_error("gaussian_double_integral: s must be positive");
    std::vector<int> reps;
    std::vector<double> mass;
    orbit_lists(space, space.weights, reps, mass);
    return double_integral_core(space, s, unit_scale(s.size()), space.weights,
                                reps, mass);
}

double gaussian_double_integral(const DiscreteMMSpace& space, double s) {
    return gaussian_double_integral_batch(space, {s})[0];
}

double gaussian_double_integral_limit(const DiscreteMMSpace& space) {
    std::vector<int> reps;
    std::vector<double> mass;
    orbit_lists(space, space.weights, reps, mass);
    Kahan a;
    for (size_t r = 0; r < reps.size(); ++r)
        a.add(mass[r] * density_at(space, reps[r]));
    return a.sum;
}

SlopeEstimate slope_k(const DiscreteMMSpace& space, int x, const SGrid& grid) {
    check_grid(grid, space);
    double a0 = density_at(space, x);
    std::vector<double> av = gaussian_volume_batch(space, x, grid.s_values);
    std::vector<double> y(av.size());
    for (size_t k = 0; k < av.size(); ++k) y[k] = a0 - av[k];
    return fit_slope(grid.s_values, y);
}

SlopeEstimate slope_K(const DiscreteMMSpace& space, const SGrid& grid) {
    check_grid(grid, space);
    double a0 = gaussian_double_integral_limit(space);
    std::vector<double> av = gaussian_double_integral_batch(space, grid.s_values);
    std::vector<double> y(av.size());
    for (size_t k = 0; k < av.size(); ++k) y[k] = a0 - av[k];
    return fit_slope(grid.s_values, y);
}

namespace {
struct CapRegion {
    std::vector<double> cover; // per-atom coverage fraction in [0, 1]
    double delta = 0.0;
};

CapRegion cap_region(const DiscreteMMSpace& sp, int x, const DirectionalCap& cap) {
    if (!sp.geometry || !sp.geometry->has_exp())
        throw functional_error("directional: geometry with exp/log required");
    const ChartPoint& base = sp.coords.at(x);
    if (sp.geometry->singular(base))
        throw functional_error("directional: singular base point");
    double an = cap.axis.z.norm();
    if (std::fabs(an - 1.0) > 1e-10)
        throw functional_error("directional: axis must be a unit vector");
    CapRegion reg;
    reg.delta = cap.radius_cap
                    ? *cap.radius_cap
                    : 0.5 * sp.dist_scale * sp.geometry->injectivity_proxy(base);
    reg.cover.assign(sp.n_points, 0.0);
    // Atoms are treated as cells of diameter ~mesh_h; cells straddling the
    // cone boundary contribute their covered fraction, which kills the
    // O(h/sqrt(s)) band noise a sharp indicator would leave behind.
    const double band = std::max(sp.mesh_h, 1e-300);
    const bool full = cap.half_angle >= kPi - 1e-12;
    for (int j = 0; j < sp.n_points; ++j) {
        if (j == x) continue;
        double d = sp.dist(x, j);
        if (d <= 0 || d > reg.delta + band) continue;
        TangentVec u = sp.geometry->log(base, sp.coords[j]);
        double c = u.z.dot(cap.axis.z) / u.z.norm();
        c = std::min(1.0, std::max(-1.0, c));
        double cov = 1.0;
        if (!full && sp.dim > 1) {
            // Signed transverse distance from the cell center to the cone
            // boundary, in units of the cell width.
            double t = d * (cap.half_angle - std::acos(c)) / band;
            cov = std::min(1.0, std::max(0.0, 0.5 + t));
        } else if (!full) {
            cov = std::acos(c) <= cap.half_angle + 1e-12 ? 1.0 : 0.0;
        }
        double rim = std::min(1.0, std::max(0.0, 0.5 + (reg.delta - d) / band));
        reg.cover[j] = cov * rim;
    }
    return reg;
}

std::vector<double> directional_batch(const DiscreteMMSpace& sp, int x,
                                      const DirectionalCap& cap,
                                      const std::vector<double>& s,
                                      const std::vector<double>& scale,
                                      const std::vector<double>& w) {
    CapRegion reg = cap_region(sp, x, cap);
    double frac = cap_fraction(sp.dim, cap);
    std::vector<double> wr(sp.n_points, 0.0);
    for (int j = 0; j < sp.n_points; ++j) wr[j] = reg.cover[j] * w[j];
    // The apex atom straddles every direction: count its cap fraction.
    wr[x] = frac * w[x];
    std::vector<Kahan> acc(s.size());
    kernel_row(sp, x, s, scale, wr, 1.0, acc);
    std::vector<double> out(s.size());
    for (size_t k = 0; k < s.size(); ++k)
        out[k] = acc[k].sum * std::pow(12 * kPi * s[k], -sp.dim / 2.0);
    return out;
}
} // namespace

double directional_volume(const DiscreteMMSpace& space, int x,
                          const DirectionalCap& cap, double s) {
    if (!(s > 0)) throw functional_error("directional_volume: s must be positive");
    return directional_batch(space, x, cap, {s}, {1.0}, space.weights)[0];
}

SlopeEstimate slope_k_directional(const DiscreteMMSpace& space, int x,
                                  const DirectionalCap& cap, const SGrid& grid) {
    check_grid(grid, space);
    double a0 = density_at(space, x) * cap_fraction(space.dim, cap);
    std::vector<double> av =
        directional_batch(space, x, cap, grid.s_values,
                          unit_scale(grid.s_values.size()), space.weights);
    std::vector<double> y(av.size());
    for (size_t k = 0; k < av.size(); ++k) y[k] = a0 - av[k];
    return fit_slope(grid.s_values, y);
}

ExpansionFit boundary_expansion_fit(const DiscreteMMSpace& space,
                                    const SGrid& grid) {
    check_grid(grid, space);
    std::vector<double> av = gaussian_double_integral_batch(space, grid.s_values);
    return fit_expansion(grid.s_values, av);
}

// ---------------------------------------------------------------------------
// Time-dependent variants

namespace {
struct TdContext {
    DiscreteMMSpace slice;          // measure m_t (and density scale)
    std::vector<double> scale;      // metric_scale(t+s_k) per grid entry
};

TdContext td_context(const SpaceFamily& family, double t,
                     const std::vector<double>& s) {
    if (!family.model)
        throw functional_error("time-dependent ops need an analytic family model");
    for (double v : s) {
        if (!(v > 0)) throw functional_error("td: s must be positive");
        if (!family.contains(t + v))
            throw functional_error("td: s grid escapes the family interval");
    }
    if (!family.contains(t)) throw functional_error("td: t outside interval");
    TdContext ctx;
    ctx.slice = family.at(t);
    ctx.scale.resize(s.size());
    for (size_t k = 0; k < s.size(); ++k)
        ctx.scale[k] = family.model->metric_scale(t + s[k]);
    return ctx;
}
} // namespace

double td_gaussian_volume(const SpaceFamily& family, double t, int x, double s) {
    TdContext ctx = td_context(family, t, {s});
    std::vector<Kahan> acc(1);
    // kernel distances come from the base space, scaled to time t+s
    kernel_row(family.base, x, {s}, ctx.scale, ctx.slice.weights, 1.0, acc);
    return acc[0].sum * std::pow(12 * kPi * s, -family.base.dim / 2.0);
}

SlopeEstimate td_slope_k(const SpaceFamily& family, double t, int x,
                         const SGrid& grid) {
    TdContext ctx = td_context(family, t, grid.s_values);
    check_grid(grid, ctx.slice);
    double a0 = density_at(ctx.slice, x);
    std::vector<Kahan> acc(grid.s_values.size());
    kernel_row(family.base, x, grid.s_values, ctx.scale, ctx.slice.weights, 1.0,
               acc);
    std::vector<double> y(acc.size());
    for (size_t k = 0; k < acc.size(); ++k)
        y[k] = a0 - acc[k].sum * std::pow(12 * kPi * grid.s_values[k],
                                          -family.base.dim / 2.0);
    return fit_slope(grid.s_values, y);
}

SlopeEstimate td_slope_K(const SpaceFamily& family, double t, const SGrid& grid) {
    TdContext ctx = td_context(family, t, grid.s_values);
    check_grid(grid, ctx.slice);
    double a0 = gaussian_double_integral_limit(ctx.slice);
    std::vector<int> reps;
    std::vector<double> mass;
    orbit_lists(ctx.slice, ctx.slice.weights, reps, mass);
    std::vector<double> av = double_integral_core(
        family.base, grid.s_values, ctx.scale, ctx.slice.weights, reps, mass);
    std::vector<double> y(av.size());
    for (size_t k = 0; k < av.size(); ++k) y[k] = a0 - av[k];
    return fit_slope(grid.s_values, y);
}

SlopeEstimate td_slope_k_directional(const SpaceFamily& family, double t, int x,
                                     const DirectionalCap& cap,
                                     const SGrid& grid) {
    TdContext ctx = td_context(family, t, grid.s_values);
    check_grid(grid, ctx.slice);
    double a0 = density_at(ctx.slice, x) * cap_fraction(family.base.dim, cap);
    std::vector<double> av = directional_batch(family.base, x, cap,
                                               grid.s_values, ctx.scale,
                                               ctx.slice.weights);
    std::vector<double> y(av.size());
    for (size_t k = 0; k < av.size(); ++k) y[k] = a0 - av[k];
    return fit_slope(grid.s_values, y);
}

} // namespace rfl
