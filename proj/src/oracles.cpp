#include "rfl/oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace rfl::oracles {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double cone_correction(double alpha) {
    if (!(alpha > 0.0) || alpha > kPi + 1e-12)
        throw std::invalid_argument("cone_correction: alpha must be in (0, pi]");
    return 6.0 * (1.0 - alpha / (2.0 * kPi)) * (alpha - std::sin(alpha)) /
           (1.0 - std::cos(alpha));
}

double cone_correction_series(double alpha) {
    return 2.0 * alpha - alpha * alpha / kPi +
           alpha * alpha * alpha / 15.0;
}

double gaussian_w2_1d(double m1, double v1, double m2, double v2) {
    if (v1 < 0 || v2 < 0)
        throw std::invalid_argument("gaussian_w2_1d: negative variance");
    double ds = std::sqrt(v1) - std::sqrt(v2);
    return std::sqrt((m1 - m2) * (m1 - m2) + ds * ds);
}

double sphere_heat_kernel(int n, double radius, double d, double tau, int lmax,
                          double* tail) {
    if (tau < 0) throw std::invalid_argument("sphere_heat_kernel: tau < 0");
    if (n != 2)
        throw std::invalid_argument("sphere_heat_kernel: only n = 2 supported");
    const double r2 = radius * radius;
    const double x = std::cos(std::min(d / radius, kPi));
    // Legendre recurrence; eigenvalues -l(l+1)/r^2.
    double pm1 = 1.0, p = x;
    double sum = 1.0 / (4.0 * kPi * r2);
    for (int l = 1; l <= lmax; ++l) {
        sum += (2.0 * l + 1.0) / (4.0 * kPi * r2) *
               std::exp(-l * (l + 1.0) * tau / r2) * p;
        double pn = ((2.0 * l + 1.0) * x * p - l * pm1) / (l + 1.0);
        pm1 = p;
        p = pn;
    }
    if (tail) {
        int l = lmax + 1;
        // |P_l| <= 1; geometric-type bound on the remaining series.
        double head = (2.0 * l + 1.0) / (4.0 * kPi * r2) *
                      std::exp(-l * (l + 1.0) * tau / r2);
        double ratio = std::exp(-2.0 * (l + 1.0) * tau / r2);
        *tail = ratio < 1.0 ? head * 1.5 / (1.0 - ratio) : INFINITY;
    }
    return sum;
}

double circle_heat_kernel(double L, double d, double tau, int kmax) {
    if (tau < 0) throw std::invalid_argument("circle_heat_kernel: tau < 0");
    if (tau == 0) return d == 0 ? INFINITY : 0.0;
    if (tau < L * L / 40.0) {
        // Image sum (wrapped Gaussian), fast convergence for small tau.
        double sum = 0.0;
        for (int k = -8; k <= 8; ++k) {
            double u = d + k * L;
            sum += std::exp(-u * u / (4.0 * tau));
        }
        return sum / std::sqrt(4.0 * kPi * tau);
    }
    double sum = 1.0 / L;
    for (int k = 1; k <= kmax; ++k) {
        double lam = 2.0 * kPi * k / L;
        sum += 2.0 / L * std::exp(-lam * lam * tau) * std::cos(lam * d);
    }
    return sum;
}

double torus_heat_kernel(double Lx, double Ly, double dx, double dy,
                         double tau) {
    return circle_heat_kernel(Lx, dx, tau) * circle_heat_kernel(Ly, dy, tau);
}

OUState ou_dual_flow(double x, double t, double s, double A0, double Adot,
                     double a, int steps) {
    if (s > t) throw std::invalid_argument("ou_dual_flow: need s <= t");
    OUState st{x, 0.0};
    if (s == t) return st;
    // Backward evolution from time t to s; in reversed time u = t - r the
    // density follows dX = -(a/A_r) X du + sqrt(2/A_r) dW.
    const double T = t - s;
    const double du = T / steps;
    auto drift = [&](double u) { return a / (A0 + Adot * (t - u)); };
    auto diff = [&](double u) { return 2.0 / (A0 + Adot * (t - u)); };
    double m = x, V = 0.0;
    for (int k = 0; k < steps; ++k) {
        double u = k * du;
        // RK4 on the linear ODEs m' = -drift m, V' = -2 drift V + diff.
        auto fm = [&](double uu, double mm) { return -drift(uu) * mm; };
        auto fV = [&](double uu, double VV) {
            return -2.0 * drift(uu) * VV + diff(uu);
        };
        double k1m = fm(u, m), k1V = fV(u, V);
        double k2m = fm(u + du / 2, m + du / 2 * k1m);
        double k2V = fV(u + du / 2, V + du / 2 * k1V);
        double k3m = fm(u + du / 2, m + du / 2 * k2m);
        double k3V = fV(u + du / 2, V + du / 2 * k2V);
        double k4m = fm(u + du, m + du * k3m);
        double k4V = fV(u + du, V + du * k3V);
        m += du / 6 * (k1m + 2 * k2m + 2 * k3m + k4m);
        V += du / 6 * (k1V + 2 * k2V + 2 * k3V + k4V);
    }
    st.mean = m;
    st.variance = V;
    return st;
}

std::vector<ExpectedValue> expected_registry() {
    const double b_disk = 2.0 * kPi * std::sqrt(3.0 / kPi);
    std::vector<ExpectedValue> reg;
    auto add = [&](ExpectedValue e) { reg.push_back(std::move(e)); };
    add({"k_torus", 0.0, false, 0, "flat torus: R = 0, k = R", 0.0, 0.05});
    add({"k_sphere2", 2.0, false, 0, "unit 2-sphere: R = 2, k = R", 0.05, 0.0});
    add({"K_sphere2", 8.0 * kPi, false, 0,
         "unit 2-sphere: K = int R dvol = 2 * 4pi", 0.05, 0.0});
    add({"b_disk", -b_disk, false, 0,
         "unit disk: A_s = |M| - sqrt(3s/pi) |dM| + O(s), |dM| = 2pi", 0.03, 0.0});
    add({"K_disk", 0.0, true, 1, "unit disk: K = +infinity", 0.0, 0.0});
    add({"b_doubled_disk", 0.0, false, 0,
         "doubling: (k-2) boundary coefficient vanishes at k = 2", 0.0, 0.15});
    add({"b_tripled_disk", b_disk, false, 0,
         "k = 3 gluing: +(k-2) sqrt(3s/pi) |dM|", 0.05, 0.0});
    add({"K_tripled_disk", 0.0, true, -1, "k = 3 gluing: K = -infinity", 0.0, 0.0});
    add({"Khat_doubled_disk", 8.0 * kPi, false, 0,
         "doubled disk: 2*0 + 4(n-1) int_{dM} H = 4 * 2pi; equals 8 pi chi(disk)",
         0.10, 0.0});
    add({"C_alpha_pi", cone_correction(kPi), false, 0,
         "cone correction at alpha = pi: 3pi/2", 0.05, 0.0});
    add({"C_alpha_pi_2", cone_correction(kPi / 2), false, 0,
         "cone correction at alpha = pi/2", 0.05, 0.0});
    add({"k_cone_vertex", 0.0, false, 0, "k vanishes at 2D cone points", 0.0, 0.1});
    add({"K_cube", 8.0 * cone_correction(kPi / 2), false, 0,
         "unit cube surface: 8 vertices, each C_{pi/2}", 0.10, 0.0});
    add({"k_half_cap_sphere", 1.0, false, 0,
         "unit 2-sphere, |Z| = |S_x|/2: (n/|S_x|) int_Z Ric = 1", 0.10, 0.0});
    add({"k_weighted_circle_amplitude", 0.6, false, 0,
         "rho = 1 + 0.2 cos x on flat circle: k = -3 rho'' = 0.6 cos x", 0.10, 0.0});
    add({"K_weighted_circle", 3.0 * 0.04 * kPi, false, 0,
         "K = int [rho^2 R + 3 |grad rho|^2] = 3 * 0.04 * pi", 0.10, 0.0});
    add({"theta_static_torus", 0.0, false, 0,
         "translation invariance: W_s(P delta_x, P delta_y) = d(x, y)", 0.0, 0.05});
    add({"theta_static_sphere", 1.0, false, 0,
         "unit 2-sphere: contraction rate = Ric along geodesic = 1", 0.10, 0.0});
    add({"theta_shrinking_sphere", 0.0, false, 0,
         "Ricci flow: theta >= 0 and theta* <= 0", 0.0, 0.1});
    add({"rfex_static_sphere", 1.0, false, 0,
         "Ric(gdot) = |gdot|^2 on unit 2-sphere", 0.02, 0.0});
    add({"K_suspension_L_pi", 7.0 * kPi, false, 0,
         "suspension over circle L = pi: int R + 2 C_pi = 4pi + 3pi", 0.10, 0.0});
    return reg;
}

const ExpectedValue& expected(const std::string& id) {
    static const std::vector<ExpectedValue> reg = expected_registry();
    for (const auto& e : reg)
        if (e.id == id) return e;
    throw std::invalid_argument("expected_registry: unknown id " + id);
}

} // namespace rfl::oracles
