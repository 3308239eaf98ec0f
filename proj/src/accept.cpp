#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rfl/accept.hpp"
#include "rfl/diagnostics.hpp"
#include "rfl/functionals.hpp"
#include "rfl/heat.hpp"
#include "rfl/mmspace.hpp"
#include "rfl/oracles.hpp"
#include "rfl/transport.hpp"

namespace rfl::accept {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wall_now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// |got - expected| <= tol.
void check_abs(std::vector<CheckRecord>& out, const std::string& id, double got,
               double expected, double tol, const std::string& note = "") {
    CheckRecord r;
    r.check_id = id;
    r.expected = expected;
    r.got = got;
    r.tolerance = tol;
    r.pass = std::isfinite(got) && std::fabs(got - expected) <= tol;
    r.note = note;
    out.push_back(r);
}

// got >= threshold (or <= with flip). tolerance field records the threshold.
void check_ge(std::vector<CheckRecord>& out, const std::string& id, double got,
              double threshold, const std::string& note = "") {
    CheckRecord r;
    r.check_id = id;
    r.expected = threshold;
    r.got = got;
    r.pass = got >= threshold;
    r.note = note.empty() ? "lower bound" : note;
    out.push_back(r);
}

void check_le(std::vector<CheckRecord>& out, const std::string& id, double got,
              double threshold, const std::string& note = "") {
    CheckRecord r;
    r.check_id = id;
    r.expected = threshold;
    r.got = got;
    r.pass = got <= threshold;
    r.note = note.empty() ? "upper bound" : note;
    out.push_back(r);
}

void check_flag(std::vector<CheckRecord>& out, const std::string& id, bool got,
                bool expected, const std::string& note = "") {
    CheckRecord r;
    r.check_id = id;
    r.expected = expected ? 1.0 : 0.0;
    r.got = got ? 1.0 : 0.0;
    r.pass = got == expected;
    r.note = note;
    out.push_back(r);
}

std::string first_witness(const FlagResult& f) {
    return f.witnesses.empty() ? std::string() : f.witnesses.front();
}

// ---------------------------------------------------------------------------
// 1. Static scalar slopes: flat torus k = 0, round sphere k = 2, K = 8 pi.

void run_c1(std::vector<CheckRecord>& out, bool full) {
    DiscreteMMSpace torus = make_flat_torus(64);
    // Window: floor 2 h^2 (lattice bias dies fast for the wide Gaussian),
    // cap 1.2e-3 so the kernel tail stays clear of the injectivity radius.
    SGrid gt = SGrid::for_mesh(torus.mesh_h, 1.9, 8, 2.0, 1.2e-3);
    for (int p = 0; p < 10; ++p) {
        int x = (409 * p + 31) % torus.n_points;
        auto e = slope_k(torus, x, gt);
        check_abs(out, "torus-k-" + std::to_string(p), e.value, 0.0, 0.05);
    }
    DiscreteMMSpace sph = make_sphere(48);
    SGrid gs = SGrid::for_mesh(sph.mesh_h, 2.3, 8, 4.0, 0.05);
    std::vector<int> rings = full ? std::vector<int>{12, 16, 20, 24, 28, 32, 36}
                                  : std::vector<int>{16, 24, 32};
    for (int ring : rings) {
        auto e = slope_k(sph, ring * 96, gs);
        check_abs(out, "sphere-k-ring" + std::to_string(ring), e.value, 2.0, 0.1);
    }
    auto K = slope_K(sph, gs);
    check_abs(out, "sphere-K", K.value, 8 * kPi, 0.05 * 8 * kPi);
}

// ---------------------------------------------------------------------------
// 2. Boundary expansion of the unit disk.

void run_c2(std::vector<CheckRecord>& out, bool) {
    DiscreteMMSpace disk = make_disk(64, 256);
    SGrid g = SGrid::for_mesh(disk.mesh_h, 1.0, 8, 4.0, 0.0093);
    ExpansionFit f = boundary_expansion_fit(disk, g);
    double b_want = -2 * kPi * std::sqrt(3.0 / kPi);
    check_abs(out, "disk-b", f.b_sqrt, b_want, 0.03 * std::fabs(b_want));
    auto K = slope_K(disk, g);
    check_flag(out, "disk-K-plus-inf", K.diverges && K.divergence_sign > 0, true,
               "slope_K must flag +inf");
}

// ---------------------------------------------------------------------------
// 3. Gluing trichotomy for 1, 2, 3 disk copies.

void run_c3(std::vector<CheckRecord>& out, bool full) {
    SGrid fit_grid;
    {
        DiscreteMMSpace disk = make_disk(64, 256);
        SGrid g = SGrid::for_mesh(disk.mesh_h, 1.0, 8, 4.0, 0.0093);
        ExpansionFit f1 = boundary_expansion_fit(disk, g);
        check_le(out, "copies1-b", f1.b_sqrt, -3.0, "open boundary");
        auto K1 = slope_K(disk, g);
        check_flag(out, "copies1-flag", K1.diverges && K1.divergence_sign > 0,
                   true, "+inf");
    }
    {
        // Finer mesh for the doubled disk: b must resolve a zero.
        DiscreteMMSpace d2 = full ? make_disk(128, 512, 1.0, 2)
                                  : make_disk(96, 384, 1.0, 2);
        SGrid g = SGrid::for_mesh(d2.mesh_h, 1.0, 8, 4.0, 0.004);
        ExpansionFit f2 = boundary_expansion_fit(d2, g);
        check_abs(out, "copies2-b", f2.b_sqrt, 0.0, 0.15);
    }
    {
        DiscreteMMSpace d2 = make_disk(64, 256, 1.0, 2);
        SGrid g = SGrid::for_mesh(d2.mesh_h, 1.0, 8, 4.0, 0.0093);
        auto K2 = slope_K(d2, g);
        check_flag(out, "copies2-flag", !K2.diverges, true, "finite");
        check_abs(out, "copies2-K", K2.value, 8 * kPi, 0.10 * 8 * kPi,
                  "Gauss-Bonnet 8 pi chi");
    }
    {
        DiscreteMMSpace d3 = make_disk(64, 256, 1.0, 3);
        SGrid g = SGrid::for_mesh(d3.mesh_h, 1.0, 8, 4.0, 0.004);
        ExpansionFit f3 = boundary_expansion_fit(d3, g);
        check_ge(out, "copies3-b", f3.b_sqrt, 3.0, "excess rim mass");
        SGrid gk = SGrid::for_mesh(d3.mesh_h, 1.0, 8, 4.0, 0.0093);
        auto K3 = slope_K(d3, gk);
        check_flag(out, "copies3-flag", K3.diverges && K3.divergence_sign < 0,
                   true, "-inf");
    }
}

// ---------------------------------------------------------------------------
// 4. Cone correction C_alpha and the vanishing vertex k.

void run_c4(std::vector<CheckRecord>& out, bool) {
    DiscreteMMSpace disk = make_disk(64, 256);
    for (double alpha : {kPi / 2, kPi}) {
        DiscreteMMSpace cone = make_cone2d(64, 192, alpha, 1.0);
        SGrid g = SGrid::for_mesh(std::max(cone.mesh_h, disk.mesh_h), 1.0, 8,
                                  4.0, 0.0093);
        auto kc = slope_K(cone, g);
        auto kd = slope_K(disk, g);
        double beta = 2 * kPi - alpha;
        double C = kc.c_one - beta / (2 * kPi) * kd.c_one;
        double want = oracles::cone_correction(alpha);
        std::string tag = alpha < 2.0 ? "half-pi" : "pi";
        check_abs(out, "C-" + tag, C, want, 0.05 * want);

        // Vertex k on a wide cone so the window sits inside the cone.
        DiscreteMMSpace wide = make_cone2d(512, 768, alpha, 2.0);
        SGrid gv = SGrid::geometric(0.037, 0.004, 10, 4.0);
        auto kv = slope_k(wide, 0, gv);
        check_abs(out, "vertex-k-" + tag, kv.value, 0.0, 0.1);

        // K != integral of k: the singular contribution C exceeds 3 sigma of
        // the combined fit noise (the vertex integrand itself is ~0).
        double sigma = std::sqrt(kc.se_one * kc.se_one +
                                 std::pow(beta / (2 * kPi) * kd.se_one, 2)) +
                       std::fabs(kv.value) * wide.weights[0];
        check_ge(out, "gap-3sigma-" + tag, C, 3 * sigma,
                 "K minus integral of k beyond 3 sigma");
    }
}

// ---------------------------------------------------------------------------
// 5. Directional half-cap slope on the unit sphere.

void run_c5(std::vector<CheckRecord>& out, bool) {
    DiscreteMMSpace sph = make_sphere(128);
    int x = sph.n_points / 2 + 128;
    Eigen::Vector3d p = sph.coords[x].v;
    Eigen::Vector3d ez(0.37, -0.21, 0.9); // generic, avoids grid symmetry
    DirectionalCap cap;
    cap.base_point = x;
    cap.axis.z = (ez - ez.dot(p) * p).normalized();
    cap.half_angle = kPi / 2;
    cap.radius_cap = 1.5;
    SGrid g = SGrid::for_mesh(sph.mesh_h, 4.2, 12, 4.0, 0.0228);
    auto est = slope_k_directional(sph, x, cap, g);
    check_abs(out, "halfcap-k", est.value, 1.0, 0.1);

    DirectionalCap capm = cap;
    capm.axis.z = -cap.axis.z;
    DirectionalCap fullcap = cap;
    fullcap.half_angle = kPi;
    double s0 = 0.01;
    double a = directional_volume(sph, x, cap, s0);
    double b = directional_volume(sph, x, capm, s0);
    double f = directional_volume(sph, x, fullcap, s0);
    check_abs(out, "cap-additivity", a + b - f, 0.0, 1e-12,
              "opposite half-caps sum to the full sphere of directions");
}

// ---------------------------------------------------------------------------
// 6. Weighted identity on the periodic cell rho = 1 + 0.2 cos x.

void run_c6(std::vector<CheckRecord>& out, bool) {
    auto wc = make_weighted_circle(
        256, 2 * kPi, [](double x) { return 1.0 + 0.2 * std::cos(x); });
    SGrid g = SGrid::for_mesh(wc.mesh_h, 2.0, 12, 4.0, 0.037);
    // k = R rho - 3 Delta rho = 0.6 cos x on the flat circle.
    struct Pt {
        int atom;
        double want;
        const char* tag;
    };
    for (Pt pt : {Pt{0, 0.6, "x0"}, Pt{64, 0.0, "xhalfpi"}, Pt{128, -0.6, "xpi"}}) {
        auto e = slope_k(wc, pt.atom, g);
        check_abs(out, std::string("wc-k-") + pt.tag, e.value, pt.want, 0.06);
    }
    auto K = slope_K(wc, g);
    double want = 3 * 0.04 * kPi; // int [rho^2 R + 3 |grad rho|^2]
    check_abs(out, "wc-K", K.value, want, 0.10 * want);
}

// ---------------------------------------------------------------------------
// 7. theta diagnostics: torus 0, static sphere 1, shrinking sphere 0,
//    cone vertex theta* divergence.

void run_c7(std::vector<CheckRecord>& out, bool full) {
    std::vector<CheckRecord> torus_c, stat_c, shrink_c, cone_c;
#pragma omp parallel sections
    {
#pragma omp section
        {
            auto fam = make_static_family(make_flat_torus(48, 2.0));
            DiagnosticConfig cfg;
            cfg.delta_max = 0.01;
            auto pairs = sample_pairs(fam.base, full ? 3 : 1, 0.1, 0.25, 7);
            int i = 0;
            for (auto [x, y] : pairs) {
                auto e = theta(fam, 0.5, x, y, cfg);
                check_abs(torus_c, "torus-theta-" + std::to_string(i++), e.value,
                          0.0, 0.05);
            }
        }
#pragma omp section
        {
            auto fam = make_static_family(make_sphere(64));
            DiagnosticConfig cfg;
            int x = 32 * 128, y = x + 2; // equator pair, d = 0.098
            auto e = theta(fam, 0.5, x, y, cfg);
            check_abs(stat_c, "sphere-theta-d0.1", e.value, 1.0, 0.1);
        }
#pragma omp section
        {
            auto fam = make_shrinking_sphere(48);
            DiagnosticConfig cfg;
            double t = 0.225;
            std::vector<int> ks = full ? std::vector<int>{2, 3}
                                       : std::vector<int>{2};
            for (int k : ks) {
                int x = 24 * 96, y = x + k;
                auto e = theta(fam, t, x, y, cfg);
                check_abs(shrink_c, "shrink-theta-k" + std::to_string(k),
                          e.value, 0.0, 0.1);
            }
        }
#pragma omp section
        {
            auto fam = make_static_family(make_cone2d(48, 32, kPi / 2, 0.5));
            DiagnosticConfig cfg;
            cfg.propagator.dt_max = full ? 1e-4 : 2e-4;
            cfg.support_tail = 1e-6;
            cfg.pair_budget = full ? 3 : 2;
            cfg.backstep_count = 4;
            auto e = theta_star(fam, 0.5, 0, cfg);
            check_flag(cone_c, "cone-theta-star-diverges",
                       e.diverges && e.divergence_sign > 0, true,
                       "sup over halving balls must grow");
        }
    }
    for (auto* v : {&torus_c, &stat_c, &shrink_c, &cone_c})
        out.insert(out.end(), v->begin(), v->end());
}

// ---------------------------------------------------------------------------
// 8. Sandwich bound on static and shrinking spheres, 20 pairs.

std::vector<std::pair<int, int>> sphere_ring_pairs() {
    const int nlon = 96;
    std::vector<std::pair<int, int>> pairs;
    for (int ring : {23, 24})
        for (int k : {1, 2, 3}) pairs.push_back({ring * nlon, ring * nlon + k});
    for (int ring : {22, 25})
        for (int k : {1, 2}) pairs.push_back({ring * nlon, ring * nlon + k});
    return pairs;
}

void run_c8(std::vector<CheckRecord>& out, bool) {
    auto pairs = sphere_ring_pairs();
    DiagnosticConfig cfg;
    {
        auto fam = make_static_family(make_sphere(48));
        auto rep = sandwich_check(fam, 0.5, pairs, cfg);
        check_abs(out, "static-pairs", static_cast<double>(rep.pairs.size()),
                  10.0, 0.0);
        check_abs(out, "static-violations",
                  static_cast<double>(rep.violations), 0.0, 0.0);
    }
    {
        auto fam = make_shrinking_sphere(48);
        auto rep = sandwich_check(fam, 0.225, pairs, cfg);
        check_abs(out, "shrinking-pairs", static_cast<double>(rep.pairs.size()),
                  10.0, 0.0);
        check_abs(out, "shrinking-violations",
                  static_cast<double>(rep.violations), 0.0, 0.0);
    }
}

// ---------------------------------------------------------------------------
// 9. theta-flat equals eta-star within 0.15.

void run_c9(std::vector<CheckRecord>& out, bool full) {
    // theta_flat wants tight localization; eta_star needs the wider default
    // ball to find interpolation pairs.
    struct Job {
        const char* tag;
        int which; // 0 torus, 1 sphere
        int x, y;
    };
    std::vector<Job> jobs;
    int n_torus = full ? 3 : 2, n_sphere = full ? 2 : 1;
    for (int p = 0; p < n_torus; ++p) {
        int x = (7 + 11 * p) * 48 + (5 + 9 * p) % 48;
        jobs.push_back({"torus", 0, x, x + 3});
    }
    for (int p = 0; p < n_sphere; ++p) {
        int x = 24 * 96 + 17 * p;
        jobs.push_back({"sphere", 1, x, x + 2});
    }
    auto torus_fam = make_static_family(make_flat_torus(48, 2.0));
    auto sphere_fam = make_shrinking_sphere(48);
    std::vector<CheckRecord> recs(jobs.size());
#pragma omp parallel for schedule(dynamic)
    for (size_t i = 0; i < jobs.size(); ++i) {
        const Job& jb = jobs[i];
        const SpaceFamily& fam = jb.which == 0 ? torus_fam : sphere_fam;
        double t = jb.which == 0 ? 0.5 : 0.225;
        DiagnosticConfig fcfg;
        fcfg.pair_budget = 3;
        fcfg.eps_loc = 0.1;
        if (jb.which == 0) fcfg.delta_max = 0.01;
        DiagnosticConfig ecfg;
        ecfg.pair_budget = 3;
        double tf = theta_flat(fam, t, jb.x, jb.y, fcfg).value;
        double es = eta_star(fam, t, jb.x, ecfg).value;
        std::vector<CheckRecord> one;
        check_abs(one, std::string(jb.tag) + "-x" + std::to_string(jb.x),
                  tf - es, 0.0, 0.15,
                  "theta_flat=" + std::to_string(tf) +
                      " eta_star=" + std::to_string(es));
        recs[i] = one.front();
    }
    out.insert(out.end(), recs.begin(), recs.end());
}

// ---------------------------------------------------------------------------
// 10. Gaussian-weights phase diagram.

void run_c10(std::vector<CheckRecord>& out, bool) {
    struct Fam {
        double Adot, a;
    };
    DiagnosticConfig cfg;
    for (Fam fp : {Fam{-2, 1}, Fam{-1, 1}, Fam{-3, 1}, Fam{-2, 0}}) {
        auto fam = make_gaussian_flow(256, 6.0, 1.0, fp.Adot, fp.a);
        double t = 0.5 * (fam.t_lo + fam.t_hi);
        auto slice = fam.at(t);
        auto pairs = sample_pairs(slice, 6, 0.2, 1.0, 5);
        std::vector<std::pair<double, double>> st;
        for (double gap : {0.05, 0.1})
            if (t - gap > fam.t_lo) st.push_back({t - gap, t});
        auto sup = rough_super_check(fam, st, pairs, cfg);
        auto pairs_sub = sample_pairs(slice, 6, 0.05, 0.25, 5);
        auto sub = rough_sub_check(fam, t, pairs_sub, cfg.sub_eps, cfg);
        bool want_super = fp.Adot >= -2 * fp.a;
        bool want_sub = fp.Adot <= -2 * fp.a;
        std::ostringstream tag;
        tag << "Adot" << fp.Adot << "-a" << fp.a;
        check_flag(out, tag.str() + "-super", sup.pass, want_super,
                   "margin=" + std::to_string(sup.margin));
        check_flag(out, tag.str() + "-sub", sub.pass, want_sub,
                   "margin=" + std::to_string(sub.margin));
    }
    {
        auto fam = make_shrinking_gaussian(256, 6.0);
        double t = 0.5 * (fam.t_lo + fam.t_hi);
        auto slice = fam.at(t);
        auto pairs = sample_pairs(slice, 6, 0.2, 1.0, 5);
        std::vector<std::pair<double, double>> st = {{t - 0.05, t}, {t - 0.1, t}};
        auto sup = rough_super_check(fam, st, pairs, cfg);
        auto pairs_sub = sample_pairs(slice, 6, 0.05, 0.25, 5);
        auto sub = rough_sub_check(fam, t, pairs_sub, cfg.sub_eps, cfg);
        check_flag(out, "shrinking-rough-ricci-flow", sup.pass && sub.pass, true,
                   "rough super and rough sub together");
        auto pairsN = sample_pairs(slice, 6, 0.5, 2.0, 9);
        for (double N : {1.0, 2.0, 10.0}) {
            auto r = n_super_check(fam, t, pairsN, N, cfg);
            check_flag(out, "n-super-N" + std::to_string(static_cast<int>(N)),
                       r.pass, false,
                       "margin=" + std::to_string(r.margin) + " " +
                           first_witness(r));
        }
    }
}

// ---------------------------------------------------------------------------
// 11. Shrinking suspensions over circles of length pi and 3 pi.

void run_c11(std::vector<CheckRecord>& out, bool full) {
    DiagnosticConfig cfg;
    const int ns = 48, nth = 48;
    auto fam = make_shrinking_suspension(ns, nth, kPi);
    {
        auto slice = fam.at(0.15);
        auto pairs = sample_pairs(slice, full ? 8 : 4, 0.2, 1.0, 11);
        std::vector<std::pair<double, double>> st =
            full ? std::vector<std::pair<double, double>>{
                       {0.13, 0.15}, {0.10, 0.15}, {0.23, 0.25}, {0.20, 0.25}}
                 : std::vector<std::pair<double, double>>{{0.13, 0.15},
                                                          {0.23, 0.25}};
        auto sup = rough_super_check(fam, st, pairs, cfg);
        check_flag(out, "Lpi-rough-super", sup.pass, true,
                   "margin=" + std::to_string(sup.margin));
    }
    {
        // Positive K_t beyond 3 sigma rules the flow out as minimal.
        std::vector<double> ts = full ? std::vector<double>{0.1, 0.2}
                                      : std::vector<double>{0.2};
        for (double t : ts) {
            SGrid grid = SGrid::for_mesh(fam.base.mesh_h, 2.0, 8, 4.0, 0.05);
            auto K = td_slope_K(fam, t, grid);
            check_ge(out, "Lpi-Kt-positive-t" + std::to_string(t), K.value,
                     3 * K.se_one, "minimal_srf must be false");
        }
    }
    {
        // Pole-crossing pairs: base separation > pi contracts too fast.
        std::vector<std::pair<int, int>> pairs;
        for (int j : {1, 2, 3})
            pairs.push_back({1 + (j - 1) * nth, 1 + (j - 1) * nth + nth / 2});
        auto sub = rough_sub_check(fam, 0.15, pairs, cfg.sub_eps, cfg);
        check_flag(out, "Lpi-rough-sub-poles", sub.pass, false,
                   "margin=" + std::to_string(sub.margin) + " " +
                       first_witness(sub));
    }
    {
        const int nth3 = 144;
        auto fam3 = make_shrinking_suspension(ns, nth3, 3 * kPi);
        std::vector<std::pair<int, int>> pairs;
        int n_pole = full ? 3 : 2;
        for (int j = 1; j <= n_pole; ++j)
            pairs.push_back({1 + (j - 1) * nth3, 1 + (j - 1) * nth3 + nth3 / 2});
        if (full) {
            auto rnd = sample_pairs(fam3.at(0.15), 5, 0.2, 1.0, 11);
            pairs.insert(pairs.end(), rnd.begin(), rnd.end());
        }
        std::vector<std::pair<double, double>> st =
            full ? std::vector<std::pair<double, double>>{{0.13, 0.15},
                                                          {0.10, 0.15}}
                 : std::vector<std::pair<double, double>>{{0.13, 0.15}};
        auto sup = rough_super_check(fam3, st, pairs, cfg);
        check_flag(out, "L3pi-rough-super-fails", sup.pass, false,
                   first_witness(sup));
        check_ge(out, "L3pi-witness-count",
                 static_cast<double>(sup.witnesses.size()), 1.0,
                 "failure must carry a witness");
    }
}

// ---------------------------------------------------------------------------
// 12. Static cube surface.

void run_c12(std::vector<CheckRecord>& out, bool full) {
    {
        DiscreteMMSpace cube = make_cube_surface(full ? 48 : 32);
        SGrid grid = SGrid::for_mesh(cube.mesh_h, 1.0, 8, 4.0,
                                     full ? 0.00926 : 0.0093);
        auto K = slope_K(cube, grid);
        double want = 8 * oracles::cone_correction(kPi / 2);
        check_abs(out, "cube-K", K.value, want, 0.10 * want);
        check_ge(out, "cube-K-3sigma", K.value, 3 * K.se_one,
                 "nonzero K rules out minimal_srf");
    }
    {
        auto fam = make_static_family(make_cube_surface(32));
        auto slice = fam.at(0.5);
        auto pairs = sample_pairs(slice, 30, 0.3, 1.2, 7);
        std::vector<std::pair<double, double>> st = {{0.48, 0.5}, {0.45, 0.5}};
        DiagnosticConfig cfg;
        auto sup = rough_super_check(fam, st, pairs, cfg);
        check_flag(out, "cube-rough-super", sup.pass, true,
                   "margin=" + std::to_string(sup.margin));
    }
}

// ---------------------------------------------------------------------------
// 13. Property suites.

ProbMeasure random_sparse_measure(const DiscreteMMSpace& space, int support,
                                  std::mt19937_64& rng) {
    std::vector<double> w(space.n_points, 0.0);
    std::uniform_int_distribution<int> atom(0, space.n_points - 1);
    std::uniform_real_distribution<double> mass(0.1, 1.0);
    for (int k = 0; k < support; ++k) w[atom(rng)] += mass(rng);
    return measure_from_weights(std::move(w));
}

void run_c13(std::vector<CheckRecord>& out, bool full) {
    // --- OT metric axioms on a small sphere.
    {
        DiscreteMMSpace sph = make_sphere(16);
        std::mt19937_64 rng(4242);
        std::vector<ProbMeasure> ms;
        for (int i = 0; i < 4; ++i)
            ms.push_back(random_sparse_measure(sph, 40, rng));
        double worst_sym = 0.0, worst_tri = 0.0, worst_id = 0.0;
        for (size_t i = 0; i < ms.size(); ++i) {
            worst_id = std::max(worst_id, w2(sph, ms[i], ms[i]));
            for (size_t j = i + 1; j < ms.size(); ++j) {
                double dij = w2(sph, ms[i], ms[j]);
                double dji = w2(sph, ms[j], ms[i]);
                worst_sym = std::max(worst_sym, std::fabs(dij - dji));
                for (size_t k = 0; k < ms.size(); ++k) {
                    if (k == i || k == j) continue;
                    double vio = dij - w2(sph, ms[i], ms[k]) -
                                 w2(sph, ms[k], ms[j]);
                    worst_tri = std::max(worst_tri, vio);
                }
            }
        }
        check_le(out, "ot-identity", worst_id, 1e-9);
        check_le(out, "ot-symmetry", worst_sym, 1e-9);
        check_le(out, "ot-triangle", worst_tri, 1e-9);
    }
    // --- LP vs Sinkhorn.
    {
        DiscreteMMSpace sph = make_sphere(16);
        std::mt19937_64 rng(99);
        double worst = 0.0;
        for (int rep = 0; rep < (full ? 4 : 2); ++rep) {
            ProbMeasure a = random_sparse_measure(sph, 40, rng);
            ProbMeasure b = random_sparse_measure(sph, 40, rng);
            double lp = exact_lp(sph, a, b).cost;
            double sk = sinkhorn(sph, a, b).w2sq;
            worst = std::max(worst, std::fabs(sk - lp) / std::max(lp, 1e-12));
        }
        check_le(out, "sinkhorn-vs-lp", worst, 0.05, "relative w2sq gap");
    }
    // --- Heat flow: mass, positivity, semigroup.
    {
        auto fam = make_static_family(make_flat_torus(32));
        const DiscreteMMSpace& torus = fam.base;
        PropagatorConfig pc;
        ProbMeasure d0 = delta_measure(torus, 5);
        ProbMeasure p1 = propagate_dual(fam, 0.9, 0.9 - 0.004, d0, pc);
        double mass = 0.0, neg = 0.0;
        for (double v : p1.w) {
            mass += v;
            neg = std::min(neg, v);
        }
        check_abs(out, "heat-mass", mass, 1.0, 1e-8);
        ProbMeasure p2 = propagate_dual(fam, 0.9, 0.9 - 0.006, p1, pc);
        ProbMeasure q = propagate_dual(fam, 0.9, 0.9 - 0.010, d0, pc);
        double tv = 0.0;
        for (int i = 0; i < torus.n_points; ++i)
            tv += std::fabs(p2.w[i] - q.w[i]);
        check_le(out, "heat-semigroup", 0.5 * tv, 1e-6,
                 "P_s P_t = P_{s+t} in total variation");
        PropagatorConfig be;
        be.scheme = PropagatorConfig::Scheme::backward_euler;
        ProbMeasure pb = propagate_dual(fam, 0.9, 0.9 - 0.004, d0, be);
        double negb = 0.0;
        for (double v : pb.w) negb = std::min(negb, v);
        check_ge(out, "heat-positivity", negb, -1e-12,
                 "backward Euler preserves positivity");
        // Spectral backend (sphere kernel series): mass and positivity.
        DiscreteMMSpace sph = make_sphere(24);
        ProbMeasure hk = heat_kernel_measure(sph, 7 * 48, 0.01);
        double smass = 0.0, sneg = 0.0;
        for (double v : hk.w) {
            smass += v;
            sneg = std::min(sneg, v);
        }
        check_abs(out, "heat-mass-spectral", smass, 1.0, 1e-6);
        check_ge(out, "heat-positivity-spectral", sneg, -1e-9);
    }
    // --- A_s scaling identity: lambda_d-rescaled metric, lambda_m-rescaled
    //     measure => A_{lambda_d^2 s}' = lambda_m lambda_d^{-n} A_s exactly.
    {
        DiscreteMMSpace sph = make_sphere(24);
        double ld = 1.7, lm = 2.3;
        DiscreteMMSpace scaled = scale_space(sph, ld, lm);
        double worst = 0.0;
        for (double s : {0.01, 0.02}) {
            for (int x : {0, 7 * 48, 12 * 48 + 5}) {
                double lhs = gaussian_volume(scaled, x, ld * ld * s);
                double rhs = lm / (ld * ld) * gaussian_volume(sph, x, s);
                worst = std::max(worst, std::fabs(lhs - rhs) /
                                            std::max(std::fabs(rhs), 1e-300));
            }
            double lhs2 = gaussian_double_integral(scaled, ld * ld * s);
            double rhs2 =
                lm * lm / (ld * ld) * gaussian_double_integral(sph, s);
            worst = std::max(worst, std::fabs(lhs2 - rhs2) / std::fabs(rhs2));
        }
        check_le(out, "As-scaling-identity", worst, 1e-12, "exact identity");
    }
    // --- K >= integral of k across the catalog.
    {
        struct Entry {
            const char* tag;
            DiscreteMMSpace space;
            SGrid grid;
        };
        std::vector<Entry> entries;
        {
            DiscreteMMSpace t = make_flat_torus(64);
            SGrid g = SGrid::for_mesh(t.mesh_h, 1.9, 8, 2.0, 1.2e-3);
            entries.push_back({"torus", std::move(t), g});
        }
        {
            DiscreteMMSpace s = make_sphere(48);
            SGrid g = SGrid::for_mesh(s.mesh_h, 2.3, 8, 4.0, 0.05);
            entries.push_back({"sphere", std::move(s), g});
        }
        {
            auto wc = make_weighted_circle(
                256, 2 * kPi, [](double x) { return 1.0 + 0.2 * std::cos(x); });
            SGrid g = SGrid::for_mesh(wc.mesh_h, 2.0, 12, 4.0, 0.037);
            entries.push_back({"weighted-circle", std::move(wc), g});
        }
        {
            DiscreteMMSpace c = make_cube_surface(32);
            SGrid g = SGrid::for_mesh(c.mesh_h, 1.0, 8, 4.0, 0.0093);
            entries.push_back({"cube", std::move(c), g});
        }
        {
            DiscreteMMSpace cn = make_cone2d(64, 192, kPi / 2, 1.0);
            SGrid g = SGrid::for_mesh(cn.mesh_h, 1.0, 8, 4.0, 0.0093);
            entries.push_back({"cone", std::move(cn), g});
        }
        for (auto& e : entries) {
            auto K = slope_K(e.space, e.grid);
            double total = 0.0, se2 = 0.0;
            if (e.space.symmetry) {
                const auto& sym = *e.space.symmetry;
                for (size_t o = 0; o < sym.rep.size(); ++o) {
                    auto kv = slope_k(e.space, sym.rep[o], e.grid);
                    total += sym.mass[o] * kv.value;
                    se2 += std::pow(sym.mass[o] * kv.se_one, 2);
                }
            } else {
                for (int x = 0; x < e.space.n_points; ++x) {
                    auto kv = slope_k(e.space, x, e.grid);
                    total += e.space.weights[x] * kv.value;
                    se2 += std::pow(e.space.weights[x] * kv.se_one, 2);
                }
            }
            double slack = 3 * (K.se_one + std::sqrt(se2));
            check_ge(out, std::string("K-ge-intk-") + e.tag, K.value,
                     total - slack,
                     "int k = " + std::to_string(total));
        }
    }
}

} // namespace

bool CriterionResult::pass() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return !checks.empty();
}

std::vector<int> criterion_ids() {
    return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13};
}

std::string criterion_name(int id) {
    switch (id) {
    case 1: return "static-scalar-slopes";
    case 2: return "boundary-expansion";
    case 3: return "gluing-trichotomy";
    case 4: return "cone-correction";
    case 5: return "directional";
    case 6: return "weighted-identity";
    case 7: return "theta-diagnostics";
    case 8: return "sandwich";
    case 9: return "theta-flat-eta-star";
    case 10: return "gaussian-phase-diagram";
    case 11: return "suspensions";
    case 12: return "polytope";
    case 13: return "property-suites";
    default: throw std::invalid_argument("unknown criterion id");
    }
}

CriterionResult run_criterion(int id, const std::string& tier) {
    if (tier != "fast" && tier != "full")
        throw std::invalid_argument("tier must be 'fast' or 'full'");
    bool full = tier == "full";
    CriterionResult res;
    res.id = id;
    res.name = criterion_name(id);
    double t0 = wall_now();
    switch (id) {
    case 1: run_c1(res.checks, full); break;
    case 2: run_c2(res.checks, full); break;
    case 3: run_c3(res.checks, full); break;
    case 4: run_c4(res.checks, full); break;
    case 5: run_c5(res.checks, full); break;
    case 6: run_c6(res.checks, full); break;
    case 7: run_c7(res.checks, full); break;
    case 8: run_c8(res.checks, full); break;
    case 9: run_c9(res.checks, full); break;
    case 10: run_c10(res.checks, full); break;
    case 11: run_c11(res.checks, full); break;
    case 12: run_c12(res.checks, full); break;
    case 13: run_c13(res.checks, full); break;
    default: throw std::invalid_argument("unknown criterion id");
    }
    res.seconds = wall_now() - t0;
    return res;
}

nlohmann::json report_json(const std::vector<CriterionResult>& results) {
    nlohmann::json out;
    out["schema"] = "rfl-report/1";
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json jr;
        jr["id"] = r.id;
        jr["name"] = r.name;
        jr["pass"] = r.pass();
        jr["seconds"] = r.seconds;
        nlohmann::json checks = nlohmann::json::array();
        for (const auto& c : r.checks)
            checks.push_back({{"check_id", c.check_id},
                              {"expected", c.expected},
                              {"got", c.got},
                              {"tolerance", c.tolerance},
                              {"pass", c.pass},
                              {"note", c.note}});
        jr["checks"] = checks;
        arr.push_back(jr);
    }
    out["criteria"] = arr;
    return out;
}

} // namespace rfl::accept
