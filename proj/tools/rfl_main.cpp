// rfl: batch front door for the synthetic Ricci-flow toolkit.
//
// Commands
//   generate    build a catalog space/family and write it to a JSON file
//   functional  Gaussian volume functionals on a space (or family slice)
//   diagnose    flow diagnostics (theta/eta/sandwich/flags) on a family
//   verify      acceptance suites and family sanity checks
//
// Exit codes: 0 pass, 1 check failure, 2 usage error, 3 numerical failure.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rfl/accept.hpp"
#include "rfl/diagnostics.hpp"
#include "rfl/functionals.hpp"
#include "rfl/space_io.hpp"

using nlohmann::json;

namespace {

struct usage_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// FNV-1a over the raw file bytes; stands in for a content hash in reports.
std::string content_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw rfl::io_error("cannot open: " + path);
    uint64_t h = 1469598103934665603ull;
    char c;
    while (f.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

rfl::SGrid parse_s_grid(const std::string& text) {
    // "a:b:k" = geometric grid from a down to b with k points.
    double a = 0, b = 0;
    int k = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> a >> c1 >> b >> c2 >> k) || c1 != ':' || c2 != ':' || k < 2 ||
        !(a > b) || !(b > 0))
        throw usage_error("--s-grid expects a:b:k with a > b > 0, k >= 2");
    return rfl::SGrid::geometric(a, b, k, 0.0);
}

json slope_json(const rfl::SlopeEstimate& e) {
    return {{"value", e.value},
            {"diverges", e.diverges},
            {"divergence_sign", e.divergence_sign},
            {"c_half", e.c_half},
            {"c_one", e.c_one},
            {"c_three_half", e.c_three_half},
            {"se_half", e.se_half},
            {"se_one", e.se_one},
            {"residual", e.residual}};
}

void slope_csv(std::ostream& os, const std::string& op,
               const rfl::SlopeEstimate& e) {
    os << "op,value,diverges,divergence_sign,c_half,c_one,c_three_half,"
          "se_half,se_one,residual\n";
    os << op << ',' << e.value << ',' << (e.diverges ? 1 : 0) << ','
       << e.divergence_sign << ',' << e.c_half << ',' << e.c_one << ','
       << e.c_three_half << ',' << e.se_half << ',' << e.se_one << ','
       << e.residual << "\n";
}

void emit(const json& report, const std::string& csv_text,
          const std::string& report_path, const std::string& format) {
    if (format == "csv") {
        if (report_path.empty())
            std::cout << csv_text;
        else {
            std::ofstream f(report_path);
            if (!f) throw rfl::io_error("cannot write: " + report_path);
            f << csv_text;
        }
        return;
    }
    if (report_path.empty())
        std::cout << report.dump(2) << "\n";
    else
        rfl::save_json(report, report_path);
}

json base_report(const std::string& command, const json& config,
                 const std::string& input_path) {
    json rep;
    rep["schema"] = "rfl-report/1";
    rep["command"] = command;
    rep["config"] = config;
    if (!input_path.empty())
        rep["input"] = {{"path", input_path}, {"hash", content_hash(input_path)}};
    return rep;
}

// ---------------------------------------------------------------------------

struct CommonOpts {
    std::string space_path, family_path, report_path;
    std::string format = "json";
    std::string s_grid_text;
    std::string tier = "fast";
    int pairs = 10;
    uint64_t seed = 1234;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_tier = false) {
    cmd->add_option("--space", o.space_path, "space JSON file");
    cmd->add_option("--family", o.family_path, "family JSON file");
    cmd->add_option("--s-grid", o.s_grid_text, "geometric s grid a:b:k");
    cmd->add_option("--pairs", o.pairs, "number of sampled pairs");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--threads", o.threads, "worker thread cap (0 = default)");
    cmd->add_option("--report", o.report_path, "report output file");
    cmd->add_option("--format", o.format, "json|csv")
        ->check(CLI::IsMember({"json", "csv"}));
    if (with_tier)
        cmd->add_option("--tier", o.tier, "fast|full")
            ->check(CLI::IsMember({"fast", "full"}));
}

void apply_threads(int threads) {
#ifdef _OPENMP
    if (threads > 0) omp_set_num_threads(threads);
#else
    (void)threads;
#endif
}

json config_json(const CommonOpts& o) {
    return {{"space", o.space_path},   {"family", o.family_path},
            {"s_grid", o.s_grid_text}, {"pairs", o.pairs},
            {"seed", o.seed},          {"threads", o.threads},
            {"format", o.format},      {"tier", o.tier}};
}

// --- generate ---------------------------------------------------------------

int cmd_generate(const std::string& kind, const std::string& params_text,
                 bool as_family, const std::string& out) {
    json params = params_text.empty() ? json::object() : json::parse(params_text);
    json j;
    if (as_family) {
        rfl::SpaceFamily fam = rfl::build_family(kind, params);
        j = rfl::family_to_json(fam);
    } else {
        rfl::DiscreteMMSpace sp = rfl::build_space(kind, params);
        auto report = rfl::validate_space(sp);
        if (!report.all_pass())
            throw std::runtime_error("generated space fails validation");
        j = rfl::space_to_json(sp);
    }
    rfl::save_json(j, out);
    return 0;
}

// --- functional --------------------------------------------------------------

int cmd_functional(const std::string& op, const CommonOpts& o, int x, double t,
                   double cap_angle) {
    rfl::DiscreteMMSpace space;
    std::string input = o.space_path;
    if (!o.space_path.empty()) {
        space = rfl::load_space(o.space_path);
    } else if (!o.family_path.empty()) {
        space = rfl::load_family(o.family_path).at(t);
        input = o.family_path;
    } else {
        throw usage_error("functional: need --space or --family");
    }
    rfl::SGrid grid = o.s_grid_text.empty()
                          ? rfl::SGrid::for_mesh(space.mesh_h, 1.0)
                          : parse_s_grid(o.s_grid_text);
    json rep = base_report("functional", config_json(o), input);
    rep["op"] = op;
    std::ostringstream csv;
    if (op == "slope-k") {
        auto e = rfl::slope_k(space, x, grid);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "slope-K") {
        auto e = rfl::slope_K(space, grid);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "directional-k") {
        rfl::DirectionalCap cap;
        cap.base_point = x;
        cap.half_angle = cap_angle;
        cap.axis.z = Eigen::Vector3d(0, 1, 0);
        auto e = rfl::slope_k_directional(space, x, cap, grid);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "expansion") {
        auto e = rfl::boundary_expansion_fit(space, grid);
        rep["result"] = {{"a0", e.a0},     {"b_sqrt", e.b_sqrt},
                         {"c_lin", e.c_lin}, {"se_a0", e.se_a0},
                         {"se_b", e.se_b},   {"residual", e.residual}};
        csv << "a0,b_sqrt,c_lin,se_a0,se_b,residual\n"
            << e.a0 << ',' << e.b_sqrt << ',' << e.c_lin << ',' << e.se_a0
            << ',' << e.se_b << ',' << e.residual << "\n";
    } else if (op == "volume") {
        auto vals = rfl::gaussian_volume_batch(space, x, grid.s_values);
        json rows = json::array();
        csv << "s,A_s\n";
        for (size_t i = 0; i < vals.size(); ++i) {
            rows.push_back({{"s", grid.s_values[i]}, {"A_s", vals[i]}});
            csv << grid.s_values[i] << ',' << vals[i] << "\n";
        }
        rep["result"] = rows;
    } else if (op == "density") {
        double se = 0.0;
        double rho = rfl::density_at(space, x, &se);
        rep["result"] = {{"rho", rho}, {"se", se}};
        csv << "rho,se\n" << rho << ',' << se << "\n";
    } else {
        throw usage_error("functional: unknown op '" + op + "'");
    }
    emit(rep, csv.str(), o.report_path, o.format);
    return 0;
}

// --- diagnose ----------------------------------------------------------------

json flag_json(const rfl::FlagResult& r) {
    return {{"pass", r.pass},
            {"margin", r.margin},
            {"witnesses", r.witnesses},
            {"note", r.note}};
}

int cmd_diagnose(const std::string& op, const CommonOpts& o, double t, int x,
                 int y, double eps, double N_dim) {
    if (o.family_path.empty()) throw usage_error("diagnose: need --family");
    rfl::SpaceFamily fam = rfl::load_family(o.family_path);
    if (t == 0.0) t = fam.t_lo + 0.5 * (fam.t_hi - fam.t_lo);
    rfl::DiagnosticConfig cfg;
    cfg.seed = o.seed;
    json rep = base_report("diagnose", config_json(o), o.family_path);
    rep["op"] = op;
    rep["t"] = t;
    std::ostringstream csv;
    int exit_code = 0;

    auto slice = fam.at(t);
    double h = fam.base.mesh_h;
    auto pairs = [&] {
        return rfl::sample_pairs(slice, o.pairs, 3 * h, cfg.eps_loc, o.seed);
    };

    if (op == "theta" || op == "theta-flat") {
        if (x < 0 || y < 0) throw usage_error(op + ": need --x and --y");
        auto e = op == "theta" ? rfl::theta(fam, t, x, y, cfg)
                               : rfl::theta_flat(fam, t, x, y, cfg);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "theta-star" || op == "eta-star") {
        if (x < 0) throw usage_error(op + ": need --x");
        auto e = op == "theta-star" ? rfl::theta_star(fam, t, x, cfg)
                                    : rfl::eta_star(fam, t, x, cfg);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "eta") {
        if (x < 0 || y < 0) throw usage_error("eta: need --x and --y");
        auto e = rfl::eta(fam, t, x, y, eps > 0 ? eps : cfg.eps_loc, cfg);
        rep["result"] = slope_json(e);
        slope_csv(csv, op, e);
    } else if (op == "rfex") {
        if (x < 0 || y < 0) throw usage_error("rfex: need --x and --y");
        double v = rfl::rfex(fam, t, x, y);
        rep["result"] = {{"value", v}};
        csv << "rfex\n" << v << "\n";
    } else if (op == "sandwich") {
        auto report = rfl::sandwich_check(fam, t, pairs(), cfg);
        json rows = json::array();
        csv << "t,x,y,d_t,theta,se_one,rfex,margin_lower,margin_upper\n";
        for (const auto& p : report.pairs) {
            rows.push_back({{"x", p.x},
                            {"y", p.y},
                            {"d_t", p.d_t},
                            {"theta", p.theta.value},
                            {"rfex", p.rfex ? *p.rfex : 0.0},
                            {"margin_lower", p.margin_lower},
                            {"margin_upper", p.margin_upper}});
            csv << p.t << ',' << p.x << ',' << p.y << ',' << p.d_t << ','
                << p.theta.value << ',' << p.theta.se_one << ','
                << (p.rfex ? *p.rfex : 0.0) << ',' << p.margin_lower << ','
                << p.margin_upper << "\n";
        }
        rep["result"] = {{"violations", report.violations}, {"pairs", rows}};
        if (report.violations > 0) exit_code = 1;
    } else if (op == "rough-super") {
        std::vector<double> deltas = cfg.backsteps_for(fam, t);
        std::vector<std::pair<double, double>> st = {
            {t - deltas.front(), t}, {t - deltas.back(), t}};
        auto r = rfl::rough_super_check(fam, st, pairs(), cfg);
        rep["result"] = flag_json(r);
        if (!r.pass) exit_code = 1;
    } else if (op == "rough-sub") {
        auto r = rfl::rough_sub_check(fam, t, pairs(),
                                      eps > 0 ? eps : cfg.sub_eps, cfg);
        rep["result"] = flag_json(r);
        if (!r.pass) exit_code = 1;
    } else if (op == "weak-super") {
        auto r = rfl::weak_super_check(fam, t, pairs(), cfg);
        rep["result"] = flag_json(r);
        if (!r.pass) exit_code = 1;
    } else if (op == "weak-sub") {
        auto r = rfl::weak_sub_check(fam, t, pairs(),
                                     eps > 0 ? eps : cfg.sub_eps, cfg);
        rep["result"] = flag_json(r);
        if (!r.pass) exit_code = 1;
    } else if (op == "n-super") {
        auto r = rfl::n_super_check(fam, t, pairs(), N_dim, cfg);
        rep["result"] = flag_json(r);
        if (!r.pass) exit_code = 1;
    } else if (op == "classify") {
        auto v = rfl::classify(fam, cfg);
        json n_super = json::array();
        for (const auto& [N, r] : v.n_super)
            n_super.push_back({{"N", N}, {"result", flag_json(r)}});
        json K = json::array();
        for (const auto& [tk, Kk] : v.K_samples)
            K.push_back({{"t", tk}, {"K", Kk}});
        rep["result"] = {{"rough_super", flag_json(v.rough_super)},
                         {"rough_sub", flag_json(v.rough_sub)},
                         {"weak_super", flag_json(v.weak_super)},
                         {"weak_sub", flag_json(v.weak_sub)},
                         {"n_super", n_super},
                         {"minimal_srf", flag_json(v.minimal_srf)},
                         {"K_samples", K}};
    } else {
        throw usage_error("diagnose: unknown op '" + op + "'");
    }
    emit(rep, csv.str(), o.report_path, o.format);
    return exit_code;
}

// --- verify -------------------------------------------------------------------

int run_flows_suite(const CommonOpts& o, json& rep) {
    rfl::SpaceFamily fam =
        o.family_path.empty()
            ? rfl::make_shrinking_sphere(24)
            : rfl::load_family(o.family_path);
    const int n_times = 9;
    std::vector<double> grid(n_times);
    double span = fam.t_hi - fam.t_lo;
    for (int i = 0; i < n_times; ++i)
        grid[i] = fam.t_lo + span * (0.05 + 0.9 * i / (n_times - 1));
    auto [Cd, Cm] = rfl::log_lipschitz_constants(fam, grid, 200, o.seed);

    double Cd_ref, Cm_ref;
    std::string basis;
    if (fam.model) {
        // Analytic rates on the same grid; homothetic families match the
        // measured constants exactly up to roundoff.
        Cd_ref = Cm_ref = 0.0;
        for (int i = 1; i < n_times; ++i) {
            double dt = grid[i] - grid[i - 1];
            double c1 = fam.model->metric_scale(grid[i - 1]);
            double c2 = fam.model->metric_scale(grid[i]);
            Cd_ref = std::max(Cd_ref, std::fabs(std::log(c2 / c1)) / dt);
            double w1 = fam.model->weight_at(grid[i - 1], 0);
            double w2 = fam.model->weight_at(grid[i], 0);
            if (w1 > 0 && w2 > 0)
                Cm_ref = std::max(Cm_ref, std::fabs(std::log(w2 / w1)) / dt);
        }
        basis = "analytic model rates";
    } else {
        Cd_ref = fam.declared_Cd;
        Cm_ref = fam.declared_Cm;
        basis = "declared constants";
    }
    double slack = 1e-6;
    bool pass = Cd <= Cd_ref * 1.01 + slack && Cm <= Cm_ref * 1.01 + slack;
    rep["result"] = {{"family", fam.id},
                     {"Cd", Cd},
                     {"Cm", Cm},
                     {"Cd_ref", Cd_ref},
                     {"Cm_ref", Cm_ref},
                     {"reference", basis},
                     {"pass", pass}};
    if (!pass) {
        std::ostringstream os;
        os << "log-Lipschitz check failed: measured (Cd=" << Cd
           << ", Cm=" << Cm << ") vs " << basis << " (" << Cd_ref << ", "
           << Cm_ref << ")";
        rep["result"]["witness"] = os.str();
    }
    return pass ? 0 : 1;
}

int cmd_verify(const std::string& suite, const CommonOpts& o) {
    json rep = base_report("verify", config_json(o), "");
    rep["suite"] = suite;

    if (suite == "flows") {
        int code = run_flows_suite(o, rep);
        emit(rep, "", o.report_path, "json");
        return code;
    }

    std::vector<int> ids;
    if (suite == "all") {
        ids = rfl::accept::criterion_ids();
    } else if (suite == "static-scalar") {
        ids = {1};
    } else {
        for (int id : rfl::accept::criterion_ids())
            if (rfl::accept::criterion_name(id) == suite ||
                std::to_string(id) == suite)
                ids.push_back(id);
        if (ids.empty()) {
            std::cerr << "unknown suite '" << suite << "'\n";
            return 2;
        }
    }
    std::vector<rfl::accept::CriterionResult> results;
    bool all_pass = true;
    for (int id : ids) {
        auto r = rfl::accept::run_criterion(id, o.tier);
        std::cout << (r.pass() ? "PASS" : "FAIL") << " [" << r.id << "] "
                  << r.name << " (" << r.seconds << " s)\n";
        all_pass = all_pass && r.pass();
        results.push_back(std::move(r));
    }
    json body = rfl::accept::report_json(results);
    for (auto& [k, v] : body.items()) rep[k] = v;
    emit(rep, "", o.report_path, "json");
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic Ricci-flow diagnostics"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* gen = app.add_subcommand("generate", "build a space/family file");
    std::string gen_kind, gen_params, gen_out;
    bool gen_family = false;
    gen->add_option("kind", gen_kind, "generator name")->required();
    gen->add_option("--params", gen_params, "generator parameters (JSON text)");
    gen->add_flag("--as-family", gen_family, "build a family instead of a space");
    gen->add_option("--out", gen_out, "output file")->required();

    auto* fun = app.add_subcommand("functional", "Gaussian volume functionals");
    std::string fun_op;
    int fun_x = 0;
    double fun_t = 0.0, fun_cap = M_PI / 2;
    fun->add_option("op", fun_op,
                    "slope-k|slope-K|directional-k|expansion|volume|density")
        ->required();
    fun->add_option("--x", fun_x, "base atom index");
    fun->add_option("--t", fun_t, "family slice time");
    fun->add_option("--cap-angle", fun_cap, "directional cap half-angle");
    add_common(fun, opts);

    auto* diag = app.add_subcommand("diagnose", "flow diagnostics");
    std::string diag_op;
    int diag_x = -1, diag_y = -1;
    double diag_t = 0.0, diag_eps = 0.0, diag_N = 2.0;
    diag->add_option("op", diag_op,
                     "theta|theta-star|theta-flat|eta|eta-star|rfex|sandwich|"
                     "rough-super|rough-sub|weak-super|weak-sub|n-super|classify")
        ->required();
    diag->add_option("--t", diag_t, "time (default: interval midpoint)");
    diag->add_option("--x", diag_x, "atom index");
    diag->add_option("--y", diag_y, "atom index");
    diag->add_option("--eps", diag_eps, "localization / sub tolerance");
    diag->add_option("--N", diag_N, "dimension bound for n-super");
    add_common(diag, opts);

    auto* ver = app.add_subcommand("verify", "acceptance suites");
    std::string ver_suite;
    ver->add_option("suite", ver_suite,
                    "criterion name or id, 'all', 'static-scalar', 'flows'")
        ->required();
    add_common(ver, opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_threads(opts.threads);
        if (gen->parsed())
            return cmd_generate(gen_kind, gen_params, gen_family, gen_out);
        if (fun->parsed())
            return cmd_functional(fun_op, opts, fun_x, fun_t, fun_cap);
        if (diag->parsed())
            return cmd_diagnose(diag_op, opts, diag_t, diag_x, diag_y, diag_eps,
                                diag_N);
        if (ver->parsed()) return cmd_verify(ver_suite, opts);
        std::cerr << "no command\n";
        return 2;
    } catch (const usage_error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const rfl::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "json error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
}
