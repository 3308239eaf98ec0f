#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"
#include "rfl/space_io.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;

GeometryPtr geometry_from_json(const std::string& name,
                               const nlohmann::json& p) {
    auto getd = [&](const char* k, double dflt) {
        return p.contains(k) ? p.at(k).get<double>() : dflt;
    };
    auto geti = [&](const char* k, int dflt) {
        return p.contains(k) ? p.at(k).get<int>() : dflt;
    };
    GeomKind kind = geom_kind_from_string(name);
    switch (kind) {
    case GeomKind::sphere:
        return std::make_shared<SphereGeometry>(getd("radius", 1.0));
    case GeomKind::flat_torus:
        // Weight densities are not reconstructible from a file; distances
        // do not depend on them, so the reloaded geometry is unweighted.
        return std::make_shared<TorusGeometry>(geti("dim", 2), getd("side_x", 1.0),
                                               getd("side_y", 1.0));
    case GeomKind::euclidean_gaussian:
        return std::make_shared<GaussianLineGeometry>(
            getd("A", 1.0), getd("a", 1.0), getd("b", 0.0), getd("c", 0.0));
    case GeomKind::disk:
    case GeomKind::glued_domain:
        return std::make_shared<DiskGeometry>(getd("radius", 1.0),
                                              geti("copies", 1));
    case GeomKind::cone2d:
        return std::make_shared<ConeGeometry>(getd("alpha", kPi / 2),
                                              getd("outer_radius", 1.0));
    case GeomKind::suspension:
        return std::make_shared<SuspensionGeometry>(getd("base_length", kPi));
    case GeomKind::polytope_surface:
        return std::make_shared<CubeSurfaceGeometry>(getd("edge", 1.0));
    }
    throw io_error("geometry_from_json: unknown kind '" + name + "'");
}
} // namespace

nlohmann::json space_to_json(const DiscreteMMSpace& space) {
    nlohmann::json j;
    j["n_points"] = space.n_points;
    j["dim"] = space.dim;
    j["weights"] = space.weights;
    if (!space.coords.empty()) {
        nlohmann::json coords = nlohmann::json::array();
        for (const auto& p : space.coords)
            coords.push_back({p.label, p.v.x(), p.v.y(), p.v.z()});
        j["coords"] = std::move(coords);
    }
    if (space.geometry) {
        j["dist"] = {{"kind", "analytic"},
                     {"name", to_string(space.geometry->kind())},
                     {"params", space.geometry->params_json()}};
        if (space.dist_scale != 1.0) j["dist"]["scale"] = space.dist_scale;
    } else if (space.has_dense_dist()) {
        // Lower triangle row by row, diagonal included.
        std::vector<double> data;
        data.reserve(static_cast<size_t>(space.n_points) *
                     (space.n_points + 1) / 2);
        for (int i = 0; i < space.n_points; ++i)
            for (int k = 0; k <= i; ++k)
                data.push_back(space.dense_dist()(i, k) * space.dist_scale);
        j["dist"] = {{"kind", "dense_lower_triangular"}, {"data", data}};
    } else {
        throw io_error("space_to_json: space has no distance source");
    }
    if (!space.boundary.empty()) {
        std::vector<int> b(space.boundary.begin(), space.boundary.end());
        j["boundary"] = b;
    }
    j["meta"] = {{"mesh_h", space.mesh_h}, {"id", space.id}};
    return j;
}

DiscreteMMSpace space_from_json(const nlohmann::json& j) {
    DiscreteMMSpace sp;
    sp.n_points = j.at("n_points").get<int>();
    sp.dim = j.at("dim").get<int>();
    if (sp.n_points < 2) throw io_error("space file: n_points below 2");
    sp.weights = j.at("weights").get<std::vector<double>>();
    if (static_cast<int>(sp.weights.size()) != sp.n_points)
        throw io_error("space file: weights length mismatch");
    if (j.contains("coords")) {
        for (const auto& row : j.at("coords")) {
            ChartPoint p;
            p.label = row.at(0).get<int>();
            p.v = Vec3(row.at(1).get<double>(), row.at(2).get<double>(),
                       row.at(3).get<double>());
            sp.coords.push_back(p);
        }
        if (static_cast<int>(sp.coords.size()) != sp.n_points)
            throw io_error("space file: coords length mismatch");
    }
    const auto& dist = j.at("dist");
    std::string kind = dist.at("kind").get<std::string>();
    if (kind == "analytic") {
        sp.geometry = geometry_from_json(dist.at("name").get<std::string>(),
                                         dist.at("params"));
        if (dist.contains("scale")) sp.dist_scale = dist.at("scale").get<double>();
        if (sp.coords.empty())
            throw io_error("space file: analytic dist requires coords");
    } else if (kind == "dense_lower_triangular") {
        auto data = dist.at("data").get<std::vector<double>>();
        size_t need = static_cast<size_t>(sp.n_points) * (sp.n_points + 1) / 2;
        if (data.size() != need)
            throw io_error("space file: dense dist length mismatch");
        Eigen::MatrixXd D(sp.n_points, sp.n_points);
        size_t c = 0;
        for (int i = 0; i < sp.n_points; ++i)
            for (int k = 0; k <= i; ++k) {
                D(i, k) = data[c];
                D(k, i) = data[c];
                ++c;
            }
        sp.set_dense_dist(std::move(D));
    } else {
        throw io_error("space file: unknown dist kind '" + kind + "'");
    }
    if (j.contains("boundary")) {
        auto b = j.at("boundary").get<std::vector<int>>();
        sp.boundary.assign(b.begin(), b.end());
    }
    if (j.contains("meta")) {
        const auto& m = j.at("meta");
        if (m.contains("mesh_h")) sp.mesh_h = m.at("mesh_h").get<double>();
        if (m.contains("id")) sp.id = m.at("id").get<std::string>();
    }
    return sp;
}

SpaceFamily build_family(const std::string& name, const nlohmann::json& params) {
    auto geti = [&](const char* k, int dflt) {
        return params.contains(k) ? params.at(k).get<int>() : dflt;
    };
    auto getd = [&](const char* k, double dflt) {
        return params.contains(k) ? params.at(k).get<double>() : dflt;
    };
    SpaceFamily fam;
    if (name == "static") {
        const auto& sj = params.at("space");
        DiscreteMMSpace sp = build_space(sj.at("kind").get<std::string>(),
                                         sj.contains("params") ? sj.at("params")
                                                               : nlohmann::json::object());
        fam = make_static_family(std::move(sp), getd("t_lo", 0.0), getd("t_hi", 1.0));
    } else if (name == "shrinking_sphere") {
        fam = make_shrinking_sphere(geti("res", 32), getd("radius", 1.0));
    } else if (name == "shrinking_suspension") {
        fam = make_shrinking_suspension(geti("n_s", 48), geti("n_theta", 48),
                                        getd("base_length", kPi));
    } else if (name == "gaussian_flow") {
        fam = make_gaussian_flow(geti("res", 512), getd("half_width", 6.0),
                                 getd("A0", 1.0), getd("Adot", 0.0), getd("a", 1.0));
    } else if (name == "shrinking_gaussian") {
        fam = make_shrinking_gaussian(geti("res", 512), getd("half_width", 6.0));
    } else if (name == "weight_jump") {
        // Test fixture: weights jump by a factor at jump_t. Violates any
        // finite log-Lipschitz bound in measure; the flows suite must
        // catch it.
        DiscreteMMSpace sp = make_flat_torus(geti("res", 16));
        double jump_t = getd("jump_t", 0.5);
        double factor = getd("factor", 2.718281828459045);
        fam = make_static_family(sp, 0.0, 1.0);
        DiscreteMMSpace base = fam.base;
        fam.model.reset();
        fam.generator = [base, jump_t, factor](double t) {
            DiscreteMMSpace s = base;
            if (t >= jump_t)
                for (double& w : s.weights) w *= factor;
            return s;
        };
        fam.declared_Cd = 0.0;
        fam.declared_Cm = 1.0;
        fam.id = "weight_jump";
    } else {
        throw io_error("build_family: unknown generator '" + name + "'");
    }
    fam.gen_name = name;
    fam.gen_params = params.dump();
    return fam;
}

nlohmann::json family_to_json(const SpaceFamily& family) {
    if (family.gen_name.empty())
        throw io_error("family_to_json: family has no named generator");
    nlohmann::json j;
    j["kind"] = "family";
    j["interval"] = {family.t_lo, family.t_hi};
    j["generator"] = {{"name", family.gen_name},
                      {"params", nlohmann::json::parse(family.gen_params)}};
    return j;
}

SpaceFamily family_from_json(const nlohmann::json& j) {
    if (!is_family_json(j)) throw io_error("family_from_json: not a family file");
    const auto& g = j.at("generator");
    SpaceFamily fam = build_family(
        g.at("name").get<std::string>(),
        g.contains("params") ? g.at("params") : nlohmann::json::object());
    if (j.contains("interval")) {
        fam.t_lo = j.at("interval").at(0).get<double>();
        fam.t_hi = j.at("interval").at(1).get<double>();
    }
    return fam;
}

bool is_family_json(const nlohmann::json& j) {
    return j.is_object() && j.contains("kind") && j.at("kind") == "family";
}

void save_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open for writing: " + path);
    f << j.dump(2) << "\n";
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open: " + path);
    return nlohmann::json::parse(f);
}

DiscreteMMSpace load_space(const std::string& path) {
    return space_from_json(load_json(path));
}

SpaceFamily load_family(const std::string& path) {
    return family_from_json(load_json(path));
}

} // namespace rfl
