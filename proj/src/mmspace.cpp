#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"
#include "rfl/mmspace.hpp"

namespace rfl {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

// ---------------------------------------------------------------------------
// DiscreteMMSpace

double DiscreteMMSpace::dist(int i, int j) const {
    if (i == j) return 0.0;
    if (has_dense_dist()) return dist_scale * dense_dist_(i, j);
    if (geometry) return dist_scale * geometry->distance(coords[i], coords[j]);
    throw std::logic_error("DiscreteMMSpace::dist: no distance source");
}

void DiscreteMMSpace::set_dense_dist(Eigen::MatrixXd d) {
    if (d.rows() != n_points || d.cols() != n_points)
        throw std::invalid_argument("set_dense_dist: size mismatch");
    dense_dist_ = std::move(d);
}

void DiscreteMMSpace::build_dense_dist() {
    if (!geometry) throw std::logic_error("build_dense_dist: no geometry");
    if (n_points > 6000)
        throw std::logic_error("build_dense_dist: space too large for a dense matrix");
    dense_dist_.resize(n_points, n_points);
    for (int i = 0; i < n_points; ++i) {
        dense_dist_(i, i) = 0.0;
        for (int j = 0; j < i; ++j) {
            double d = geometry->distance(coords[i], coords[j]);
            dense_dist_(i, j) = d;
            dense_dist_(j, i) = d;
        }
    }
}

double DiscreteMMSpace::total_mass() const {
    double s = 0.0;
    for (double w : weights) s += w;
    return s;
}

// ---------------------------------------------------------------------------
// Generators

DiscreteMMSpace make_flat_torus(int res, double side) {
    if (res < 2) throw std::invalid_argument("flat_torus: res must be >= 2");
    if (!(side > 0)) throw std::invalid_argument("flat_torus: side must be positive");
    DiscreteMMSpace sp;
    sp.dim = 2;
    sp.n_points = res * res;
    double h = side / res;
    sp.mesh_h = h;
    sp.geometry = std::make_shared<TorusGeometry>(2, side, side);
    sp.coords.resize(sp.n_points);
    sp.weights.assign(sp.n_points, h * h);
    for (int i = 0; i < res; ++i)
        for (int j = 0; j < res; ++j) {
            ChartPoint p;
            p.v = Vec3((i + 0.5) * h, (j + 0.5) * h, 0);
            sp.coords[i * res + j] = p;
        }
    // The grid is translation-homogeneous: a single orbit.
    OrbitSymmetry sym;
    sym.rep = {0};
    sym.mass = {sp.total_mass()};
    sp.symmetry = sym;
    sp.id = "flat_torus[res=" + std::to_string(res) + "]";
    return sp;
}

DiscreteMMSpace make_weighted_circle(int res, double circumference,
                                     std::function<double(double)> density) {
    if (res < 2) throw std::invalid_argument("weighted_circle: res must be >= 2");
    if (!(circumference > 0))
        throw std::invalid_argument("weighted_circle: circumference must be positive");
    DiscreteMMSpace sp;
    sp.dim = 1;
    sp.n_points = res;
    double h = circumference / res;
    sp.mesh_h = h;
    std::function<double(double)> rho =
        density ? density : [](double) { return 1.0; };
    auto rho_dd = [rho](double x) {
        const double e = 1e-4;
        return (rho(x + e) - 2 * rho(x) + rho(x - e)) / (e * e);
    };
    sp.geometry = std::make_shared<TorusGeometry>(1, circumference, 0.0, rho, rho_dd);
    sp.coords.resize(res);
    sp.weights.resize(res);
    for (int i = 0; i < res; ++i) {
        ChartPoint p;
        p.v = Vec3(i * h, 0, 0);
        sp.coords[i] = p;
        sp.weights[i] = rho(i * h) * h;
    }
    // Reflection x -> -x is an isometry when the density is even.
    bool even = true;
    for (int i = 1; i < res && even; ++i)
        even = std::fabs(sp.weights[i] - sp.weights[res - i]) <
               1e-12 * (1 + sp.weights[i]);
    if (even) {
        OrbitSymmetry sym;
        for (int i = 0; i <= res / 2; ++i) {
            bool self = (i == 0) || (2 * i == res);
            sym.rep.push_back(i);
            sym.mass.push_back(self ? sp.weights[i] : 2 * sp.weights[i]);
        }
        sp.symmetry = sym;
    }
    sp.id = "weighted_circle[res=" + std::to_string(res) + "]";
    return sp;
}

DiscreteMMSpace make_sphere(int n_lat, double radius) {
    if (n_lat < 2) throw std::invalid_argument("sphere: res must be >= 2");
    if (!(radius > 0)) throw std::invalid_argument("sphere: radius must be positive");
    int n_lon = 2 * n_lat;
    DiscreteMMSpace sp;
    sp.dim = 2;
    sp.n_points = n_lat * n_lon;
    sp.mesh_h = kPi * radius / n_lat;
    sp.geometry = std::make_shared<SphereGeometry>(radius);
    sp.coords.resize(sp.n_points);
    sp.weights.resize(sp.n_points);
    double dphi = 2 * kPi / n_lon;
    OrbitSymmetry sym;
    for (int j = 0; j < n_lat; ++j) {
        double th_lo = j * kPi / n_lat, th_hi = (j + 1) * kPi / n_lat;
        double th = 0.5 * (th_lo + th_hi);
        double cell = radius * radius * (std::cos(th_lo) - std::cos(th_hi)) * dphi;
        for (int k = 0; k < n_lon; ++k) {
            double ph = k * dphi;
            ChartPoint p;
            p.v = Vec3(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                       std::cos(th));
            sp.coords[j * n_lon + k] = p;
            sp.weights[j * n_lon + k] = cell;
        }
        // Rotations about the axis and the equatorial reflection are exact
        // grid symmetries: one orbit per band pair.
        if (j < n_lat - 1 - j) {
            sym.rep.push_back(j * n_lon);
            sym.mass.push_back(2 * cell * n_lon);
        } else if (j == n_lat - 1 - j) {
            sym.rep.push_back(j * n_lon);
            sym.mass.push_back(cell * n_lon);
        }
    }
    sp.symmetry = sym;
    sp.id = "sphere[res=" + std::to_string(n_lat) + ",R=" + std::to_string(radius) + "]";
    return sp;
}

DiscreteMMSpace make_disk(int n_r, int n_phi, double radius, int copies) {
    if (n_r < 2 || n_phi < 3) throw std::invalid_argument("disk: resolution too low");
    if (!(radius > 0)) throw std::invalid_argument("disk: radius must be positive");
    if (copies < 1) throw std::invalid_argument("disk: copies must be >= 1");
    DiscreteMMSpace sp;
    sp.dim = 2;
    double dr = radius / (n_r + 0.5);
    double dphi = 2 * kPi / n_phi;
    sp.mesh_h = std::max(dr, radius * dphi);
    sp.geometry = std::make_shared<DiskGeometry>(radius, copies);
    int per_copy = 1 + n_r * n_phi;
    sp.n_points = copies * per_copy;
    sp.coords.resize(sp.n_points);
    sp.weights.resize(sp.n_points);
    sp.boundary.assign(sp.n_points, 0);
    double center_area = kPi * (dr / 2) * (dr / 2);
    for (int c = 0; c < copies; ++c) {
        int base = c * per_copy;
        ChartPoint ctr;
        ctr.label = c;
        ctr.v = Vec3::Zero();
        sp.coords[base] = ctr;
        sp.weights[base] = center_area;
        for (int i = 0; i < n_r; ++i) {
            double r = dr * (i + 1);
            double e_lo = dr * (i + 0.5), e_hi = dr * (i + 1.5);
            double cell = 0.5 * (e_hi * e_hi - e_lo * e_lo) * dphi;
            for (int k = 0; k < n_phi; ++k) {
                double ph = k * dphi;
                int idx = base + 1 + i * n_phi + k;
                ChartPoint p;
                p.label = c;
                p.v = Vec3(r * std::cos(ph), r * std::sin(ph), 0);
                sp.coords[idx] = p;
                sp.weights[idx] = cell;
                if (i == n_r - 1) sp.boundary[idx] = 1;
            }
        }
    }
    // Common rotations and copy swaps: one orbit per ring plus the centers.
    OrbitSymmetry sym;
    sym.rep.push_back(0);
    sym.mass.push_back(copies * center_area);
    for (int i = 0; i < n_r; ++i) {
        sym.rep.push_back(1 + i * n_phi);
        sym.mass.push_back(copies * n_phi * sp.weights[1 + i * n_phi]);
    }
    sp.symmetry = sym;
    sp.id = "disk[n_r=" + std::to_string(n_r) + ",copies=" + std::to_string(copies) + "]";
    return sp;
}

DiscreteMMSpace make_cone2d(int n_r, int n_phi, double alpha, double outer_radius) {
    if (n_r < 2 || n_phi < 3) throw std::invalid_argument("cone2d: resolution too low");
    if (!(alpha > 0) || !(alpha < 2 * kPi))
        throw std::invalid_argument("cone2d: defect must lie in (0, 2 pi)");
    DiscreteMMSpace sp;
    sp.dim = 2;
    double beta = 2 * kPi - alpha;
    double dr = outer_radius / (n_r + 0.5);
    double dphi = beta / n_phi;
    sp.mesh_h = std::max(dr, outer_radius * dphi);
    sp.geometry = std::make_shared<ConeGeometry>(alpha, outer_radius);
    sp.n_points = 1 + n_r * n_phi;
    sp.coords.resize(sp.n_points);
    sp.weights.resize(sp.n_points);
    sp.boundary.assign(sp.n_points, 0);
    ChartPoint apex;
    apex.v = Vec3::Zero();
    sp.coords[0] = apex;
    sp.weights[0] = 0.5 * beta * (dr / 2) * (dr / 2);
    for (int i = 0; i < n_r; ++i) {
        double r = dr * (i + 1);
        double e_lo = dr * (i + 0.5), e_hi = dr * (i + 1.5);
        double cell = 0.5 * (e_hi * e_hi - e_lo * e_lo) * dphi;
        for (int k = 0; k < n_phi; ++k) {
            int idx = 1 + i * n_phi + k;
            ChartPoint p;
            p.v = Vec3(r, (k + 0.5) * dphi, 0);
            sp.coords[idx] = p;
            sp.weights[idx] = cell;
            if (i == n_r - 1) sp.boundary[idx] = 1;
        }
    }
    OrbitSymmetry sym;
    sym.rep.push_back(0);
    sym.mass.push_back(sp.weights[0]);
    for (int i = 0; i < n_r; ++i) {
        sym.rep.push_back(1 + i * n_phi);
        sym.mass.push_back(n_phi * sp.weights[1 + i * n_phi]);
    }
    sp.symmetry = sym;
    sp.id = "cone2d[alpha=" + std::to_string(alpha) + ",n_r=" + std::to_string(n_r) + "]";
    return sp;
}

DiscreteMMSpace make_gaussian_line(int res, double half_width, double A,
                                   double a, double b, double c) {
    if (res < 2) throw std::invalid_argument("euclidean_gaussian: res must be >= 2");
    if (!(half_width > 0) || !(A > 0))
        throw std::invalid_argument("euclidean_gaussian: bad params");
    DiscreteMMSpace sp;
    sp.dim = 1;
    sp.n_points = res;
    double h = 2 * half_width / res;
    sp.mesh_h = std::sqrt(A) * h;
    auto geom = std::make_shared<GaussianLineGeometry>(A, a, b, c);
    sp.geometry = geom;
    sp.coords.resize(res);
    sp.weights.resize(res);
    sp.boundary.assign(res, 0);
    for (int i = 0; i < res; ++i) {
        double x = -half_width + (i + 0.5) * h;
        ChartPoint p;
        p.v = Vec3(x, 0, 0);
        sp.coords[i] = p;
        sp.weights[i] = geom->weight(x) * h;
    }
    sp.boundary[0] = sp.boundary[res - 1] = 1;
    if (b == 0.0) {
        OrbitSymmetry sym;
        for (int i = 0; i < (res + 1) / 2; ++i) {
            bool self = (res - 1 - i == i);
            sym.rep.push_back(i);
            sym.mass.push_back(self ? sp.weights[i] : 2 * sp.weights[i]);
        }
        sp.symmetry = sym;
    }
    sp.id = "euclidean_gaussian[res=" + std::to_string(res) + "]";
    return sp;
}

DiscreteMMSpace make_circle_suspension(int n_s, int n_theta, double L) {
    if (n_s < 2 || n_theta < 3)
        throw std::invalid_argument("suspension: resolution too low");
    if (!(L > 0)) throw std::invalid_argument("suspension: base length must be positive");
    DiscreteMMSpace sp;
    sp.dim = 2;
    double h = kPi / n_s;
    double dth = L / n_theta;
    sp.mesh_h = std::max(h, dth);
    sp.geometry = std::make_shared<SuspensionGeometry>(L);
    sp.n_points = 2 + (n_s - 1) * n_theta;
    sp.coords.resize(sp.n_points);
    sp.weights.resize(sp.n_points);
    ChartPoint p0, p1;
    p0.v = Vec3(0, 0, 0);
    p1.v = Vec3(kPi, 0, 0);
    sp.coords[0] = p0;
    sp.coords[sp.n_points - 1] = p1;
    double pole_mass = (1 - std::cos(h / 2)) * L;
    sp.weights[0] = pole_mass;
    sp.weights[sp.n_points - 1] = pole_mass;
    for (int j = 1; j < n_s; ++j) {
        double s = j * h;
        double cell = (std::cos(s - h / 2) - std::cos(s + h / 2)) * dth;
        for (int k = 0; k < n_theta; ++k) {
            int idx = 1 + (j - 1) * n_theta + k;
            ChartPoint p;
            p.v = Vec3(s, k * dth, 0);
            sp.coords[idx] = p;
            sp.weights[idx] = cell;
        }
    }
    // Rotation in theta and the reflection s -> pi - s are grid isometries.
    OrbitSymmetry sym;
    sym.rep.push_back(0);
    sym.mass.push_back(2 * pole_mass);
    for (int j = 1; j <= n_s / 2; ++j) {
        int idx = 1 + (j - 1) * n_theta;
        bool self = (n_s - j == j);
        sym.rep.push_back(idx);
        sym.mass.push_back((self ? 1 : 2) * n_theta * sp.weights[idx]);
    }
    sp.symmetry = sym;
    sp.id = "suspension[L=" + std::to_string(L) + ",n_s=" + std::to_string(n_s) + "]";
    return sp;
}

DiscreteMMSpace make_cube_surface(int res_per_face, double edge) {
    if (res_per_face < 2)
        throw std::invalid_argument("polytope_surface: res must be >= 2");
    if (!(edge > 0)) throw std::invalid_argument("polytope_surface: edge must be positive");
    DiscreteMMSpace sp;
    sp.dim = 2;
    int R = res_per_face;
    double h = edge / R;
    sp.mesh_h = h;
    sp.geometry = std::make_shared<CubeSurfaceGeometry>(edge);
    sp.n_points = 6 * R * R;
    sp.coords.resize(sp.n_points);
    sp.weights.assign(sp.n_points, h * h);
    for (int f = 0; f < 6; ++f)
        for (int i = 0; i < R; ++i)
            for (int j = 0; j < R; ++j) {
                ChartPoint p;
                p.label = f;
                p.v = Vec3((i + 0.5) * h, (j + 0.5) * h, 0);
                sp.coords[(f * R + i) * R + j] = p;
            }
    // Full cube symmetry: orbits are D4 classes of in-face grid positions,
    // shared across the six faces.
    std::map<std::pair<int, int>, int> count;
    auto canon = [R](int i, int j) {
        std::pair<int, int> best(i, j);
        int xs[2] = {i, R - 1 - i}, ys[2] = {j, R - 1 - j};
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                best = std::min(best, {xs[a], ys[b]});
                best = std::min(best, {ys[b], xs[a]});
            }
        return best;
    };
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < R; ++j) count[canon(i, j)]++;
    OrbitSymmetry sym;
    for (auto& [key, n] : count) {
        sym.rep.push_back(key.first * R + key.second); // face 0 atom
        sym.mass.push_back(6.0 * n * h * h);
    }
    sp.symmetry = sym;
    sp.id = "cube[res=" + std::to_string(R) + ",edge=" + std::to_string(edge) + "]";
    return sp;
}

DiscreteMMSpace build_space(const std::string& kind, const nlohmann::json& params) {
    auto geti = [&](const char* k, int dflt) {
        return params.contains(k) ? params.at(k).get<int>() : dflt;
    };
    auto getd = [&](const char* k, double dflt) {
        return params.contains(k) ? params.at(k).get<double>() : dflt;
    };
    if (kind == "flat_torus")
        return make_flat_torus(geti("res", 32), getd("side", 1.0));
    if (kind == "weighted_circle") {
        double L = getd("circumference", 2 * kPi);
        double amp = getd("cos_amplitude", 0.0);
        std::function<double(double)> rho;
        if (amp != 0.0)
            rho = [L, amp](double x) { return 1.0 + amp * std::cos(2 * kPi * x / L); };
        return make_weighted_circle(geti("res", 256), L, rho);
    }
    if (kind == "sphere") return make_sphere(geti("res", 32), getd("radius", 1.0));
    if (kind == "disk" || kind == "glued_domain")
        return make_disk(geti("n_r", 40), geti("n_phi", 96), getd("radius", 1.0),
                         geti("copies", kind == "disk" ? 1 : 2));
    if (kind == "cone2d") {
        double alpha = getd("alpha", kPi / 2);
        if (!(alpha > 0) || alpha > kPi)
            throw std::invalid_argument("cone2d: defect must lie in (0, pi]");
        return make_cone2d(geti("n_r", 40), geti("n_phi", 96), alpha,
                           getd("outer_radius", 1.0));
    }
    if (kind == "euclidean_gaussian") {
        double A = getd("A", 1.0);
        if (!(A > 0)) throw std::invalid_argument("euclidean_gaussian: A must be > 0");
        return make_gaussian_line(geti("res", 512), getd("half_width", 6.0), A,
                                  getd("a", 1.0), getd("b", 0.0), getd("c", 0.0));
    }
    if (kind == "suspension") {
        double L = getd("base_length", kPi);
        if (L > 2 * kPi + 1e-12)
            throw std::invalid_argument(
                "suspension: base diameter exceeds pi (L > 2 pi)");
        return make_circle_suspension(geti("n_s", 48), geti("n_theta", 48), L);
    }
    if (kind == "polytope_surface" || kind == "cube")
        return make_cube_surface(geti("res", 24), getd("edge", 1.0));
    throw std::invalid_argument("build_space: unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Families

DiscreteMMSpace SpaceFamily::at(double t) const {
    if (!contains(t))
        throw std::domain_error("SpaceFamily::at: t outside interval");
    return generator(t);
}

namespace {
SpaceFamily model_family(DiscreteMMSpace base, FlowModel model, double t_lo,
                         double t_hi, std::string id) {
    SpaceFamily fam;
    fam.t_lo = t_lo;
    fam.t_hi = t_hi;
    fam.base = base;
    fam.model = model;
    fam.id = std::move(id);
    fam.generator = [base, model](double t) {
        DiscreteMMSpace s = base;
        double c = model.metric_scale(t);
        s.dist_scale = base.dist_scale * c;
        double ratio = 1.0;
        for (int i = 0; i < s.n_points; ++i) {
            s.weights[i] = model.weight_at(t, i);
            if (i == 0 && base.weights[0] > 0)
                ratio = s.weights[0] / base.weights[0];
        }
        if (s.symmetry && model.weights_static_shape)
            for (double& m : s.symmetry->mass) m *= ratio;
        s.density_scale = base.density_scale * ratio / std::pow(c, s.dim);
        return s;
    };
    return fam;
}
} // namespace

SpaceFamily make_static_family(DiscreteMMSpace space, double t_lo, double t_hi) {
    FlowModel model;
    model.metric_scale = [](double) { return 1.0; };
    std::vector<double> w = space.weights;
    model.weight_at = [w](double, int i) { return w[i]; };
    GeometryPtr geom = space.geometry;
    model.rfex_integrand = [geom](double, const ChartPoint& x, const TangentVec& v) {
        if (!geom) throw geometry_error("rfex: no geometry");
        if (auto* gl = dynamic_cast<const GaussianLineGeometry*>(geom.get()))
            return gl->quad_a() / gl->metric_A(); // Hess f on a flat line
        return geom->ricci(x, v);
    };
    model.riemann_bound_t = [geom](double) {
        return geom ? geom->riemann_bound() : 0.0;
    };
    std::string id = space.id + "|static";
    SpaceFamily fam = model_family(std::move(space), model, t_lo, t_hi, id);
    fam.declared_Cd = 0.0;
    fam.declared_Cm = 0.0;
    return fam;
}

SpaceFamily make_shrinking_sphere(int n_lat, double radius) {
    DiscreteMMSpace base = make_sphere(n_lat, radius);
    double R2 = radius * radius;
    FlowModel model;
    // g_t = (1 - 2(n-1)t/R^2 ... ) : for n = 2 the round flow is
    // g_t = (1 - 2t/R^2) g, distances scale by sqrt.
    auto c2 = [R2](double t) { return 1.0 - 2.0 * t / R2; };
    model.metric_scale = [c2](double t) { return std::sqrt(c2(t)); };
    std::vector<double> w = base.weights;
    model.weight_at = [w, c2](double t, int i) { return c2(t) * w[i]; };
    model.rfex_integrand = [R2, c2](double t, const ChartPoint&, const TangentVec&) {
        double ric = 1.0 / (R2 * c2(t));          // Ric_{g_t}(v,v), g_t-unit v
        double half_dtg = -1.0 / (R2 * c2(t));    // 0.5 * dt g_t(v,v)
        return ric + half_dtg;                    // zero along the round flow
    };
    model.riemann_bound_t = [R2, c2](double t) { return 1.0 / (R2 * c2(t)); };
    double t_hi = 0.45 * R2;
    return model_family(std::move(base), model, 0.0, t_hi,
                        "shrinking_sphere[res=" + std::to_string(n_lat) + "]");
}

SpaceFamily make_shrinking_suspension(int n_s, int n_theta, double L) {
    DiscreteMMSpace base = make_circle_suspension(n_s, n_theta, L);
    FlowModel model;
    auto c2 = [](double t) { return 1.0 - 2.0 * t; };
    model.metric_scale = [c2](double t) { return std::sqrt(c2(t)); };
    std::vector<double> w = base.weights;
    model.weight_at = [w, c2](double t, int i) { return c2(t) * w[i]; };
    GeometryPtr geom = base.geometry;
    model.rfex_integrand = [c2, geom](double t, const ChartPoint& x,
                                      const TangentVec&) {
        if (geom->singular(x)) throw geometry_error("rfex: singular pole");
        double ric = 1.0 / c2(t);       // locally the round unit sphere
        double half_dtg = -1.0 / c2(t); // linear shrinking
        return ric + half_dtg;
    };
    model.riemann_bound_t = [c2](double t) { return 1.0 / c2(t); };
    return model_family(std::move(base), model, 0.0, 0.45,
                        "shrinking_suspension[L=" + std::to_string(L) + "]");
}

SpaceFamily make_gaussian_flow(int res, double half_width, double A0,
                               double Adot, double a) {
    DiscreteMMSpace base = make_gaussian_line(res, half_width, A0, a, 0.0, 0.0);
    FlowModel model;
    auto At = [A0, Adot](double t) { return A0 + Adot * t; };
    model.metric_scale = [At, A0](double t) { return std::sqrt(At(t) / A0); };
    std::vector<double> w = base.weights;
    model.weight_at = [w](double, int i) { return w[i]; };
    model.rfex_integrand = [At, Adot, a](double t, const ChartPoint&,
                                         const TangentVec&) {
        return (a + 0.5 * Adot) / At(t);
    };
    model.riemann_bound_t = [](double) { return 0.0; };
    double t_hi = Adot < 0 ? 0.5 * A0 / (-Adot) : 1.0;
    return model_family(std::move(base), model, 0.0, t_hi,
                        "gaussian_flow[A0=" + std::to_string(A0) +
                            ",Adot=" + std::to_string(Adot) +
                            ",a=" + std::to_string(a) + "]");
}

SpaceFamily make_shrinking_gaussian(int res, double half_width) {
    SpaceFamily fam = make_gaussian_flow(res, half_width, 1.0, -2.0, 1.0);
    fam.id = "shrinking_gaussian[res=" + std::to_string(res) + "]";
    return fam;
}

// ---------------------------------------------------------------------------
// Operations

bool ValidationReport::all_pass() const {
    for (const auto& i : issues)
        if (!i.pass) return false;
    return true;
}

ValidationReport validate_space(const DiscreteMMSpace& space, uint64_t seed) {
    ValidationReport rep;
    std::mt19937_64 rng(seed);
    int n = space.n_points;
    std::uniform_int_distribution<int> pick(0, std::max(0, n - 1));

    ValidationIssue diag{"diagonal_zero", true, 0.0, {}};
    ValidationIssue symm{"symmetry", true, 0.0, {}};
    if (space.has_dense_dist()) {
        const auto& D = space.dense_dist();
        for (int i = 0; i < n; ++i) {
            if (std::fabs(D(i, i)) > diag.worst) {
                diag.worst = std::fabs(D(i, i));
                diag.witness = {i};
            }
            for (int j = 0; j < i; ++j) {
                double v = std::fabs(D(i, j) - D(j, i));
                if (v > symm.worst) {
                    symm.worst = v;
                    symm.witness = {i, j};
                }
            }
        }
        diag.pass = diag.worst <= 1e-12;
        symm.pass = symm.worst <= 1e-9;
    }
    rep.issues.push_back(diag);
    rep.issues.push_back(symm);

    ValidationIssue tri{"triangle_inequality", true, 0.0, {}};
    auto check_triple = [&](int i, int j, int k) {
        double v = space.dist(i, j) - space.dist(i, k) - space.dist(k, j);
        if (v > tri.worst) {
            tri.worst = v;
            tri.witness = {i, j, k};
        }
    };
    if (n < 200) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j)
                for (int k = 0; k < n; ++k)
                    if (k != i && k != j) check_triple(i, j, k);
    } else {
        for (int t = 0; t < 100000; ++t)
            check_triple(pick(rng), pick(rng), pick(rng));
    }
    double scale = space.mesh_h > 0 ? space.mesh_h : 1.0;
    tri.pass = tri.worst <= 1e-9 * scale;
    rep.issues.push_back(tri);

    ValidationIssue mass{"total_mass_positive", true, space.total_mass(), {}};
    mass.pass = std::isfinite(mass.worst) && mass.worst > 0;
    rep.issues.push_back(mass);

    ValidationIssue wnn{"weights_nonnegative", true, 0.0, {}};
    for (int i = 0; i < n; ++i)
        if (space.weights[i] < wnn.worst) {
            wnn.worst = space.weights[i];
            wnn.witness = {i};
        }
    wnn.pass = wnn.worst >= 0;
    rep.issues.push_back(wnn);

    if (space.geometry && space.has_dense_dist() && !space.coords.empty()) {
        ValidationIssue geo{"geometry_consistency", true, 0.0, {}};
        for (int t = 0; t < 1000; ++t) {
            int i = pick(rng), j = pick(rng);
            double a = space.dense_dist()(i, j);
            double b = space.geometry->distance(space.coords[i], space.coords[j]);
            double rel = std::fabs(a - b) / (1e-30 + std::max(a, b));
            if (rel > geo.worst) {
                geo.worst = rel;
                geo.witness = {i, j};
            }
        }
        geo.pass = geo.worst <= 1e-10;
        rep.issues.push_back(geo);
    }

    if (space.symmetry) {
        ValidationIssue orb{"orbit_mass_total", true, 0.0, {}};
        double s = 0.0;
        for (double m : space.symmetry->mass) s += m;
        orb.worst = std::fabs(s - space.total_mass()) / space.total_mass();
        orb.pass = orb.worst <= 1e-10;
        rep.issues.push_back(orb);
    }
    return rep;
}

DiscreteMMSpace scale_space(const DiscreteMMSpace& space, double lambda_d,
                            double lambda_m) {
    if (!(lambda_d > 0) || !(lambda_m > 0))
        throw std::invalid_argument("scale_space: factors must be positive");
    DiscreteMMSpace s = space;
    s.dist_scale *= lambda_d;
    s.mesh_h *= lambda_d;
    for (double& w : s.weights) w *= lambda_m;
    if (s.symmetry)
        for (double& m : s.symmetry->mass) m *= lambda_m;
    s.density_scale *= lambda_m / std::pow(lambda_d, s.dim);
    return s;
}

DiscreteMMSpace family_at(const SpaceFamily& family, double t) {
    return family.at(t);
}

int nearest_atom(const DiscreteMMSpace& space, const ChartPoint& p) {
    if (!space.geometry) throw std::logic_error("nearest_atom: no geometry");
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int i = 0; i < space.n_points; ++i) {
        double d = space.geometry->distance(p, space.coords[i]);
        if (d < bd) {
            bd = d;
            best = i;
        }
    }
    return best;
}

ExpResult exp_map(const DiscreteMMSpace& space, int x, const TangentVec& z,
                  double r) {
    if (!space.geometry || !space.geometry->has_exp())
        throw geometry_error("exp_map: geometry without exponential map");
    const ChartPoint& base = space.coords.at(x);
    if (space.geometry->singular(base))
        throw geometry_error("exp_map: singular base point");
    double delta = space.dist_scale * space.geometry->injectivity_proxy(base);
    if (r < 0 || r > delta * (1 + 1e-12))
        throw std::domain_error("exp_map: r outside [0, delta_x]");
    ExpResult res;
    res.chart = space.geometry->exp(base, z, r / space.dist_scale);
    res.nearest_atom = nearest_atom(space, res.chart);
    return res;
}

std::pair<double, double> log_lipschitz_constants(
    const SpaceFamily& family, const std::vector<double>& t_grid,
    int pair_samples, uint64_t seed) {
    if (t_grid.size() < 2)
        throw std::invalid_argument("log_lipschitz_constants: need >= 2 times");
    std::vector<double> ts = t_grid;
    std::sort(ts.begin(), ts.end());
    std::mt19937_64 rng(seed);
    DiscreteMMSpace first = family.at(ts.front());
    int n = first.n_points;
    std::uniform_int_distribution<int> pick(0, n - 1);
    std::vector<std::pair<int, int>> pairs;
    for (int s = 0; s < pair_samples; ++s) {
        int i = pick(rng), j = pick(rng);
        if (i != j) pairs.emplace_back(i, j);
    }
    double Cd = 0.0, Cm = 0.0;
    DiscreteMMSpace prev = first;
    for (size_t k = 1; k < ts.size(); ++k) {
        DiscreteMMSpace cur = family.at(ts[k]);
        double dt = ts[k] - ts[k - 1];
        if (dt <= 0) throw std::invalid_argument("log_lipschitz_constants: degenerate grid");
        for (auto [i, j] : pairs) {
            double a = prev.dist(i, j), b = cur.dist(i, j);
            if (a > 0 && b > 0)
                Cd = std::max(Cd, std::fabs(std::log(b / a)) / dt);
        }
        for (int i = 0; i < n; ++i) {
            double a = prev.weights[i], b = cur.weights[i];
            if (a > 0 && b > 0)
                Cm = std::max(Cm, std::fabs(std::log(b / a)) / dt);
        }
        prev = std::move(cur);
    }
    return {Cd, Cm};
}

} // namespace rfl
