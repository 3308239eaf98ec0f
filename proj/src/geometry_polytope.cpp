#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "rfl/geometries.hpp"

namespace rfl {

namespace {

struct Frame {
    Vec3 O, eu, ev;
};

// Chart frames for the six faces of [0, E]^3.
// 0: z = 0, 1: z = E, 2: x = 0, 3: x = E, 4: y = 0, 5: y = E.
std::array<Frame, 6> face_frames(double E) {
    return {{
        {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)},
        {Vec3(0, 0, E), Vec3(1, 0, 0), Vec3(0, 1, 0)},
        {Vec3(0, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
        {Vec3(E, 0, 0), Vec3(0, 1, 0), Vec3(0, 0, 1)},
        {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)},
        {Vec3(0, E, 0), Vec3(1, 0, 0), Vec3(0, 0, 1)},
    }};
}

Vec3 corner3(const Frame& f, double E, int c) {
    double u = (c == 1 || c == 2) ? E : 0.0;
    double v = (c >= 2) ? E : 0.0;
    return f.O + u * f.eu + v * f.ev;
}

Eigen::Vector2d chart_of(const Frame& f, const Vec3& P) {
    Vec3 d = P - f.O;
    return {d.dot(f.eu), d.dot(f.ev)};
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return a.x() * b.y() - a.y() * b.x();
}

} // namespace

CubeSurfaceGeometry::CubeSurfaceGeometry(double edge) : edge_(edge) {
    if (!(edge > 0)) throw geometry_error("polytope_surface: edge must be positive");
    build_unfoldings();
}

void CubeSurfaceGeometry::build_unfoldings() {
    const double E = edge_;
    auto frames = face_frames(E);

    // Shared corners of each adjacent face pair.
    auto shared_corners = [&](int f, int g, Vec3& A, Vec3& B) -> bool {
        std::vector<Vec3> common;
        for (int cf = 0; cf < 4; ++cf) {
            Vec3 P = corner3(frames[f], E, cf);
            for (int cg = 0; cg < 4; ++cg)
                if ((P - corner3(frames[g], E, cg)).norm() < 1e-12 * (1 + E)) {
                    common.push_back(P);
                    break;
                }
        }
        if (common.size() != 2) return false;
        A = common[0];
        B = common[1];
        return true;
    };

    unfoldings_.assign(6, std::vector<std::vector<Unfolding>>(6));

    struct State {
        int face;
        Eigen::Matrix2d rot;
        Eigen::Vector2d shift;
        std::vector<Eigen::Vector2d> ea, eb;
        std::vector<bool> visited;
    };

    const Eigen::Vector2d cen(E / 2, E / 2);

    for (int a = 0; a < 6; ++a) {
        std::vector<State> stack;
        State s0;
        s0.face = a;
        s0.rot = Eigen::Matrix2d::Identity();
        s0.shift = Eigen::Vector2d::Zero();
        s0.visited.assign(6, false);
        s0.visited[a] = true;
        stack.push_back(s0);
        while (!stack.empty()) {
            State s = std::move(stack.back());
            stack.pop_back();
            Unfolding u;
            u.rot = s.rot;
            u.shift = s.shift;
            u.edge_a = s.ea;
            u.edge_b = s.eb;
            unfoldings_[a][s.face].push_back(std::move(u));
            int depth = 0;
            for (bool v : s.visited) depth += v;
            if (depth >= 5) continue; // geodesics never need longer chains
            for (int g = 0; g < 6; ++g) {
                if (s.visited[g]) continue;
                Vec3 A3, B3;
                if (!shared_corners(s.face, g, A3, B3)) continue;
                Eigen::Vector2d A = s.rot * chart_of(frames[s.face], A3) + s.shift;
                Eigen::Vector2d B = s.rot * chart_of(frames[s.face], B3) + s.shift;
                Eigen::Vector2d ag = chart_of(frames[g], A3);
                Eigen::Vector2d bg = chart_of(frames[g], B3);
                Eigen::Vector2d dg = (bg - ag).normalized();
                Eigen::Vector2d dp = (B - A).normalized();
                double c = dg.dot(dp), sn = cross2(dg, dp);
                Eigen::Matrix2d R1;
                R1 << c, -sn, sn, c;
                // R2 = R1 composed with the reflection fixing the edge
                // direction in g's chart; exactly one of R1, R2 puts g on
                // the far side of the unfolded edge.
                Eigen::Vector2d n(-dg.y(), dg.x());
                Eigen::Matrix2d R2 = R1 * (Eigen::Matrix2d::Identity() -
                                           2.0 * n * n.transpose());
                Eigen::Vector2d cen_f = s.rot * cen + s.shift;
                double side_f = cross2(B - A, cen_f - A);
                Eigen::Matrix2d Rg;
                bool ok = false;
                for (const Eigen::Matrix2d& Rc : {R1, R2}) {
                    Eigen::Vector2d t = A - Rc * ag;
                    Eigen::Vector2d cg2 = Rc * cen + t;
                    if (cross2(B - A, cg2 - A) * side_f < 0) {
                        Rg = Rc;
                        ok = true;
                        break;
                    }
                }
                if (!ok)
                    throw geometry_error("cube unfolding: degenerate edge frame");
                State ns;
                ns.face = g;
                ns.rot = Rg;
                ns.shift = A - Rg * ag;
                ns.ea = s.ea;
                ns.eb = s.eb;
                ns.ea.push_back(A);
                ns.eb.push_back(B);
                ns.visited = s.visited;
                ns.visited[g] = true;
                stack.push_back(std::move(ns));
            }
        }
    }
}

double CubeSurfaceGeometry::distance(const ChartPoint& a,
                                     const ChartPoint& b) const {
    if (a.label < 0 || a.label > 5 || b.label < 0 || b.label > 5)
        throw geometry_error("cube distance: face label out of range");
    Eigen::Vector2d p(a.v.x(), a.v.y());
    Eigen::Vector2d q0(b.v.x(), b.v.y());
    const double tol = 1e-9 * edge_;
    double best = std::numeric_limits<double>::infinity();
    for (const Unfolding& u : unfoldings_[a.label][b.label]) {
        Eigen::Vector2d q = u.rot * q0 + u.shift;
        Eigen::Vector2d d = q - p;
        double len = d.norm();
        if (len >= best) continue;
        if (len < 1e-15) { best = 0.0; continue; }
        // The straight segment must cross each unfolded shared edge in
        // order, else it does not correspond to a surface path.
        bool valid = true;
        double t_prev = -tol;
        for (size_t i = 0; i < u.edge_a.size() && valid; ++i) {
            Eigen::Vector2d e = u.edge_b[i] - u.edge_a[i];
            double det = cross2(d, -e);
            if (std::fabs(det) < 1e-14 * len * e.norm()) { valid = false; break; }
            Eigen::Vector2d rhs = u.edge_a[i] - p;
            double t = cross2(rhs, -e) / det;
            double s = cross2(d, rhs) / det;
            double ts = tol / len, ss = tol / e.norm();
            if (t < t_prev - ts || t > 1 + ts || s < -ss || s > 1 + ss)
                valid = false;
            t_prev = t;
        }
        if (valid) best = len;
    }
    if (!std::isfinite(best))
        throw geometry_error("cube distance: no valid unfolding found");
    return best;
}

double CubeSurfaceGeometry::injectivity_proxy(const ChartPoint& x) const {
    // Nearest cube vertex is always a corner of the point's own face.
    double u = x.v.x(), v = x.v.y(), E = edge_;
    double d = std::hypot(u, v);
    d = std::min(d, std::hypot(E - u, v));
    d = std::min(d, std::hypot(u, E - v));
    d = std::min(d, std::hypot(E - u, E - v));
    return std::max(d, 1e-12);
}

Vec3 CubeSurfaceGeometry::embed(const ChartPoint& x) const {
    auto frames = face_frames(edge_);
    const Frame& f = frames[x.label];
    return f.O + x.v.x() * f.eu + x.v.y() * f.ev;
}

nlohmann::json CubeSurfaceGeometry::params_json() const {
    return {{"edge", edge_}};
}

} // namespace rfl
