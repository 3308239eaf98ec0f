#include "rfl/geometry.hpp"

#include <nlohmann/json.hpp>

namespace rfl {

std::string to_string(GeomKind k) {
    switch (k) {
        case GeomKind::euclidean_gaussian: return "euclidean_gaussian";
        case GeomKind::sphere: return "sphere";
        case GeomKind::flat_torus: return "flat_torus";
        case GeomKind::disk: return "disk";
        case GeomKind::cone2d: return "cone2d";
        case GeomKind::glued_domain: return "glued_domain";
        case GeomKind::suspension: return "suspension";
        case GeomKind::polytope_surface: return "polytope_surface";
    }
    return "unknown";
}

GeomKind geom_kind_from_string(const std::string& s) {
    if (s == "euclidean_gaussian") return GeomKind::euclidean_gaussian;
    if (s == "sphere") return GeomKind::sphere;
    if (s == "flat_torus") return GeomKind::flat_torus;
    if (s == "disk") return GeomKind::disk;
    if (s == "cone2d") return GeomKind::cone2d;
    if (s == "glued_domain") return GeomKind::glued_domain;
    if (s == "suspension") return GeomKind::suspension;
    if (s == "polytope_surface") return GeomKind::polytope_surface;
    throw geometry_error("unknown geometry kind: " + s);
}

} // namespace rfl
