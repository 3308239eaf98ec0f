#pragma once

#include <string>

#include <nlohmann/json_fwd.hpp>

#include "rfl/mmspace.hpp"

namespace rfl {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

nlohmann::json space_to_json(const DiscreteMMSpace& space);
DiscreteMMSpace space_from_json(const nlohmann::json& j);

/// Family files carry a named generator; rebuildable catalog entries only.
nlohmann::json family_to_json(const SpaceFamily& family);
SpaceFamily family_from_json(const nlohmann::json& j);

/// Catalog family constructor used by family files and the CLI.
SpaceFamily build_family(const std::string& name, const nlohmann::json& params);

bool is_family_json(const nlohmann::json& j);

void save_json(const nlohmann::json& j, const std::string& path);
nlohmann::json load_json(const std::string& path);

DiscreteMMSpace load_space(const std::string& path);
SpaceFamily load_family(const std::string& path);

} // namespace rfl
