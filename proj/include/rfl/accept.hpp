#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace rfl::accept {

/// One line of the machine-readable verification report.
struct CheckRecord {
    std::string check_id;
    double expected = 0.0;
    double got = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string note;
};

struct CriterionResult {
    int id = 0;
    std::string name;
    std::vector<CheckRecord> checks;
    double seconds = 0.0;
    bool pass() const;
};

std::vector<int> criterion_ids();
std::string criterion_name(int id);

/// Run one acceptance criterion. tier is "fast" or "full".
CriterionResult run_criterion(int id, const std::string& tier = "fast");

nlohmann::json report_json(const std::vector<CriterionResult>& results);

} // namespace rfl::accept
