// Acceptance runner: one line per criterion, nonzero exit on any failure.
// Usage: acceptance [--tier fast|full] [--report FILE] [id ...]

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rfl/accept.hpp"

int main(int argc, char** argv) {
    std::string tier = "fast";
    std::string report_path;
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        std::string a = argv[i];
        if (a == "--tier" && i + 1 < argc) {
            tier = argv[++i];
        } else if (a == "--report" && i + 1 < argc) {
            report_path = argv[++i];
        } else if (!a.empty() && a[0] != '-') {
            ids.push_back(std::atoi(a.c_str()));
        } else {
            std::fprintf(stderr, "unknown argument: %s\n", a.c_str());
            return 2;
        }
    }
    if (ids.empty()) ids = rfl::accept::criterion_ids();

    std::vector<rfl::accept::CriterionResult> results;
    int failures = 0;
    for (int id : ids) {
        rfl::accept::CriterionResult r;
        try {
            r = rfl::accept::run_criterion(id, tier);
        } catch (const std::exception& ex) {
            r.id = id;
            r.name = rfl::accept::criterion_name(id);
            rfl::accept::CheckRecord c;
            c.check_id = "exception";
            c.pass = false;
            c.note = ex.what();
            r.checks.push_back(c);
        }
        bool ok = r.pass();
        std::printf("criterion %2d %-24s %s  (%.1f s)\n", r.id, r.name.c_str(),
                    ok ? "PASS" : "FAIL", r.seconds);
        if (!ok)
            for (const auto& c : r.checks)
                if (!c.pass)
                    std::printf("    %-28s got=%.6g expected=%.6g tol=%.3g  %s\n",
                                c.check_id.c_str(), c.got, c.expected,
                                c.tolerance, c.note.c_str());
        std::fflush(stdout);
        failures += ok ? 0 : 1;
        results.push_back(std::move(r));
    }
    if (!report_path.empty()) {
        std::ofstream f(report_path);
        f << rfl::accept::report_json(results).dump(2) << "\n";
    }
    return failures == 0 ? 0 : 1;
}
