#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace kdr {

struct CriterionResult {
    int number = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    bool all_passed() const;
};

// Runs the full acceptance suite, printing one pass/fail line per
// criterion to `log`. Fixed seeds make the run reproducible.
AcceptanceReport run_acceptance(std::ostream& log, int threads = 1);

} // namespace kdr
