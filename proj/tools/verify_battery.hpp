#pragma once

#include <string>
#include <vector>

namespace spinlab::verify {

enum class Level { Fast, Full };

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double measured = 0.0; // headline scalar for the criterion
    std::string detail;
    double seconds = 0.0;
};

/// Release-gate battery.  Fast runs the cheap exactness checks (< 60 s);
/// Full runs everything, including the large enumeration sweeps and the
/// byte-determinism check, which re-invokes the driver at `cli_path`.
/// All tolerances are pinned inside; results are deterministic.
std::vector<CriterionResult> run_battery(Level level, const std::string& cli_path);

bool all_pass(const std::vector<CriterionResult>& rs);

} // namespace spinlab::verify
