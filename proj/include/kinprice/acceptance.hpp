#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace kinprice::acceptance {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

CriterionResult pareto_tail();            // 1
CriterionResult gamma_steady_state();     // 2
CriterionResult lognormal_regime();       // 3
CriterionResult boom_crash();             // 4
CriterionResult equilibrium_labels();     // 5
CriterionResult conservation_closure();   // 6
CriterionResult mc_fp_consistency();      // 7
CriterionResult lognormal_residual();     // 8

struct Criterion {
    int id;
    std::function<CriterionResult()> run;
};

const std::vector<Criterion>& criteria();

/// Runs the selected criteria (all when `ids` is empty), printing one
/// "PASS"/"FAIL" line per criterion to `out` as it completes.
std::vector<CriterionResult> run_all(std::ostream& out, const std::vector<int>& ids = {});

std::string format_line(const CriterionResult& r);

}  // namespace kinprice::acceptance
