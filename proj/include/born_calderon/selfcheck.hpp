#pragma once

#include <functional>
#include <string>
#include <vector>

namespace bc {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    /// The worst observed value of the criterion's metric.
    double measured = 0.0;
    /// The pass limit for `measured` (upper bound unless the detail says otherwise).
    double threshold = 0.0;
    std::string detail;
};

/// `full` runs every criterion at its stated coverage; `fast` runs the same
/// checks with the same tolerances on fewer samples.
enum class Suite { fast, full };

/// Throws DomainError for names other than "fast" and "full".
Suite parse_suite(const std::string& name);

/// Runs the acceptance battery in order, reporting each result as it finishes.
std::vector<CriterionResult> run_selfcheck(Suite suite,
                                           const std::function<void(const CriterionResult&)>& on_result = {});

/// One line: PASS/FAIL, id, name, measured, limit, detail.
std::string format_criterion(const CriterionResult& r);

} // namespace bc
