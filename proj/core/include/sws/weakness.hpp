#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "sws/corpus.hpp"

namespace sws::weakness {

// Which problems the model never learned, grouped into per-category rates.
struct FailureReport {
    std::set<std::string> failed_ids;
    std::map<std::string, double> per_category_failure_rate;
    std::map<std::string, std::size_t> per_category_traced;
    std::map<std::string, std::size_t> per_category_failures;
    // Categories present in the dataset but with no traced problems; they get
    // rate 0 and are surfaced so callers can tell "no data" from "no failures".
    std::vector<std::string> untraced_categories;
    std::size_t total_problems = 0;
    std::size_t total_failures = 0;
};

// Synthesis budget split across categories in proportion to failure rates.
struct AllocationPlan {
    std::size_t total_budget = 0;
    std::map<std::string, std::size_t> per_category;
    std::map<std::string, double> weights;
};

// Ordinary-least-squares slope of accuracy against epoch index 1..T.
// A single-epoch trace has no trend and returns 0.
double trace_slope(const corpus::AccuracyTrace& trace);

// True iff the model never hit 50% accuracy in any epoch AND the accuracy
// trend is strictly decreasing. Both conjuncts are strict.
bool is_failure(const corpus::AccuracyTrace& trace);

FailureReport build_failure_report(const std::vector<corpus::AccuracyTrace>& traces,
                                   const corpus::ProblemSet& problems);

// Failure-rate-proportional apportionment with largest-remainder rounding,
// so counts always sum exactly to the budget. Tie-break: larger fractional
// part first, then lexicographic category name. `min_per_category` is a
// floor applied to every reported category before the proportional split.
AllocationPlan allocate_budget(const FailureReport& report, std::size_t total_budget,
                               std::size_t min_per_category = 0);

// Same apportionment over explicit weights; shared by allocation and the
// post-filter quota adjustment.
std::map<std::string, std::size_t> apportion(const std::map<std::string, double>& weights,
                                             std::size_t total);

std::string report_to_json(const FailureReport& report);
FailureReport report_from_json_file(const std::string& path);
std::string plan_to_json(const AllocationPlan& plan);
AllocationPlan plan_from_json_file(const std::string& path);

}  // namespace sws::weakness
