#include "sws/weakness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace sws::weakness {

using corpus::ValidationError;
using nlohmann::json;

double trace_slope(const corpus::AccuracyTrace& trace) {
    const auto& a = trace.accuracies;
    const std::size_t n = a.size();
    if (n < 2) return 0.0;
    // t = 1..n
    const double t_mean = (static_cast<double>(n) + 1.0) / 2.0;
    double a_mean = 0.0;
    for (double v : a) a_mean += v;
    a_mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dt = (static_cast<double>(i) + 1.0) - t_mean;
        num += dt * (a[i] - a_mean);
        den += dt * dt;
    }
    return num / den;
}

bool is_failure(const corpus::AccuracyTrace& trace) {
    corpus::validate_trace(trace);
    const double max_acc = *std::max_element(trace.accuracies.begin(), trace.accuracies.end());
    return max_acc < 0.5 && trace_slope(trace) < 0.0;
}

FailureReport build_failure_report(const std::vector<corpus::AccuracyTrace>& traces,
                                   const corpus::ProblemSet& problems) {
    FailureReport report;
    report.total_problems = problems.size();

    std::set<std::string> seen;
    for (const auto& t : traces) {
        if (!problems.contains(t.problem_id))
            throw ValidationError("trace references unknown problem id '" + t.problem_id + "'");
        if (!seen.insert(t.problem_id).second)
            throw ValidationError("duplicate trace for problem id '" + t.problem_id + "'");
        const auto& category = problems.at(t.problem_id).category;
        report.per_category_traced[category] += 1;
        if (is_failure(t)) {
            report.failed_ids.insert(t.problem_id);
            report.per_category_failures[category] += 1;
        }
    }
    report.total_failures = report.failed_ids.size();

    // Every dataset category appears in the rate map; untraced ones at rate 0.
    std::set<std::string> all_categories;
    for (const auto& p : problems) all_categories.insert(p.category);
    for (const auto& category : all_categories) {
        auto traced = report.per_category_traced.find(category);
        if (traced == report.per_category_traced.end() || traced->second == 0) {
            report.per_category_failure_rate[category] = 0.0;
            report.untraced_categories.push_back(category);
            continue;
        }
        const double failures =
            static_cast<double>(report.per_category_failures[category]);
        report.per_category_failure_rate[category] =
            failures / static_cast<double>(traced->second);
    }
    return report;
}

std::map<std::string, std::size_t> apportion(const std::map<std::string, double>& weights,
                                             std::size_t total) {
    std::map<std::string, std::size_t> counts;
    double weight_sum = 0.0;
    for (const auto& [name, w] : weights) {
        if (w < 0.0) throw ValidationError("negative weight for category '" + name + "'");
        weight_sum += w;
    }
    if (weight_sum <= 0.0) throw ValidationError("apportionment requires a positive weight");

    std::size_t assigned = 0;
    std::vector<std::pair<std::string, double>> fractions;
    for (const auto& [name, w] : weights) {
        const double exact = static_cast<double>(total) * (w / weight_sum);
        const auto base = static_cast<std::size_t>(std::floor(exact));
        counts[name] = base;
        assigned += base;
        fractions.emplace_back(name, exact - std::floor(exact));
    }
    std::sort(fractions.begin(), fractions.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (std::size_t i = 0; assigned < total; ++i) {
        counts[fractions[i % fractions.size()].first] += 1;
        ++assigned;
    }
    return counts;
}

AllocationPlan allocate_budget(const FailureReport& report, std::size_t total_budget,
                               std::size_t min_per_category) {
    double rate_sum = 0.0;
    for (const auto& [_, rate] : report.per_category_failure_rate) rate_sum += rate;
    if (rate_sum <= 0.0)
        throw ValidationError("no weaknesses: all category failure rates are zero");

    AllocationPlan plan;
    plan.total_budget = total_budget;
    for (const auto& [category, rate] : report.per_category_failure_rate)
        plan.weights[category] = rate / rate_sum;

    const std::size_t n_categories = plan.weights.size();
    const std::size_t floor_total = min_per_category * n_categories;
    if (floor_total > total_budget)
        throw ValidationError("min_per_category floor exceeds total budget");

    plan.per_category = apportion(plan.weights, total_budget - floor_total);
    if (min_per_category > 0)
        for (auto& [_, count] : plan.per_category) count += min_per_category;
    return plan;
}

std::string report_to_json(const FailureReport& report) {
    json j;
    j["failed_ids"] = report.failed_ids;
    j["per_category_failure_rate"] = report.per_category_failure_rate;
    j["per_category_traced"] = report.per_category_traced;
    j["per_category_failures"] = report.per_category_failures;
    j["untraced_categories"] = report.untraced_categories;
    j["total_problems"] = report.total_problems;
    j["total_failures"] = report.total_failures;
    return j.dump(2) + "\n";
}

FailureReport report_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw corpus::ParseError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
        FailureReport report;
        report.failed_ids = j.at("failed_ids").get<std::set<std::string>>();
        report.per_category_failure_rate =
            j.at("per_category_failure_rate").get<std::map<std::string, double>>();
        if (j.contains("per_category_traced"))
            report.per_category_traced =
                j.at("per_category_traced").get<std::map<std::string, std::size_t>>();
        if (j.contains("per_category_failures"))
            report.per_category_failures =
                j.at("per_category_failures").get<std::map<std::string, std::size_t>>();
        if (j.contains("untraced_categories"))
            report.untraced_categories =
                j.at("untraced_categories").get<std::vector<std::string>>();
        report.total_problems = j.at("total_problems").get<std::size_t>();
        report.total_failures = j.at("total_failures").get<std::size_t>();
        return report;
    } catch (const json::exception& e) {
        throw corpus::ParseError(path + ": " + e.what());
    }
}

std::string plan_to_json(const AllocationPlan& plan) {
    json j;
    j["total_budget"] = plan.total_budget;
    j["per_category"] = plan.per_category;
    j["weights"] = plan.weights;
    return j.dump(2) + "\n";
}

AllocationPlan plan_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw corpus::ParseError("cannot open '" + path + "' for reading");
    json j;
    try {
        in >> j;
        AllocationPlan plan;
        plan.total_budget = j.at("total_budget").get<std::size_t>();
        plan.per_category = j.at("per_category").get<std::map<std::string, std::size_t>>();
        plan.weights = j.at("weights").get<std::map<std::string, double>>();
        return plan;
    } catch (const json::exception& e) {
        throw corpus::ParseError(path + ": " + e.what());
    }
}

}  // namespace sws::weakness
