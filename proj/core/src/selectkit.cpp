#include "sws/selectkit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "sws/rng.hpp"

namespace sws::selectkit {

using corpus::ValidationError;

void EmbeddedCorpus::add(EmbeddedItem item) {
    if (item.id.empty()) throw ValidationError("embedded item needs an id");
    if (dimension_ == 0) dimension_ = item.embedding.size();
    if (item.embedding.size() != dimension_)
        throw ValidationError("embedding dimension mismatch for '" + item.id + "'");
    double norm_sq = 0.0;
    for (double v : item.embedding) norm_sq += v * v;
    if (std::abs(std::sqrt(norm_sq) - 1.0) > 1e-6)
        throw ValidationError("embedding for '" + item.id + "' is not unit norm");
    items_.push_back(std::move(item));
}

double min_distance_to_failures(const std::vector<double>& query,
                                const std::vector<std::vector<double>>& failures) {
    if (failures.empty()) throw ValidationError("failure embedding list is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : failures) {
        if (f.size() != query.size())
            throw ValidationError("failure embedding dimension mismatch");
        double dot = 0.0;
        for (std::size_t i = 0; i < query.size(); ++i) dot += query[i] * f[i];
        best = std::min(best, 1.0 - dot);
    }
    return best;
}

SelectionResult select_weakness_driven(
    const EmbeddedCorpus& corpus,
    const std::map<std::string, std::vector<std::vector<double>>>& failures_by_category,
    const weakness::AllocationPlan& plan, const SelectOptions& options) {
    // Ascending weight, then name: the lowest-rate category picks first, so
    // higher-rate categories backfill around any cross-category duplicates.
    std::vector<std::string> order;
    for (const auto& [category, _] : plan.per_category) order.push_back(category);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        const double wa = plan.weights.count(a) ? plan.weights.at(a) : 0.0;
        const double wb = plan.weights.count(b) ? plan.weights.at(b) : 0.0;
        if (wa != wb) return wa < wb;
        return a < b;
    });

    SelectionResult result;
    std::set<std::string> taken;
    const auto& items = corpus.items();

    for (const auto& category : order) {
        const std::size_t quota = plan.per_category.at(category);
        result.per_category[category];  // present even when empty
        if (quota == 0) continue;

        auto failures = failures_by_category.find(category);
        if (failures == failures_by_category.end() || failures->second.empty())
            throw ValidationError("category '" + category +
                                  "' has a positive budget but no failure cases");

        std::vector<std::size_t> eligible;
        for (std::size_t i = 0; i < items.size(); ++i)
            if (!options.same_category_only || items[i].category == category)
                eligible.push_back(i);

        std::vector<double> distance(eligible.size());
        parallel_for(eligible.size(), options.threads, [&](std::size_t e) {
            distance[e] = min_distance_to_failures(items[eligible[e]].embedding,
                                                   failures->second);
        });

        std::vector<std::size_t> rank(eligible.size());
        for (std::size_t e = 0; e < eligible.size(); ++e) rank[e] = e;
        std::sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
            if (distance[a] != distance[b]) return distance[a] < distance[b];
            return items[eligible[a]].id < items[eligible[b]].id;
        });

        auto& picks = result.per_category[category];
        for (std::size_t e : rank) {
            if (picks.size() == quota) break;
            const auto& item = items[eligible[e]];
            if (!taken.insert(item.id).second) continue;
            picks.push_back({item.id, distance[e]});
            result.total.push_back(item.id);
        }
        if (picks.size() < quota) result.shortfall[category] = quota - picks.size();
    }
    return result;
}

}  // namespace sws::selectkit
