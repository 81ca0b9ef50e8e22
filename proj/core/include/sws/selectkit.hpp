#pragma once

#include <map>
#include <string>
#include <vector>

#include "sws/weakness.hpp"

namespace sws::selectkit {

struct EmbeddedItem {
    std::string id;
    std::string category;
    std::vector<double> embedding;  // unit norm
};

// External corpus with unit-norm embeddings of uniform dimension.
class EmbeddedCorpus {
public:
    EmbeddedCorpus() = default;
    void add(EmbeddedItem item);  // validates norm and dimension
    const std::vector<EmbeddedItem>& items() const { return items_; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return items_.size(); }

private:
    std::vector<EmbeddedItem> items_;
    std::size_t dimension_ = 0;
};

struct Selected {
    std::string id;
    double distance;
};

struct SelectionResult {
    std::map<std::string, std::vector<Selected>> per_category;  // distance ascending
    std::vector<std::string> total;                             // flattened, category pass order
    std::map<std::string, std::size_t> shortfall;               // quota minus available
};

struct SelectOptions {
    // Limit each category's scan to corpus items sharing its label instead
    // of ranking the whole corpus.
    bool same_category_only = false;
    int threads = 1;
};

// Cosine distance (1 - dot) from `query` to its nearest failure embedding.
double min_distance_to_failures(const std::vector<double>& query,
                                const std::vector<std::vector<double>>& failures);

// Per-category nearest-neighbor selection: for each budgeted category, rank
// the corpus by distance to that category's failure set and take the quota
// (ties by id). Categories are processed in ascending weight order; an item
// taken by an earlier category is skipped and the later category backfills
// from its next-nearest.
SelectionResult select_weakness_driven(
    const EmbeddedCorpus& corpus,
    const std::map<std::string, std::vector<std::vector<double>>>& failures_by_category,
    const weakness::AllocationPlan& plan, const SelectOptions& options = {});

}  // namespace sws::selectkit
