#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sws/corpus.hpp"

namespace sws::conceptgraph {

// Sparse symmetric pair counts plus how many concept lists each concept
// appeared in. Built once, then shared read-only.
class CooccurrenceMatrix {
public:
    void add_list(const std::vector<std::string>& concepts);

    // Symmetric lookup; zero for pairs never seen together or i == j.
    std::size_t count(const std::string& a, const std::string& b) const;
    std::size_t frequency(const std::string& concept_name) const;
    bool has(const std::string& concept_name) const { return index_.count(concept_name) > 0; }

    // Lexicographically sorted, fixed once sealed.
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }
    std::size_t entry_count() const { return entries_.size(); }

    // Sorts the vocabulary; call after the last add_list.
    void seal();

private:
    std::size_t index_of(const std::string& concept_name) const;

    std::vector<std::string> vocabulary_;
    std::unordered_map<std::string, std::size_t> index_;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> entries_;  // key i < j
    std::unordered_map<std::string, std::size_t> frequency_;
    bool sealed_ = false;
    friend struct GraphSerde;
};

// Unit-norm embeddings of fixed dimension.
class EmbeddingStore {
public:
    explicit EmbeddingStore(std::size_t dimension = 0) : dimension_(dimension) {}

    // Normalizes before storing; throws on zero vectors or dimension mismatch.
    void put(const std::string& concept_name, std::vector<double> vec);
    const std::vector<double>& get(const std::string& concept_name) const;
    bool has(const std::string& concept_name) const { return vectors_.count(concept_name) > 0; }
    std::size_t dimension() const { return dimension_; }
    std::size_t size() const { return vectors_.size(); }

private:
    std::size_t dimension_;
    std::map<std::string, std::vector<double>> vectors_;
    friend struct GraphSerde;
};

struct ConceptSet {
    std::string category;
    std::vector<std::string> concepts;  // distinct, selection order
};

// Per-category concept statistics: vocabulary, pair counts, embeddings.
struct ConceptGraph {
    std::string category;
    CooccurrenceMatrix matrix;
    EmbeddingStore store;
};

CooccurrenceMatrix build_cooccurrence(const std::vector<std::vector<std::string>>& concept_lists);

// Coherence score of adding `candidate` to `selected`: summed co-occurrence
// with the current set (scaled by co_scale) plus cosine similarity between
// the candidate embedding and the mean of the selected embeddings. Returns
// -infinity when the candidate is already selected.
double concept_score(const std::string& candidate, const ConceptSet& selected,
                     const CooccurrenceMatrix& matrix, const EmbeddingStore& store,
                     double co_scale = 1.0);

// Softmax distribution over all non-selected vocabulary concepts at
// temperature tau, max-subtracted for stability. Probabilities sum to 1.
std::vector<std::pair<std::string, double>> step_distribution(const ConceptGraph& graph,
                                                              const ConceptSet& selected,
                                                              double tau,
                                                              double co_scale = 1.0);

struct SamplerConfig {
    double tau = 1.0;
    double co_scale = 1.0;
};

// Draws k distinct concepts: the seed concept in proportion to list
// frequency, each subsequent one by temperature softmax over concept_score.
// Fully deterministic given the seed.
ConceptSet sample_concept_set(const ConceptGraph& graph, std::size_t k, std::uint64_t seed,
                              const SamplerConfig& config = {});

std::string graph_to_json(const ConceptGraph& graph);
ConceptGraph graph_from_json_file(const std::string& path);
void save_graph(const ConceptGraph& graph, const std::string& path);

}  // namespace sws::conceptgraph
