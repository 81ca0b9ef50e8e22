#include "sws/conceptgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "sws/rng.hpp"

namespace sws::conceptgraph {

using corpus::ParseError;
using corpus::ValidationError;
using nlohmann::json;

void CooccurrenceMatrix::add_list(const std::vector<std::string>& concepts) {
    if (concepts.empty()) throw ValidationError("concept list must be nonempty");
    if (sealed_) throw ValidationError("co-occurrence matrix is sealed");

    // Duplicates within one list count once.
    std::vector<std::string> unique;
    for (const auto& c : concepts)
        if (std::find(unique.begin(), unique.end(), c) == unique.end()) unique.push_back(c);

    std::vector<std::size_t> ids;
    for (const auto& c : unique) {
        auto it = index_.find(c);
        if (it == index_.end()) {
            it = index_.emplace(c, vocabulary_.size()).first;
            vocabulary_.push_back(c);
        }
        frequency_[c] += 1;
        ids.push_back(it->second);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            const auto a = std::min(ids[i], ids[j]);
            const auto b = std::max(ids[i], ids[j]);
            entries_[{a, b}] += 1;
        }
    }
}

void CooccurrenceMatrix::seal() {
    if (sealed_) return;
    // Re-key entries onto the sorted vocabulary so file output and seed
    // draws do not depend on list insertion order.
    std::vector<std::string> sorted = vocabulary_;
    std::sort(sorted.begin(), sorted.end());
    std::unordered_map<std::size_t, std::size_t> remap;
    std::unordered_map<std::string, std::size_t> new_index;
    for (std::size_t i = 0; i < sorted.size(); ++i) new_index.emplace(sorted[i], i);
    for (std::size_t old = 0; old < vocabulary_.size(); ++old)
        remap[old] = new_index.at(vocabulary_[old]);
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> rekeyed;
    for (const auto& [key, count] : entries_) {
        const auto a = std::min(remap[key.first], remap[key.second]);
        const auto b = std::max(remap[key.first], remap[key.second]);
        rekeyed[{a, b}] = count;
    }
    vocabulary_ = std::move(sorted);
    index_ = std::move(new_index);
    entries_ = std::move(rekeyed);
    sealed_ = true;
}

std::size_t CooccurrenceMatrix::index_of(const std::string& concept_name) const {
    auto it = index_.find(concept_name);
    if (it == index_.end()) throw ValidationError("unknown concept '" + concept_name + "'");
    return it->second;
}

std::size_t CooccurrenceMatrix::count(const std::string& a, const std::string& b) const {
    const auto ia = index_of(a);
    const auto ib = index_of(b);
    if (ia == ib) return 0;
    auto it = entries_.find({std::min(ia, ib), std::max(ia, ib)});
    return it == entries_.end() ? 0 : it->second;
}

std::size_t CooccurrenceMatrix::frequency(const std::string& concept_name) const {
    auto it = frequency_.find(concept_name);
    if (it == frequency_.end()) throw ValidationError("unknown concept '" + concept_name + "'");
    return it->second;
}

void EmbeddingStore::put(const std::string& concept_name, std::vector<double> vec) {
    if (dimension_ == 0) dimension_ = vec.size();
    if (vec.size() != dimension_)
        throw ValidationError("embedding for '" + concept_name + "' has dimension " +
                              std::to_string(vec.size()) + ", expected " +
                              std::to_string(dimension_));
    double norm_sq = 0.0;
    for (double v : vec) norm_sq += v * v;
    if (norm_sq <= 0.0) throw ValidationError("embedding for '" + concept_name + "' is zero");
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : vec) v *= inv;
    vectors_[concept_name] = std::move(vec);
}

const std::vector<double>& EmbeddingStore::get(const std::string& concept_name) const {
    auto it = vectors_.find(concept_name);
    if (it == vectors_.end()) throw ValidationError("no embedding for concept '" + concept_name + "'");
    return it->second;
}

CooccurrenceMatrix build_cooccurrence(const std::vector<std::vector<std::string>>& concept_lists) {
    CooccurrenceMatrix matrix;
    for (const auto& list : concept_lists) matrix.add_list(list);
    matrix.seal();
    return matrix;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace

double concept_score(const std::string& candidate, const ConceptSet& selected,
                     const CooccurrenceMatrix& matrix, const EmbeddingStore& store,
                     double co_scale) {
    if (!matrix.has(candidate)) throw ValidationError("unknown concept '" + candidate + "'");
    if (std::find(selected.concepts.begin(), selected.concepts.end(), candidate) !=
        selected.concepts.end())
        return -std::numeric_limits<double>::infinity();
    if (selected.concepts.empty()) return 0.0;

    double co = 0.0;
    std::vector<double> mean(store.dimension(), 0.0);
    for (const auto& c : selected.concepts) {
        co += static_cast<double>(matrix.count(candidate, c));
        const auto& e = store.get(c);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += e[i];
    }
    for (double& v : mean) v /= static_cast<double>(selected.concepts.size());
    const double sim = cosine(store.get(candidate), mean);
    return co_scale * co + sim;
}

std::vector<std::pair<std::string, double>> step_distribution(const ConceptGraph& graph,
                                                              const ConceptSet& selected,
                                                              double tau, double co_scale) {
    if (!(tau > 0.0)) throw ValidationError("temperature must be > 0");

    std::vector<std::pair<std::string, double>> result;
    for (const auto& c : graph.matrix.vocabulary()) {
        const double s = concept_score(c, selected, graph.matrix, graph.store, co_scale);
        if (std::isinf(s)) continue;  // already selected: probability exactly 0
        result.emplace_back(c, s);
    }
    if (result.empty()) throw ValidationError("no candidates left to sample");

    double max_score = result.front().second;
    for (const auto& [_, s] : result) max_score = std::max(max_score, s);
    double z = 0.0;
    for (auto& [_, s] : result) {
        s = std::exp((s - max_score) / tau);
        z += s;
    }
    for (auto& [_, s] : result) s /= z;
    return result;
}

ConceptSet sample_concept_set(const ConceptGraph& graph, std::size_t k, std::uint64_t seed,
                              const SamplerConfig& config) {
    const auto& vocab = graph.matrix.vocabulary();
    if (k == 0) throw ValidationError("k must be >= 1");
    if (vocab.size() < k)
        throw ValidationError("vocabulary of " + std::to_string(vocab.size()) +
                              " concepts cannot yield " + std::to_string(k));
    if (!(config.tau > 0.0)) throw ValidationError("temperature must be > 0");

    Rng rng(seed);
    ConceptSet result;
    result.category = graph.category;

    // Seed concept in proportion to list frequency.
    double freq_total = 0.0;
    for (const auto& c : vocab) freq_total += static_cast<double>(graph.matrix.frequency(c));
    double u = rng.next_double() * freq_total;
    std::size_t pick = vocab.size() - 1;
    double cum = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        cum += static_cast<double>(graph.matrix.frequency(vocab[i]));
        if (u < cum) {
            pick = i;
            break;
        }
    }
    result.concepts.push_back(vocab[pick]);

    while (result.concepts.size() < k) {
        const auto dist = step_distribution(graph, result, config.tau, config.co_scale);
        double v = rng.next_double();
        std::size_t chosen = dist.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < dist.size(); ++i) {
            acc += dist[i].second;
            if (v < acc) {
                chosen = i;
                break;
            }
        }
        result.concepts.push_back(dist[chosen].first);
    }
    return result;
}

// Serialization keeps raw (pre-normalization already applied) vectors and the
// sealed vocabulary order.
struct GraphSerde {
    static json to_json(const ConceptGraph& graph) {
        json j;
        j["category"] = graph.category;
        j["vocabulary"] = graph.matrix.vocabulary_;
        json entries = json::array();
        for (const auto& [key, count] : graph.matrix.entries_)
            entries.push_back({key.first, key.second, count});
        j["entries"] = entries;
        j["frequency"] = std::map<std::string, std::size_t>(graph.matrix.frequency_.begin(),
                                                            graph.matrix.frequency_.end());
        j["dimension"] = graph.store.dimension_;
        j["embeddings"] = graph.store.vectors_;
        return j;
    }

    static ConceptGraph from_json(const json& j) {
        ConceptGraph graph;
        graph.category = j.at("category").get<std::string>();
        graph.matrix.vocabulary_ = j.at("vocabulary").get<std::vector<std::string>>();
        for (std::size_t i = 0; i < graph.matrix.vocabulary_.size(); ++i)
            graph.matrix.index_.emplace(graph.matrix.vocabulary_[i], i);
        for (const auto& e : j.at("entries")) {
            const auto a = e.at(0).get<std::size_t>();
            const auto b = e.at(1).get<std::size_t>();
            graph.matrix.entries_[{a, b}] = e.at(2).get<std::size_t>();
        }
        const auto freq = j.at("frequency").get<std::map<std::string, std::size_t>>();
        graph.matrix.frequency_.insert(freq.begin(), freq.end());
        graph.matrix.sealed_ = true;
        graph.store.dimension_ = j.at("dimension").get<std::size_t>();
        graph.store.vectors_ =
            j.at("embeddings").get<std::map<std::string, std::vector<double>>>();
        return graph;
    }
};

std::string graph_to_json(const ConceptGraph& graph) { return GraphSerde::to_json(graph).dump(2) + "\n"; }

ConceptGraph graph_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "' for reading");
    try {
        json j;
        in >> j;
        return GraphSerde::from_json(j);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_graph(const ConceptGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << graph_to_json(graph);
}

}  // namespace sws::conceptgraph
