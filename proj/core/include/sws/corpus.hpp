#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sws::corpus {

// Raised for malformed records, duplicate ids, unknown categories and the like.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Source { original, synthetic, selected };

std::string to_string(Source s);
Source source_from_string(const std::string& s);

// One training item. `answer` stays empty until labeling; synthetic items
// always carry the concept list they were generated from.
struct Problem {
    std::string id;
    std::string text;
    std::string category;
    std::string answer;
    Source source = Source::original;
    std::vector<std::string> concepts;
    std::map<std::string, std::string> metadata;

    bool operator==(const Problem&) const = default;
};

// Throws ValidationError if the record violates its field invariants.
void validate_problem(const Problem& p);

// Ordered problem collection with unique ids. Iteration order is insertion
// order; the set is meant to be frozen after construction and shared read-only.
class ProblemSet {
public:
    ProblemSet() = default;
    explicit ProblemSet(std::string name) : name_(std::move(name)) {}

    void add(Problem p);
    bool contains(const std::string& id) const { return index_.count(id) > 0; }
    const Problem& at(const std::string& id) const;

    const std::vector<Problem>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    const std::string& name() const { return name_; }

    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::string name_;
    std::vector<Problem> items_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Per-problem mean rollout accuracy per epoch, first recorded epoch = t1.
struct AccuracyTrace {
    std::string problem_id;
    std::vector<double> accuracies;
};

void validate_trace(const AccuracyTrace& t);

// Line-delimited dataset persistence. Each line is one JSON record with
// fields {id, text, category, answer, source, concepts, metadata}; empty
// optional fields are omitted and keys are emitted sorted, so saving the
// same set twice yields byte-identical files.
ProblemSet load_dataset(const std::string& path);
ProblemSet load_dataset(const std::string& path, const std::vector<std::string>& categories);
void save_dataset(const ProblemSet& set, const std::string& path);

std::vector<AccuracyTrace> load_traces(const std::string& path);
void save_traces(const std::vector<AccuracyTrace>& traces, const std::string& path);

// Concatenates initial and synthetic sets; id spaces must be disjoint.
ProblemSet merge_augmented(const ProblemSet& initial, const ProblemSet& synthetic);

}  // namespace sws::corpus
