#include "sws/corpus.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace sws::corpus {

using nlohmann::json;

std::string to_string(Source s) {
    switch (s) {
        case Source::original: return "original";
        case Source::synthetic: return "synthetic";
        case Source::selected: return "selected";
    }
    throw ValidationError("unknown source enum value");
}

Source source_from_string(const std::string& s) {
    if (s == "original") return Source::original;
    if (s == "synthetic") return Source::synthetic;
    if (s == "selected") return Source::selected;
    throw ValidationError("unknown source value: '" + s + "'");
}

void validate_problem(const Problem& p) {
    if (p.id.empty()) throw ValidationError("problem id must be nonempty");
    if (p.category.empty()) throw ValidationError("problem '" + p.id + "' has empty category");
    if (p.source == Source::synthetic && p.concepts.empty())
        throw ValidationError("synthetic problem '" + p.id + "' has no concepts");
}

void ProblemSet::add(Problem p) {
    validate_problem(p);
    auto [it, inserted] = index_.emplace(p.id, items_.size());
    if (!inserted) throw ValidationError("duplicate problem id '" + p.id + "'");
    items_.push_back(std::move(p));
}

const Problem& ProblemSet::at(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw ValidationError("unknown problem id '" + id + "'");
    return items_[it->second];
}

void validate_trace(const AccuracyTrace& t) {
    if (t.problem_id.empty()) throw ValidationError("trace has empty problem_id");
    if (t.accuracies.empty())
        throw ValidationError("trace for '" + t.problem_id + "' has no epochs");
    for (double a : t.accuracies)
        if (!(a >= 0.0 && a <= 1.0))
            throw ValidationError("trace for '" + t.problem_id + "' has accuracy outside [0,1]");
}

namespace {

json problem_to_json(const Problem& p) {
    // json uses std::map underneath, so keys come out sorted.
    json j;
    j["id"] = p.id;
    j["text"] = p.text;
    j["category"] = p.category;
    j["source"] = to_string(p.source);
    if (!p.answer.empty()) j["answer"] = p.answer;
    if (!p.concepts.empty()) j["concepts"] = p.concepts;
    if (!p.metadata.empty()) j["metadata"] = p.metadata;
    return j;
}

Problem problem_from_json(const json& j) {
    Problem p;
    p.id = j.at("id").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.category = j.at("category").get<std::string>();
    p.source = source_from_string(j.at("source").get<std::string>());
    if (j.contains("answer")) p.answer = j.at("answer").get<std::string>();
    if (j.contains("concepts")) p.concepts = j.at("concepts").get<std::vector<std::string>>();
    if (j.contains("metadata"))
        p.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    return p;
}

std::ifstream open_for_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    return out;
}

}  // namespace

ProblemSet load_dataset(const std::string& path) { return load_dataset(path, {}); }

ProblemSet load_dataset(const std::string& path, const std::vector<std::string>& categories) {
    auto in = open_for_read(path);
    ProblemSet set(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        Problem p;
        try {
            p = problem_from_json(j);
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!categories.empty() &&
            std::find(categories.begin(), categories.end(), p.category) == categories.end())
            throw ValidationError(path + ":" + std::to_string(line_no) + ": unknown category '" +
                                  p.category + "' for problem '" + p.id + "'");
        try {
            set.add(std::move(p));
        } catch (const ValidationError& e) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return set;
}

void save_dataset(const ProblemSet& set, const std::string& path) {
    auto out = open_for_write(path);
    for (const auto& p : set) {
        validate_problem(p);
        out << problem_to_json(p).dump() << '\n';
    }
    out.flush();
    if (!out) throw ParseError("write failed for '" + path + "'");
}

std::vector<AccuracyTrace> load_traces(const std::string& path) {
    auto in = open_for_read(path);
    std::vector<AccuracyTrace> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            AccuracyTrace t;
            t.problem_id = j.at("problem_id").get<std::string>();
            t.accuracies = j.at("accuracies").get<std::vector<double>>();
            validate_trace(t);
            traces.push_back(std::move(t));
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return traces;
}

void save_traces(const std::vector<AccuracyTrace>& traces, const std::string& path) {
    auto out = open_for_write(path);
    for (const auto& t : traces) {
        validate_trace(t);
        json j;
        j["problem_id"] = t.problem_id;
        j["accuracies"] = t.accuracies;
        out << j.dump() << '\n';
    }
    out.flush();
    if (!out) throw ParseError("write failed for '" + path + "'");
}

ProblemSet merge_augmented(const ProblemSet& initial, const ProblemSet& synthetic) {
    ProblemSet merged(initial.name());
    for (const auto& p : initial) merged.add(p);
    for (const auto& p : synthetic) {
        if (merged.contains(p.id))
            throw ValidationError("id collision on '" + p.id + "' while merging");
        merged.add(p);
    }
    return merged;
}

}  // namespace sws::corpus
