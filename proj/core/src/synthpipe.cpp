#include "sws/synthpipe.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include <json.hpp>

#include "sws/rng.hpp"

namespace sws::synthpipe {

using corpus::ValidationError;
using nlohmann::json;

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::generated: return "generated";
        case Stage::structurally_ok: return "structurally_ok";
        case Stage::quality_ok: return "quality_ok";
        case Stage::answered: return "answered";
        case Stage::difficulty_ok: return "difficulty_ok";
        case Stage::rejected: return "rejected";
    }
    return "unknown";
}

std::string to_string(RejectionReason reason) {
    switch (reason) {
        case RejectionReason::structure: return "structure";
        case RejectionReason::quality: return "quality";
        case RejectionReason::inconsistent_answer: return "inconsistent_answer";
        case RejectionReason::too_easy: return "too_easy";
        case RejectionReason::too_hard: return "too_hard";
        case RejectionReason::student_teacher_disagreement:
            return "student_teacher_disagreement";
    }
    return "unknown";
}

std::optional<Rating> parse_rating(const std::string& completion) {
    std::string lower;
    lower.reserve(completion.size());
    for (char c : completion)
        lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    // First keyword wins; "perfect" checked before "acceptable" so phrases
    // like "perfectly acceptable" do not flip the verdict arbitrarily.
    const auto bad = lower.find("bad");
    const auto acceptable = lower.find("acceptable");
    const auto perfect = lower.find("perfect");
    std::size_t best = std::string::npos;
    std::optional<Rating> result;
    if (bad < best) {
        best = bad;
        result = Rating::bad;
    }
    if (perfect < best) {
        best = perfect;
        result = Rating::perfect;
    }
    if (acceptable < best) {
        best = acceptable;
        result = Rating::acceptable;
    }
    return result;
}

void DifficultyBand::validate() const {
    if (!(0.0 <= acc_low && acc_low <= acc_high && acc_high <= 1.0))
        throw ValidationError("difficulty band must satisfy 0 <= low <= high <= 1");
}

std::string render_generation_prompt(const std::string& category,
                                     const conceptgraph::ConceptSet& concepts,
                                     const std::string& prompt_template,
                                     const std::string& difficulty_label) {
    if (prompt_template.find("{concepts}") == std::string::npos)
        throw ValidationError("prompt template is missing the {concepts} placeholder");
    if (prompt_template.find("{category}") == std::string::npos)
        throw ValidationError("prompt template is missing the {category} placeholder");

    std::string concept_list;
    for (std::size_t i = 0; i < concepts.concepts.size(); ++i) {
        if (i) concept_list += ", ";
        concept_list += concepts.concepts[i];
    }

    std::string out = prompt_template;
    auto replace_all = [&out](const std::string& key, const std::string& value) {
        for (std::size_t pos = out.find(key); pos != std::string::npos;
             pos = out.find(key, pos + value.size()))
            out.replace(pos, key.size(), value);
    };
    replace_all("{category}", category);
    replace_all("{concepts}", concept_list);
    replace_all("{difficulty}", difficulty_label);
    return out;
}

const std::vector<StructuralDetector>& default_detectors() {
    static const std::vector<StructuralDetector> detectors = [] {
        std::vector<StructuralDetector> d;
        d.push_back({"option_list", std::regex(R"(\(A\)[\s\S]*\(B\))")});
        d.push_back({"multi_part", std::regex(R"(\(a\)[\s\S]*\(b\))")});
        d.push_back({"multi_part", std::regex(R"(Part\s*1\b[\s\S]*Part\s*2\b)")});
        d.push_back({"proof", std::regex(R"(\b(Prove|prove|Show|show)\s+that\b)")});
        return d;
    }();
    return detectors;
}

std::optional<std::string> structural_filter(const std::string& problem_text,
                                             const std::vector<StructuralDetector>& detectors) {
    if (problem_text.empty()) throw ValidationError("cannot filter empty problem text");
    for (const auto& detector : detectors)
        if (std::regex_search(problem_text, detector.pattern)) return detector.name;
    return std::nullopt;
}

bool aggregate_quality(const std::vector<QualityVote>& votes, int perfect_threshold) {
    if (votes.empty()) throw ValidationError("quality aggregation needs at least one vote");
    int perfect = 0;
    for (const auto& vote : votes) {
        if (vote.rating == Rating::bad) return false;
        if (vote.rating == Rating::perfect) ++perfect;
    }
    return perfect >= perfect_threshold;
}

std::optional<LabeledAnswer> label_answer(const std::vector<std::string>& responses,
                                          const answers::Equivalence& equivalent) {
    if (responses.empty()) throw ValidationError("cannot label from zero responses");
    const std::size_t n = responses.size();

    // Union-find over pairwise equivalence; the closure makes the relation
    // effectively transitive even if the plugged-in checker is not.
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (find(i) != find(j) && equivalent(responses[i], responses[j]))
                parent[find(j)] = find(i);

    std::map<std::size_t, std::size_t> class_size;
    for (std::size_t i = 0; i < n; ++i) class_size[find(i)] += 1;

    std::size_t best_root = 0, best_size = 0;
    bool tie = false;
    for (std::size_t i = 0; i < n; ++i) {  // index order: first class wins ties for reporting
        const auto root = find(i);
        if (root != i) continue;
        const auto size = class_size[root];
        if (size > best_size) {
            best_root = root;
            best_size = size;
            tie = false;
        } else if (size == best_size) {
            tie = true;
        }
    }

    const double support = static_cast<double>(best_size) / static_cast<double>(n);
    if (tie || support < 0.5) return std::nullopt;
    return LabeledAnswer{responses[best_root], support};
}

std::optional<RejectionReason> difficulty_filter(double rollout_accuracy,
                                                 const DifficultyBand& band) {
    band.validate();
    if (!(rollout_accuracy >= 0.0 && rollout_accuracy <= 1.0))
        throw ValidationError("rollout accuracy must be in [0,1]");
    if (rollout_accuracy < band.acc_low) return RejectionReason::too_hard;
    if (rollout_accuracy > band.acc_high) return RejectionReason::too_easy;
    return std::nullopt;
}

bool student_teacher_consistency(const std::string& teacher_answer,
                                 const std::vector<std::string>& student_responses,
                                 const answers::Equivalence& equivalent, double threshold) {
    if (student_responses.empty())
        throw ValidationError("student consistency needs at least one response");
    std::size_t agree = 0;
    for (const auto& response : student_responses)
        if (equivalent(teacher_answer, response)) ++agree;
    const double fraction =
        static_cast<double>(agree) / static_cast<double>(student_responses.size());
    return fraction >= threshold;
}

// ---- Orchestration ---------------------------------------------------------

namespace {

std::string slug(const std::string& name) {
    std::string out;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else if (!out.empty() && out.back() != '-')
            out.push_back('-');
    }
    while (!out.empty() && out.back() == '-') out.pop_back();
    return out.empty() ? "category" : out;
}

// Rationale before a "Problem:" marker, statement after; plain completions
// are all statement.
std::pair<std::string, std::string> split_generation(const std::string& completion) {
    const auto pos = completion.find("Problem:");
    if (pos == std::string::npos) return {"", completion};
    std::string rationale = completion.substr(0, pos);
    std::string problem = completion.substr(pos + 8);
    auto trim = [](std::string& s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.erase(0, 1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    };
    trim(rationale);
    trim(problem);
    return {rationale, problem};
}

std::vector<std::string> call_with_retry(backends::TextBackend& backend,
                                         const backends::BackendRequest& request,
                                         int max_retries) {
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.complete(request);
        } catch (const backends::BackendError&) {
            if (attempt >= max_retries) throw;
        }
    }
}

std::string format_fraction(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

}  // namespace

std::string report_to_json(const PipelineReport& report) {
    json j;
    j["generated"] = report.generated;
    j["rejected"] = {{"structure", report.rejected_structure},
                     {"quality", report.rejected_quality},
                     {"inconsistent_answer", report.rejected_inconsistent_answer},
                     {"student_teacher_disagreement", report.rejected_student_teacher},
                     {"too_easy", report.rejected_too_easy},
                     {"too_hard", report.rejected_too_hard}};
    j["backend_failures"] = report.backend_failures;
    j["survivors"] = report.survivors;
    j["selected"] = report.selected;
    j["shortfall"] = report.shortfall;
    j["quality_rejection_rate"] = report.quality_rejection_rate();
    j["per_category"] = {{"generated", report.per_category_generated},
                         {"survivors", report.per_category_survivors},
                         {"selected", report.per_category_selected}};
    return j.dump(2) + "\n";
}

PipelineResult run_pipeline(const weakness::AllocationPlan& plan,
                            const std::map<std::string, conceptgraph::ConceptGraph>& graphs,
                            const PipelineBackends& backends_in, const PipelineConfig& config) {
    if (!backends_in.generator || !backends_in.rater || !backends_in.solver ||
        !backends_in.rollout)
        throw ValidationError("pipeline needs generator, rater, solver and rollout backends");
    config.band.validate();
    if (!(config.tau > 0.0)) throw ValidationError("temperature must be > 0");
    // Surface template problems before generating anything.
    {
        conceptgraph::ConceptSet probe;
        probe.concepts = {"probe"};
        render_generation_prompt("probe", probe, config.generation_template,
                                 config.difficulty_label);
        if (config.quality_template.find("{problem}") == std::string::npos)
            throw ValidationError("quality template is missing the {problem} placeholder");
    }

    struct Slot {
        std::string category;
        SyntheticCandidate candidate;
    };
    std::vector<Slot> slots;
    for (const auto& [category, count] : plan.per_category) {
        if (count == 0) continue;
        if (!graphs.count(category))
            throw ValidationError("no concept graph for category '" + category + "'");
        for (std::size_t j = 0; j < count; ++j) {
            Slot slot;
            slot.category = category;
            slot.candidate.id =
                config.id_prefix + "-" + slug(category) + "-" + std::to_string(j);
            slot.candidate.category = category;
            slots.push_back(std::move(slot));
        }
    }

    const bool revise = backends_in.student_solver != nullptr;

    // All per-candidate randomness hangs off the candidate id, so the result
    // is independent of which thread processes which slot.
    parallel_for(slots.size(), config.parallelism, [&](std::size_t si) {
        Slot& slot = slots[si];
        SyntheticCandidate& cand = slot.candidate;
        const std::uint64_t cand_seed = derive_seed(config.seed, cand.id);
        try {
            const auto& graph = graphs.at(slot.category);
            std::size_t k = config.k_concepts;
            if (k == 0) {
                Rng krng(derive_seed(cand_seed, "k"));
                k = config.k_min + krng.next_index(config.k_max - config.k_min + 1);
            }
            k = std::min(k, graph.matrix.vocabulary().size());
            cand.concepts = conceptgraph::sample_concept_set(
                graph, std::max<std::size_t>(k, 1), derive_seed(cand_seed, "concepts"),
                {config.tau, config.co_scale});
            cand.prompt_text = render_generation_prompt(
                slot.category, cand.concepts, config.generation_template,
                config.difficulty_label);

            backends::BackendRequest gen_request{backends::RequestKind::generate,
                                                 cand.prompt_text, 1,
                                                 derive_seed(cand_seed, "generate"), cand.id};
            const auto completions =
                call_with_retry(*backends_in.generator, gen_request, config.max_retries);
            if (completions.empty()) throw backends::BackendError("empty generation");
            std::tie(cand.rationale, cand.problem_text) = split_generation(completions.front());
            if (cand.problem_text.empty()) throw backends::BackendError("empty problem text");

            if (auto detector = structural_filter(cand.problem_text)) {
                cand.stage = Stage::rejected;
                cand.rejection_reason = RejectionReason::structure;
                cand.note = *detector;
                return;
            }
            cand.stage = Stage::structurally_ok;

            std::string rate_prompt = config.quality_template;
            for (auto pos = rate_prompt.find("{problem}"); pos != std::string::npos;
                 pos = rate_prompt.find("{problem}", pos + cand.problem_text.size()))
                rate_prompt.replace(pos, 9, cand.problem_text);
            backends::BackendRequest rate_request{backends::RequestKind::rate, rate_prompt,
                                                  config.n_quality_raters,
                                                  derive_seed(cand_seed, "rate"), cand.id};
            const auto rating_texts =
                call_with_retry(*backends_in.rater, rate_request, config.max_retries);
            std::vector<QualityVote> votes;
            for (std::size_t r = 0; r < rating_texts.size(); ++r) {
                const auto rating = parse_rating(rating_texts[r]);
                if (!rating) throw backends::BackendError("unparseable rating");
                votes.push_back({"rater-" + std::to_string(r), *rating});
            }
            if (!aggregate_quality(votes, config.perfect_threshold)) {
                cand.stage = Stage::rejected;
                cand.rejection_reason = RejectionReason::quality;
                return;
            }
            cand.stage = Stage::quality_ok;

            backends::BackendRequest solve_request{backends::RequestKind::solve,
                                                   cand.problem_text, config.n_answer_samples,
                                                   derive_seed(cand_seed, "solve"), cand.id};
            const auto answers_raw =
                call_with_retry(*backends_in.solver, solve_request, config.max_retries);
            const auto labeled = label_answer(answers_raw, config.equivalent);
            if (!labeled || labeled->support < config.consistency_threshold) {
                cand.stage = Stage::rejected;
                cand.rejection_reason = RejectionReason::inconsistent_answer;
                return;
            }
            cand.answer = labeled->answer;
            cand.answer_support = labeled->support;
            cand.stage = Stage::answered;

            if (revise) {
                backends::BackendRequest student_request{
                    backends::RequestKind::solve, cand.problem_text, config.n_answer_samples,
                    derive_seed(cand_seed, "student"), cand.id};
                const auto student_answers = call_with_retry(*backends_in.student_solver,
                                                             student_request, config.max_retries);
                if (!student_teacher_consistency(cand.answer, student_answers,
                                                 config.equivalent,
                                                 config.student_consistency_threshold)) {
                    cand.stage = Stage::rejected;
                    cand.rejection_reason = RejectionReason::student_teacher_disagreement;
                    return;
                }
            }

            cand.rollout_accuracy = backends_in.rollout(cand.problem_text, slot.category,
                                                        config.n_rollouts,
                                                        derive_seed(cand_seed, "rollout"));
            if (auto reason = difficulty_filter(*cand.rollout_accuracy, config.band)) {
                cand.stage = Stage::rejected;
                cand.rejection_reason = *reason;
                return;
            }
            cand.stage = Stage::difficulty_ok;
        } catch (const std::exception& e) {
            cand.stage = Stage::rejected;
            cand.rejection_reason = RejectionReason::quality;
            cand.note = std::string("backend error: ") + e.what();
        }
    });

    PipelineResult result;
    PipelineReport& report = result.report;
    result.candidates.reserve(slots.size());  // pointers into it must stay valid
    std::map<std::string, std::vector<const SyntheticCandidate*>> survivors_by_category;
    for (const auto& slot : slots) {
        const auto& cand = slot.candidate;
        report.generated += 1;
        report.per_category_generated[cand.category] += 1;
        result.candidates.push_back(cand);
        if (cand.stage == Stage::difficulty_ok) {
            report.survivors += 1;
            report.per_category_survivors[cand.category] += 1;
            survivors_by_category[cand.category].push_back(&result.candidates.back());
            continue;
        }
        switch (*cand.rejection_reason) {
            case RejectionReason::structure: report.rejected_structure += 1; break;
            case RejectionReason::quality:
                report.rejected_quality += 1;
                if (!cand.note.empty() && cand.note.rfind("backend error:", 0) == 0)
                    report.backend_failures += 1;
                break;
            case RejectionReason::inconsistent_answer:
                report.rejected_inconsistent_answer += 1;
                break;
            case RejectionReason::student_teacher_disagreement:
                report.rejected_student_teacher += 1;
                break;
            case RejectionReason::too_easy: report.rejected_too_easy += 1; break;
            case RejectionReason::too_hard: report.rejected_too_hard += 1; break;
        }
    }
    if (report.survivors == 0)
        throw ValidationError("pipeline produced zero survivors; nothing to select");

    // Final quota pass: trim survivors to final_total along the plan weights,
    // iteratively pushing unmet quota onto categories with pool to spare.
    std::map<std::string, std::size_t> take;
    if (config.final_total == 0) {
        for (const auto& [category, pool] : survivors_by_category)
            take[category] = pool.size();
    } else {
        std::map<std::string, double> weights;
        for (const auto& [category, _] : survivors_by_category) {
            auto it = plan.weights.find(category);
            weights[category] = it == plan.weights.end() ? 0.0 : it->second;
        }
        auto quota = weakness::apportion(weights, config.final_total);
        std::size_t filled = 0;
        for (const auto& [category, pool] : survivors_by_category) {
            take[category] = std::min(quota[category], pool.size());
            filled += take[category];
        }
        while (filled < config.final_total) {
            std::map<std::string, double> spare_weights;
            for (const auto& [category, pool] : survivors_by_category)
                if (pool.size() > take[category])
                    spare_weights[category] =
                        weights[category] > 0.0 ? weights[category] : 1e-12;
            if (spare_weights.empty()) break;
            const auto extra =
                weakness::apportion(spare_weights, config.final_total - filled);
            bool progressed = false;
            for (const auto& [category, add] : extra) {
                const std::size_t room =
                    survivors_by_category[category].size() - take[category];
                const std::size_t granted = std::min(add, room);
                take[category] += granted;
                filled += granted;
                progressed = progressed || granted > 0;
            }
            if (!progressed) break;
        }
        if (filled < config.final_total) report.shortfall = config.final_total - filled;
    }

    corpus::ProblemSet selected("synthetic");
    for (const auto& [category, pool] : survivors_by_category) {
        const std::size_t n = take[category];
        report.per_category_selected[category] = n;
        report.selected += n;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& cand = *pool[i];
            corpus::Problem p;
            p.id = cand.id;
            p.text = cand.problem_text;
            p.category = category;
            p.answer = cand.answer;
            p.source = corpus::Source::synthetic;
            p.concepts = cand.concepts.concepts;
            p.metadata["answer_support"] = format_fraction(cand.answer_support);
            p.metadata["rollout_accuracy"] = format_fraction(*cand.rollout_accuracy);
            selected.add(std::move(p));
        }
    }
    result.problems = std::move(selected);
    return result;
}

}  // namespace sws::synthpipe
