#pragma once

#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "sws/answers.hpp"
#include "sws/backends.hpp"
#include "sws/conceptgraph.hpp"
#include "sws/corpus.hpp"
#include "sws/weakness.hpp"

namespace sws::synthpipe {

enum class Stage { generated, structurally_ok, quality_ok, answered, difficulty_ok, rejected };

enum class RejectionReason {
    structure,
    quality,
    inconsistent_answer,
    too_easy,
    too_hard,
    student_teacher_disagreement,
};

std::string to_string(Stage stage);
std::string to_string(RejectionReason reason);

enum class Rating { bad, acceptable, perfect };

struct QualityVote {
    std::string rater_id;
    Rating rating = Rating::acceptable;
};

std::optional<Rating> parse_rating(const std::string& completion);

// Inclusive rollout-accuracy interval a candidate must land in to be kept.
struct DifficultyBand {
    double acc_low = 0.25;
    double acc_high = 0.75;

    void validate() const;
    static DifficultyBand simple() { return {5.0 / 8.0, 7.0 / 8.0}; }
    static DifficultyBand medium() { return {3.0 / 8.0, 5.0 / 8.0}; }
    static DifficultyBand hard() { return {1.0 / 8.0, 4.0 / 8.0}; }
};

// Lifecycle record of one synthesis attempt.
struct SyntheticCandidate {
    std::string id;
    std::string category;
    conceptgraph::ConceptSet concepts;
    std::string prompt_text;
    std::string problem_text;
    std::string rationale;
    Stage stage = Stage::generated;
    std::optional<RejectionReason> rejection_reason;
    std::string answer;
    double answer_support = 0.0;
    std::optional<double> rollout_accuracy;
    std::string note;  // backend-error detail when a stage could not run
};

// ---- Individual filters ----------------------------------------------------

// Substitutes {category}, {concepts} and {difficulty}. The first two are
// required; difficulty defaults to the configured fixed label.
std::string render_generation_prompt(const std::string& category,
                                     const conceptgraph::ConceptSet& concepts,
                                     const std::string& prompt_template,
                                     const std::string& difficulty_label = "competition");

struct StructuralDetector {
    std::string name;
    std::regex pattern;
};

// Option lists, multi-part markers, proof imperatives.
const std::vector<StructuralDetector>& default_detectors();

// Returns the name of the detector that fired, or nullopt to accept.
std::optional<std::string> structural_filter(
    const std::string& problem_text,
    const std::vector<StructuralDetector>& detectors = default_detectors());

// Any bad vote disqualifies; otherwise accept iff at least
// `perfect_threshold` perfect votes.
bool aggregate_quality(const std::vector<QualityVote>& votes, int perfect_threshold);

struct LabeledAnswer {
    std::string answer;
    double support = 0.0;
};

// Groups responses into equivalence classes (transitive closure over the
// pairwise relation) and keeps the majority class if it reaches half of all
// responses. A tie between maximal classes rejects.
std::optional<LabeledAnswer> label_answer(const std::vector<std::string>& responses,
                                          const answers::Equivalence& equivalent);

// Inclusive band check; below means the problem is too hard, above too easy.
std::optional<RejectionReason> difficulty_filter(double rollout_accuracy,
                                                 const DifficultyBand& band);

// Weak-to-strong revision: the teacher label stands only if the student
// reproduces it in at least `threshold` of its responses.
bool student_teacher_consistency(const std::string& teacher_answer,
                                 const std::vector<std::string>& student_responses,
                                 const answers::Equivalence& equivalent,
                                 double threshold = 0.25);

// ---- Orchestration ---------------------------------------------------------

struct PipelineBackends {
    backends::TextBackend* generator = nullptr;
    backends::TextBackend* rater = nullptr;
    backends::TextBackend* solver = nullptr;
    backends::TextBackend* student_solver = nullptr;  // enables the revision pass
    // (problem_text, category, n_rollouts, seed) -> accuracy fraction in [0,1]
    std::function<double(const std::string&, const std::string&, int, std::uint64_t)> rollout;
};

struct PipelineConfig {
    std::string generation_template =
        "Write one self-contained {difficulty}-level problem in {category} that combines the "
        "following concepts: {concepts}. State only the problem.";
    // Rating prompt wrapped around the candidate statement; {problem} required.
    std::string quality_template = "{problem}";
    std::string difficulty_label = "competition";
    std::size_t k_concepts = 0;  // 0 = uniform draw in [k_min, k_max]
    std::size_t k_min = 2;
    std::size_t k_max = 3;
    double tau = 1.0;
    double co_scale = 1.0;
    int n_quality_raters = 3;
    int perfect_threshold = 2;
    int n_answer_samples = 8;
    double consistency_threshold = 0.5;
    double student_consistency_threshold = 0.25;
    DifficultyBand band;
    int n_rollouts = 8;
    int max_retries = 2;
    int parallelism = 1;
    std::uint64_t seed = 0;
    std::size_t final_total = 0;  // 0 = keep every survivor
    std::string id_prefix = "syn";
    answers::Equivalence equivalent = answers::default_equivalence();
};

// Stage-by-stage bookkeeping; inputs and rejections reconcile exactly with
// the generated total.
struct PipelineReport {
    std::size_t generated = 0;
    std::size_t rejected_structure = 0;
    std::size_t rejected_quality = 0;  // includes exhausted-backend candidates
    std::size_t rejected_inconsistent_answer = 0;
    std::size_t rejected_student_teacher = 0;
    std::size_t rejected_too_easy = 0;
    std::size_t rejected_too_hard = 0;
    std::size_t backend_failures = 0;
    std::size_t survivors = 0;
    std::size_t selected = 0;
    std::size_t shortfall = 0;
    std::map<std::string, std::size_t> per_category_generated;
    std::map<std::string, std::size_t> per_category_survivors;
    std::map<std::string, std::size_t> per_category_selected;

    std::size_t rejected_total() const {
        return rejected_structure + rejected_quality + rejected_inconsistent_answer +
               rejected_student_teacher + rejected_too_easy + rejected_too_hard;
    }
    std::size_t quality_stage_input() const { return generated - rejected_structure; }
    double quality_rejection_rate() const {
        const auto in = quality_stage_input();
        return in == 0 ? 0.0 : static_cast<double>(rejected_quality) / static_cast<double>(in);
    }
};

std::string report_to_json(const PipelineReport& report);

struct PipelineResult {
    corpus::ProblemSet problems;  // the selected synthetic set
    PipelineReport report;
    std::vector<SyntheticCandidate> candidates;  // full audit trail, id order
};

// Samples concept sets per the plan, generates candidates, runs the cascade
// structural -> quality -> answer [-> student consistency] -> difficulty,
// then trims survivors to `final_total` using the plan weights, pushing any
// per-category shortfall onto categories that still have surviving pool.
// Deterministic for a fixed seed at any parallelism.
PipelineResult run_pipeline(const weakness::AllocationPlan& plan,
                            const std::map<std::string, conceptgraph::ConceptGraph>& graphs,
                            const PipelineBackends& backends, const PipelineConfig& config);

}  // namespace sws::synthpipe
