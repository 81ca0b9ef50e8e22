#include "sws/simulate.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "sws/backends.hpp"
#include "sws/rng.hpp"
#include "sws/weakness.hpp"

namespace sws::sim {

using backends::StudentModel;
using corpus::Problem;
using corpus::ProblemSet;
using corpus::ValidationError;
using nlohmann::json;

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
    return out;
}

ProblemSet build_initial_set(const SimulationConfig& config) {
    ProblemSet set("initial");
    Rng rng(derive_seed(config.seed, "dataset"));
    for (const auto& category : config.categories) {
        const std::string cat_slug = slug(category);
        for (int i = 0; i < config.problems_per_category; ++i) {
            Problem p;
            p.id = "orig-" + cat_slug + "-" + std::to_string(i);
            const std::uint64_t flavor = rng.next_u64() % 100000;
            p.text = "Exercise " + std::to_string(i) + " in " + category +
                     ": evaluate expression " + std::to_string(flavor) + ".";
            p.category = category;
            p.answer = std::to_string(flavor % 977);
            p.source = corpus::Source::original;
            const int n_concepts = 2 + static_cast<int>(rng.next_index(3));
            for (int c = 0; c < n_concepts; ++c) {
                const auto idx = rng.next_index(static_cast<std::size_t>(config.concept_pool));
                const std::string concept_name = cat_slug + "-c" + std::to_string(idx);
                if (std::find(p.concepts.begin(), p.concepts.end(), concept_name) ==
                    p.concepts.end())
                    p.concepts.push_back(concept_name);
            }
            set.add(std::move(p));
        }
    }
    return set;
}

StudentModel make_student(const SimulationConfig& config) {
    StudentModel model;
    model.learning_rate = config.learning_rate;
    for (const auto& category : config.categories)
        model.skill[category] =
            category == config.weak_category ? config.weak_skill : config.base_skill;
    return model;
}

struct EpochStats {
    double keep_fraction = 0.0;
    double all_correct_fraction = 0.0;
};

// One batch-style epoch: rollout probabilities come from the epoch-start
// skills, updates are applied afterwards in problem order, so results do not
// depend on scheduling.
EpochStats train_epoch(StudentModel& model, const ProblemSet& problems, int epoch,
                       std::uint64_t phase_seed, const SimulationConfig& config,
                       std::map<std::string, std::vector<double>>* traces,
                       bool stats_synthetic_only) {
    struct Outcome {
        double accuracy = 0.0;
        double difficulty = 0.0;
        bool kept = false;
    };
    const StudentModel snapshot = model;
    std::vector<Outcome> outcomes(problems.size());
    const auto& items = problems.items();
    parallel_for(items.size(), config.parallelism, [&](std::size_t i) {
        const auto& p = items[i];
        Outcome& out = outcomes[i];
        out.difficulty = backends::mock_problem_difficulty(p.text);
        const double prob = backends::student_accuracy(snapshot, p.category, out.difficulty);
        Rng rng(derive_seed(derive_seed(phase_seed, p.id), static_cast<std::uint64_t>(epoch)));
        const int correct = rng.next_binomial(config.group_size, prob);
        out.accuracy = static_cast<double>(correct) / config.group_size;
        out.kept = out.accuracy > config.clip.acc_lower && out.accuracy < config.clip.acc_upper;
    });

    EpochStats stats;
    std::size_t counted = 0, kept = 0, all_correct = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& p = items[i];
        const auto& out = outcomes[i];
        backends::student_train_step(model, p.category, out.difficulty, out.kept);
        if (traces) (*traces)[p.id].push_back(out.accuracy);
        if (stats_synthetic_only && p.source != corpus::Source::synthetic) continue;
        ++counted;
        if (out.kept) ++kept;
        if (out.accuracy == 1.0) ++all_correct;
    }
    if (counted > 0) {
        stats.keep_fraction = static_cast<double>(kept) / static_cast<double>(counted);
        stats.all_correct_fraction =
            static_cast<double>(all_correct) / static_cast<double>(counted);
    }
    return stats;
}

std::vector<corpus::AccuracyTrace> to_traces(
    const std::map<std::string, std::vector<double>>& by_id) {
    std::vector<corpus::AccuracyTrace> traces;
    traces.reserve(by_id.size());
    for (const auto& [id, accs] : by_id) traces.push_back({id, accs});
    return traces;
}

// Graphs come from the concept lists of failed problems; categories without
// failures fall back to all their problems so every budgeted category can
// still sample.
std::map<std::string, conceptgraph::ConceptGraph> build_graphs(
    const ProblemSet& problems, const weakness::FailureReport& report,
    const SimulationConfig& config) {
    std::map<std::string, std::vector<std::vector<std::string>>> failed_lists;
    std::map<std::string, std::vector<std::vector<std::string>>> all_lists;
    for (const auto& p : problems) {
        if (p.concepts.empty()) continue;
        all_lists[p.category].push_back(p.concepts);
        if (report.failed_ids.count(p.id)) failed_lists[p.category].push_back(p.concepts);
    }
    std::map<std::string, conceptgraph::ConceptGraph> graphs;
    for (const auto& category : config.categories) {
        const auto& lists =
            failed_lists.count(category) && !failed_lists[category].empty()
                ? failed_lists[category]
                : all_lists[category];
        if (lists.empty()) continue;
        conceptgraph::ConceptGraph graph;
        graph.category = category;
        graph.matrix = conceptgraph::build_cooccurrence(lists);
        conceptgraph::EmbeddingStore store(16);
        for (const auto& concept_name : graph.matrix.vocabulary())
            store.put(concept_name, backends::mock_embed(concept_name, 16, derive_seed(config.seed, "embed")));
        graph.store = std::move(store);
        graphs.emplace(category, std::move(graph));
    }
    return graphs;
}

weakness::AllocationPlan uniform_plan(const std::vector<std::string>& categories,
                                      std::size_t budget) {
    weakness::AllocationPlan plan;
    plan.total_budget = budget;
    std::map<std::string, double> weights;
    for (const auto& category : categories)
        weights[category] = 1.0 / static_cast<double>(categories.size());
    plan.weights = weights;
    plan.per_category = weakness::apportion(weights, budget);
    return plan;
}

}  // namespace

SimulationReport run_simulation(const SimulationConfig& config) {
    if (config.categories.empty()) throw ValidationError("simulation needs categories");
    if (std::find(config.categories.begin(), config.categories.end(), config.weak_category) ==
        config.categories.end())
        throw ValidationError("weak category is not in the category set");

    const ProblemSet initial = build_initial_set(config);

    // Preliminary phase, shared by every arm.
    StudentModel prelim_model = make_student(config);
    std::map<std::string, std::vector<double>> prelim_traces;
    const std::uint64_t prelim_seed = derive_seed(config.seed, "prelim");
    for (int epoch = 1; epoch <= config.prelim_epochs; ++epoch)
        train_epoch(prelim_model, initial, epoch, prelim_seed, config, &prelim_traces, false);

    const auto report = weakness::build_failure_report(to_traces(prelim_traces), initial);
    double rate_sum = 0.0;
    for (const auto& [_, rate] : report.per_category_failure_rate) rate_sum += rate;
    if (rate_sum <= 0.0)
        throw ValidationError(
            "degenerate simulation: no weak category emerged in the preliminary phase");

    SimulationReport sim_report;
    sim_report.weak_category = config.weak_category;
    sim_report.failure_ratio_before = report.per_category_failure_rate;
    sim_report.initial_failures = report.total_failures;
    sim_report.initial_problems = report.total_problems;

    const auto graphs = build_graphs(initial, report, config);
    const auto sws_plan = weakness::allocate_budget(report, config.synthesis_budget);
    const auto flat_plan = uniform_plan(config.categories, config.synthesis_budget);

    struct ArmSetup {
        std::string name;
        const weakness::AllocationPlan* plan;
        synthpipe::DifficultyBand band;
    };
    const synthpipe::DifficultyBand default_band = config.pipeline.band;
    const std::vector<ArmSetup> arm_setups = {
        {"sws", &sws_plan, default_band},
        {"uniform", &flat_plan, default_band},
        {"band_simple", &sws_plan, synthpipe::DifficultyBand::simple()},
        {"band_medium", &sws_plan, synthpipe::DifficultyBand::medium()},
        {"band_hard", &sws_plan, synthpipe::DifficultyBand::hard()},
    };

    // Difficulty filtering rates candidates against the preliminary model,
    // exactly the state every arm starts stage two from.
    backends::MockGenerator generator({.structural_bad_rate = 0.05});
    backends::MockRater rater;
    backends::MockSolver solver({.agreement = 0.85});
    const StudentModel rated_model = prelim_model;
    synthpipe::PipelineBackends pipeline_backends;
    pipeline_backends.generator = &generator;
    pipeline_backends.rater = &rater;
    pipeline_backends.solver = &solver;
    pipeline_backends.rollout = [&rated_model, &config](const std::string& text,
                                                        const std::string& category,
                                                        int n_rollouts, std::uint64_t seed) {
        const double difficulty = backends::mock_problem_difficulty(text);
        const double prob = backends::student_accuracy(rated_model, category, difficulty);
        Rng rng(seed);
        return static_cast<double>(rng.next_binomial(n_rollouts, prob)) / n_rollouts;
    };

    const std::uint64_t stage2_seed = derive_seed(config.seed, "stage2");
    for (const auto& setup : arm_setups) {
        synthpipe::PipelineConfig pipeline_config = config.pipeline;
        pipeline_config.band = setup.band;
        pipeline_config.final_total = config.final_total;
        pipeline_config.parallelism = config.parallelism;
        pipeline_config.seed = derive_seed(config.seed, "pipeline");
        pipeline_config.id_prefix = "syn-" + setup.name;

        auto pipeline_result =
            synthpipe::run_pipeline(*setup.plan, graphs, pipeline_backends, pipeline_config);
        const ProblemSet augmented = corpus::merge_augmented(initial, pipeline_result.problems);

        ArmResult arm;
        arm.name = setup.name;
        arm.synthetic_count = pipeline_result.problems.size();
        arm.pipeline_report = pipeline_result.report;

        StudentModel model = prelim_model;
        std::map<std::string, std::vector<double>> stage2_traces;
        arm.saturation_epoch = config.augmented_epochs + 1;
        for (int epoch = 1; epoch <= config.augmented_epochs; ++epoch) {
            const auto stats =
                train_epoch(model, augmented, epoch, stage2_seed, config, &stage2_traces, true);
            arm.keep_fraction.push_back(stats.keep_fraction);
            arm.all_correct_fraction.push_back(stats.all_correct_fraction);
            if (arm.saturation_epoch > config.augmented_epochs &&
                stats.keep_fraction < config.saturation_threshold)
                arm.saturation_epoch = epoch;
        }

        // Re-apply the failure definition to the original problems over the
        // final epochs, using the same window length as the preliminary
        // phase so the two ratios are comparable.
        const std::size_t window = std::min<std::size_t>(
            static_cast<std::size_t>(config.prelim_epochs),
            static_cast<std::size_t>(config.augmented_epochs));
        std::map<std::string, std::vector<double>> original_traces;
        for (const auto& p : initial) {
            const auto& full = stage2_traces[p.id];
            original_traces[p.id] =
                std::vector<double>(full.end() - static_cast<std::ptrdiff_t>(window),
                                    full.end());
        }
        const auto after = weakness::build_failure_report(to_traces(original_traces), initial);
        arm.failure_ratio_after = after.per_category_failure_rate;
        arm.weak_drop = sim_report.failure_ratio_before.at(config.weak_category) -
                        arm.failure_ratio_after.at(config.weak_category);
        sim_report.arms.push_back(std::move(arm));
    }
    return sim_report;
}

std::string simulation_report_to_json(const SimulationReport& report) {
    json j;
    j["weak_category"] = report.weak_category;
    j["failure_ratio_before"] = report.failure_ratio_before;
    j["initial_failures"] = report.initial_failures;
    j["initial_problems"] = report.initial_problems;
    json arms = json::array();
    for (const auto& arm : report.arms) {
        json a;
        a["name"] = arm.name;
        a["failure_ratio_after"] = arm.failure_ratio_after;
        a["keep_fraction"] = arm.keep_fraction;
        a["all_correct_fraction"] = arm.all_correct_fraction;
        a["saturation_epoch"] = arm.saturation_epoch;
        a["synthetic_count"] = arm.synthetic_count;
        a["weak_drop"] = arm.weak_drop;
        a["pipeline"] = json::parse(synthpipe::report_to_json(arm.pipeline_report));
        arms.push_back(std::move(a));
    }
    j["arms"] = std::move(arms);
    return j.dump(2) + "\n";
}

void write_simulation_outputs(const SimulationReport& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir + "/report.json", std::ios::trunc);
        out << simulation_report_to_json(report);
    }
    {
        std::ofstream out(out_dir + "/failure_ratios.csv", std::ios::trunc);
        out << "arm,category,before,after\n";
        char line[256];
        for (const auto& arm : report.arms) {
            for (const auto& [category, after] : arm.failure_ratio_after) {
                std::snprintf(line, sizeof(line), "%s,%s,%.6f,%.6f\n", arm.name.c_str(),
                              category.c_str(), report.failure_ratio_before.at(category),
                              after);
                out << line;
            }
        }
    }
    {
        std::ofstream out(out_dir + "/training_curves.csv", std::ios::trunc);
        out << "arm,epoch,keep_fraction,all_correct_fraction\n";
        char line[256];
        for (const auto& arm : report.arms) {
            for (std::size_t epoch = 0; epoch < arm.keep_fraction.size(); ++epoch) {
                std::snprintf(line, sizeof(line), "%s,%zu,%.6f,%.6f\n", arm.name.c_str(),
                              epoch + 1, arm.keep_fraction[epoch],
                              arm.all_correct_fraction[epoch]);
                out << line;
            }
        }
    }
}

}  // namespace sws::sim
