#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sws/grpokit.hpp"
#include "sws/synthpipe.hpp"

namespace sws::sim {

// Desk-scale end-to-end loop: a synthetic student trains on a generated
// initial set, its accuracy traces drive weakness identification, budget
// allocation, problem synthesis and augmented training, and arms with
// different allocation strategies / difficulty bands are compared under
// common random numbers.
struct SimulationConfig {
    std::vector<std::string> categories = {
        "Prealgebra",     "Algebra",       "Intermediate Algebra", "Precalculus",
        "Number Theory",  "Geometry",      "Counting & Probability"};
    std::string weak_category = "Geometry";
    int problems_per_category = 64;
    double base_skill = 1.0;
    double weak_skill = -2.5;
    double learning_rate = 0.015;
    int prelim_epochs = 6;
    int augmented_epochs = 12;
    int group_size = 8;
    std::size_t synthesis_budget = 2000;  // generation attempts across categories
    std::size_t final_total = 320;        // synthetic problems merged for stage two
    double saturation_threshold = 0.5;    // keep-fraction level defining saturation
    int concept_pool = 12;                // concepts per category in the initial set
    grpokit::ClipConfig clip;
    synthpipe::PipelineConfig pipeline;   // band is overridden per arm
    std::uint64_t seed = 42;
    int parallelism = 1;
};

struct ArmResult {
    std::string name;
    std::map<std::string, double> failure_ratio_after;
    std::vector<double> keep_fraction;         // per epoch, synthetic subset
    std::vector<double> all_correct_fraction;  // per epoch, synthetic subset
    int saturation_epoch = 0;  // first epoch keep < threshold; epochs+1 if never
    std::size_t synthetic_count = 0;
    double weak_drop = 0.0;  // before minus after on the weak category
    synthpipe::PipelineReport pipeline_report;
};

struct SimulationReport {
    std::string weak_category;
    std::map<std::string, double> failure_ratio_before;
    std::size_t initial_failures = 0;
    std::size_t initial_problems = 0;
    std::vector<ArmResult> arms;  // sws, uniform, band_simple, band_medium, band_hard
};

SimulationReport run_simulation(const SimulationConfig& config);

// report.json plus plot-ready CSV tables (failure_ratios.csv with columns
// arm,category,before,after and training_curves.csv with columns
// arm,epoch,keep_fraction,all_correct_fraction).
void write_simulation_outputs(const SimulationReport& report, const std::string& out_dir);

std::string simulation_report_to_json(const SimulationReport& report);

}  // namespace sws::sim
