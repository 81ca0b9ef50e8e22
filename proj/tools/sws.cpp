// sws: weakness-driven synthetic-problem curation pipeline.
//
// Subcommands cover the full loop: weakness reports from accuracy traces,
// failure-rate budget allocation, concept graph construction and sampling,
// synthesis with the filter cascade, nearest-neighbor selection from an
// external corpus, objective checks for rollout groups, and an end-to-end
// desk-scale simulation.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sws/backends.hpp"
#include "sws/config.hpp"
#include "sws/corpus.hpp"
#include "sws/grpokit.hpp"
#include "sws/rng.hpp"
#include "sws/selectkit.hpp"
#include "sws/simulate.hpp"
#include "sws/synthpipe.hpp"
#include "sws/weakness.hpp"

namespace {

using nlohmann::json;
using sws::config::Config;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitBackend = 2;

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw sws::corpus::ParseError("cannot open '" + path + "' for writing");
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw sws::corpus::ParseError("cannot open '" + path + "' for reading");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Config load_config(const std::string& path) {
    if (path.empty()) return Config{};
    return Config::load(path);
}

sws::grpokit::ClipConfig clip_from_config(const Config& cfg) {
    sws::grpokit::ClipConfig clip;
    clip.epsilon = cfg.get_double("grpo.epsilon", clip.epsilon);
    clip.epsilon_high = cfg.get_double("grpo.epsilon_high", clip.epsilon_high);
    clip.acc_lower = cfg.get_double("grpo.acc_lower", clip.acc_lower);
    clip.acc_upper = cfg.get_double("grpo.acc_upper", clip.acc_upper);
    clip.sample_std = cfg.get_bool("grpo.sample_std", clip.sample_std);
    clip.validate();
    return clip;
}

sws::synthpipe::PipelineConfig pipeline_from_config(const Config& cfg) {
    sws::synthpipe::PipelineConfig p;
    if (cfg.has("synthesis.template_path"))
        p.generation_template = read_file(cfg.get_string("synthesis.template_path", ""));
    if (cfg.has("synthesis.quality_template_path"))
        p.quality_template = read_file(cfg.get_string("synthesis.quality_template_path", ""));
    p.difficulty_label = cfg.get_string("synthesis.difficulty_label", p.difficulty_label);
    p.k_concepts = static_cast<std::size_t>(
        cfg.get_int("synthesis.k_concepts", static_cast<std::int64_t>(p.k_concepts)));
    p.k_min = static_cast<std::size_t>(
        cfg.get_int("synthesis.k_min", static_cast<std::int64_t>(p.k_min)));
    p.k_max = static_cast<std::size_t>(
        cfg.get_int("synthesis.k_max", static_cast<std::int64_t>(p.k_max)));
    p.tau = cfg.get_double("synthesis.tau", p.tau);
    p.co_scale = cfg.get_double("synthesis.cooccurrence_scale", p.co_scale);
    p.n_quality_raters =
        static_cast<int>(cfg.get_int("synthesis.n_quality_raters", p.n_quality_raters));
    p.perfect_threshold =
        static_cast<int>(cfg.get_int("synthesis.perfect_threshold", p.perfect_threshold));
    p.n_answer_samples =
        static_cast<int>(cfg.get_int("synthesis.n_answer_samples", p.n_answer_samples));
    p.consistency_threshold =
        cfg.get_double("synthesis.consistency_threshold", p.consistency_threshold);
    p.student_consistency_threshold = cfg.get_double("synthesis.student_consistency_threshold",
                                                     p.student_consistency_threshold);
    p.band.acc_low = cfg.get_double("synthesis.band_acc_low", p.band.acc_low);
    p.band.acc_high = cfg.get_double("synthesis.band_acc_high", p.band.acc_high);
    p.n_rollouts = static_cast<int>(cfg.get_int("synthesis.n_rollouts", p.n_rollouts));
    p.max_retries = static_cast<int>(cfg.get_int("synthesis.max_retries", p.max_retries));
    p.parallelism = static_cast<int>(cfg.get_int("synthesis.parallelism", p.parallelism));
    p.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<std::int64_t>(p.seed)));
    p.final_total = static_cast<std::size_t>(
        cfg.get_int("synthesis.final_total", static_cast<std::int64_t>(p.final_total)));
    return p;
}

sws::backends::EndpointConfig endpoint_from_config(const Config& cfg, const std::string& block) {
    sws::backends::EndpointConfig e;
    e.endpoint = cfg.get_string(block + ".endpoint", "");
    e.path = cfg.get_string(block + ".path", e.path);
    e.model = cfg.get_string(block + ".model", "");
    e.api_key_env = cfg.get_string(block + ".api_key_env", "");
    e.temperature = cfg.get_double(block + ".temperature", e.temperature);
    e.max_tokens = static_cast<int>(cfg.get_int(block + ".max_tokens", e.max_tokens));
    e.parallelism = static_cast<int>(cfg.get_int(block + ".parallelism", e.parallelism));
    e.max_retries = static_cast<int>(cfg.get_int(block + ".max_retries", e.max_retries));
    e.base_delay_ms =
        static_cast<int>(cfg.get_int(block + ".base_delay_ms", e.base_delay_ms));
    e.timeout_s = static_cast<int>(cfg.get_int(block + ".timeout_s", e.timeout_s));
    e.log_path = cfg.get_string(block + ".log_path", cfg.get_string("backend.log_path", ""));
    return e;
}

// Builds the text backend for one block ([backend.generate] etc.); mock by
// default so the pipeline runs self-contained.
std::unique_ptr<sws::backends::TextBackend> backend_from_config(const Config& cfg,
                                                                const std::string& block) {
    const std::string kind = cfg.get_string(block + ".kind", "mock");
    if (kind == "http") return std::make_unique<sws::backends::HttpTextBackend>(
        endpoint_from_config(cfg, block));
    if (kind != "mock")
        throw sws::config::ConfigError("unknown backend kind '" + kind + "' in " + block);
    if (block == "backend.generate") {
        sws::backends::MockGeneratorOptions opts;
        opts.structural_bad_rate =
            cfg.get_double(block + ".structural_bad_rate", opts.structural_bad_rate);
        return std::make_unique<sws::backends::MockGenerator>(opts);
    }
    if (block == "backend.rate") {
        sws::backends::MockRaterOptions opts;
        if (cfg.get_string(block + ".preset", "") == "strict_workflow")
            opts = sws::backends::MockRaterOptions::strict_workflow();
        opts.p_bad = cfg.get_double(block + ".p_bad", opts.p_bad);
        opts.p_perfect = cfg.get_double(block + ".p_perfect", opts.p_perfect);
        return std::make_unique<sws::backends::MockRater>(opts);
    }
    if (block == "backend.solve" || block == "backend.student_solve") {
        sws::backends::MockSolverOptions opts;
        opts.agreement = cfg.get_double(block + ".agreement", opts.agreement);
        return std::make_unique<sws::backends::MockSolver>(opts);
    }
    throw sws::config::ConfigError("no mock available for block " + block);
}

sws::corpus::ProblemSet load_dataset_checked(const Config& cfg, const std::string& path) {
    const auto categories = cfg.get_list("categories", {});
    return sws::corpus::load_dataset(path, categories);
}

// ---- subcommand bodies -----------------------------------------------------

int cmd_weakness(const std::string& traces_path, const std::string& dataset_path,
                 const std::string& out_path, const std::string& failures_out,
                 const std::string& config_path) {
    const auto cfg = load_config(config_path);
    const auto problems = load_dataset_checked(cfg, dataset_path);
    const auto traces = sws::corpus::load_traces(traces_path);
    const auto report = sws::weakness::build_failure_report(traces, problems);
    if (!out_path.empty())
        write_file(out_path, sws::weakness::report_to_json(report));
    else
        std::cout << sws::weakness::report_to_json(report);
    if (!failures_out.empty()) {
        sws::corpus::ProblemSet failed("failures");
        for (const auto& p : problems)
            if (report.failed_ids.count(p.id)) failed.add(p);
        sws::corpus::save_dataset(failed, failures_out);
    }
    std::cout << "failures: " << report.total_failures << " / " << report.total_problems
              << "\n";
    return kExitOk;
}

int cmd_allocate(const std::string& report_path, long long budget,
                 long long min_per_category, const std::string& out_path) {
    if (budget < 0) throw sws::corpus::ValidationError("budget must be >= 0");
    const auto report = sws::weakness::report_from_json_file(report_path);
    const auto plan = sws::weakness::allocate_budget(
        report, static_cast<std::size_t>(budget), static_cast<std::size_t>(min_per_category));
    if (!out_path.empty())
        write_file(out_path, sws::weakness::plan_to_json(plan));
    else
        std::cout << sws::weakness::plan_to_json(plan);
    return kExitOk;
}

int cmd_concepts_build(const std::string& dataset_path, const std::string& category,
                       const std::string& report_path, bool failed_only,
                       const std::string& out_path, long long dimension, long long seed,
                       const std::string& config_path) {
    const auto cfg = load_config(config_path);
    const auto problems = sws::corpus::load_dataset(dataset_path);

    std::set<std::string> failed_ids;
    if (failed_only) {
        if (report_path.empty())
            throw sws::corpus::ValidationError("--failed-only requires --report");
        failed_ids = sws::weakness::report_from_json_file(report_path).failed_ids;
    }

    std::string extraction_template = "{problem}";
    if (cfg.has("extraction.template_path"))
        extraction_template = read_file(cfg.get_string("extraction.template_path", ""));
    if (extraction_template.find("{problem}") == std::string::npos)
        throw sws::corpus::ValidationError(
            "extraction template is missing the {problem} placeholder");

    sws::backends::MockConceptExtractor extractor;
    std::vector<std::vector<std::string>> lists;
    for (const auto& p : problems) {
        if (p.category != category) continue;
        if (failed_only && !failed_ids.count(p.id)) continue;
        if (!p.concepts.empty()) {
            lists.push_back(p.concepts);
            continue;
        }
        // Problems without concept annotations go through the extraction
        // backend (mock at desk scale).
        std::string payload = extraction_template;
        for (auto pos = payload.find("{problem}"); pos != std::string::npos;
             pos = payload.find("{problem}", pos + p.text.size()))
            payload.replace(pos, 9, p.text);
        sws::backends::BackendRequest request{sws::backends::RequestKind::generate, payload, 1,
                                              static_cast<std::uint64_t>(seed), p.id};
        const auto completion = extractor.complete(request).front();
        std::vector<std::string> extracted;
        std::string token;
        for (char c : completion + "\n") {
            if (c == '\n') {
                if (!token.empty()) extracted.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        if (!extracted.empty()) lists.push_back(std::move(extracted));
    }
    if (lists.empty())
        throw sws::corpus::ValidationError("no concept lists found for category '" + category +
                                           "'");

    sws::conceptgraph::ConceptGraph graph;
    graph.category = category;
    graph.matrix = sws::conceptgraph::build_cooccurrence(lists);
    const auto dim = static_cast<std::size_t>(
        dimension > 0 ? dimension : cfg.get_int("embed.dimension", 64));
    sws::conceptgraph::EmbeddingStore store(dim);
    for (const auto& concept_name : graph.matrix.vocabulary())
        store.put(concept_name,
                  sws::backends::mock_embed(concept_name, dim, static_cast<std::uint64_t>(seed)));
    graph.store = std::move(store);
    sws::conceptgraph::save_graph(graph, out_path);
    std::cout << "vocabulary: " << graph.matrix.vocabulary().size() << " concepts\n";
    return kExitOk;
}

int cmd_concepts_sample(const std::string& graph_path, long long k, double tau, long long n,
                        long long seed, const std::string& out_path) {
    const auto graph = sws::conceptgraph::graph_from_json_file(graph_path);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw sws::corpus::ParseError("cannot open '" + out_path + "' for writing");
    for (long long i = 0; i < n; ++i) {
        const auto set = sws::conceptgraph::sample_concept_set(
            graph, static_cast<std::size_t>(k),
            sws::derive_seed(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(i)),
            {tau, 1.0});
        json j;
        j["category"] = set.category;
        j["concepts"] = set.concepts;
        out << j.dump() << '\n';
    }
    return kExitOk;
}

int cmd_synthesize(const std::string& plan_path, const std::string& graph_dir,
                   const std::string& config_path, const std::string& out_path,
                   const std::string& report_path, long long seed, long long parallelism) {
    const auto cfg = load_config(config_path);
    const auto plan = sws::weakness::plan_from_json_file(plan_path);

    std::map<std::string, sws::conceptgraph::ConceptGraph> graphs;
    std::vector<std::filesystem::path> graph_files;
    for (const auto& entry : std::filesystem::directory_iterator(graph_dir))
        if (entry.path().extension() == ".json") graph_files.push_back(entry.path());
    std::sort(graph_files.begin(), graph_files.end());
    for (const auto& path : graph_files) {
        auto graph = sws::conceptgraph::graph_from_json_file(path.string());
        graphs.emplace(graph.category, std::move(graph));
    }

    auto pipeline_config = pipeline_from_config(cfg);
    if (seed >= 0) pipeline_config.seed = static_cast<std::uint64_t>(seed);
    if (parallelism > 0) pipeline_config.parallelism = static_cast<int>(parallelism);

    auto generator = backend_from_config(cfg, "backend.generate");
    auto rater = backend_from_config(cfg, "backend.rate");
    auto solver = backend_from_config(cfg, "backend.solve");
    std::unique_ptr<sws::backends::TextBackend> student;
    if (cfg.get_bool("synthesis.student_revision", false))
        student = backend_from_config(cfg, "backend.student_solve");

    // Rollout accuracy comes from a flat-skill student unless an external
    // trainer supplies real rollouts.
    sws::backends::StudentModel rollout_model;
    const double skill = cfg.get_double("backend.rollout.skill", 0.8);
    for (const auto& [category, _] : plan.per_category) rollout_model.skill[category] = skill;

    sws::synthpipe::PipelineBackends backends;
    backends.generator = generator.get();
    backends.rater = rater.get();
    backends.solver = solver.get();
    backends.student_solver = student.get();
    backends.rollout = [&rollout_model](const std::string& text, const std::string& category,
                                        int n_rollouts, std::uint64_t rollout_seed) {
        const double difficulty = sws::backends::mock_problem_difficulty(text);
        const double prob =
            sws::backends::student_accuracy(rollout_model, category, difficulty);
        sws::Rng rng(rollout_seed);
        return static_cast<double>(rng.next_binomial(n_rollouts, prob)) / n_rollouts;
    };

    const auto result = sws::synthpipe::run_pipeline(plan, graphs, backends, pipeline_config);
    sws::corpus::save_dataset(result.problems, out_path);
    if (!report_path.empty())
        write_file(report_path, sws::synthpipe::report_to_json(result.report));
    std::cout << "selected " << result.report.selected << " of " << result.report.generated
              << " generated candidates\n";
    return kExitOk;
}

int cmd_select(const std::string& corpus_path, const std::string& failures_path,
               const std::string& plan_path, const std::string& out_path, long long seed,
               long long dimension, bool same_category_only, long long parallelism,
               const std::string& config_path) {
    const auto cfg = load_config(config_path);
    const auto corpus_set = sws::corpus::load_dataset(corpus_path);
    const auto failures = sws::corpus::load_dataset(failures_path);
    const auto plan = sws::weakness::plan_from_json_file(plan_path);

    const auto dim = static_cast<std::size_t>(
        dimension > 0 ? dimension : cfg.get_int("embed.dimension", 64));
    const auto embed_seed = static_cast<std::uint64_t>(seed);

    sws::selectkit::EmbeddedCorpus embedded;
    for (const auto& p : corpus_set)
        embedded.add({p.id, p.category, sws::backends::mock_embed(p.text, dim, embed_seed)});

    std::map<std::string, std::vector<std::vector<double>>> failure_embeddings;
    for (const auto& p : failures)
        failure_embeddings[p.category].push_back(
            sws::backends::mock_embed(p.text, dim, embed_seed));

    sws::selectkit::SelectOptions options;
    options.same_category_only = same_category_only;
    options.threads = parallelism > 0 ? static_cast<int>(parallelism) : 1;
    const auto result =
        sws::selectkit::select_weakness_driven(embedded, failure_embeddings, plan, options);

    sws::corpus::ProblemSet selected("selected");
    char buf[32];
    for (const auto& [category, picks] : result.per_category) {
        for (const auto& pick : picks) {
            auto p = corpus_set.at(pick.id);
            p.source = sws::corpus::Source::selected;
            std::snprintf(buf, sizeof(buf), "%.6f", pick.distance);
            p.metadata["selection_distance"] = buf;
            p.metadata["selection_category"] = category;
            selected.add(std::move(p));
        }
    }
    sws::corpus::save_dataset(selected, out_path);
    std::cout << "selected " << selected.size() << " problems\n";
    return kExitOk;
}

int cmd_grpo_check(const std::string& groups_path, const std::string& config_path,
                   bool no_filter, long long parallelism) {
    const auto cfg = load_config(config_path);
    const auto clip = clip_from_config(cfg);
    const auto groups = sws::grpokit::load_groups(groups_path);
    const auto result = sws::grpokit::batch_objective(
        groups, clip, !no_filter, parallelism > 0 ? static_cast<int>(parallelism) : 1);

    char line[128];
    std::snprintf(line, sizeof(line), "objective: %.9f\n", result.objective);
    std::cout << line;
    std::cout << "groups_kept: " << result.groups_kept << "\n";
    std::cout << "groups_dropped: " << result.groups_dropped << "\n";
    std::cout << "token_total: " << result.token_total << "\n";
    if (!result.advantages.empty()) {
        double mean = 0.0, lo = result.advantages.front(), hi = result.advantages.front();
        for (double a : result.advantages) {
            mean += a;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        mean /= static_cast<double>(result.advantages.size());
        std::snprintf(line, sizeof(line), "advantage_mean: %.9f\nadvantage_min: %.9f\nadvantage_max: %.9f\n",
                      mean, lo, hi);
        std::cout << line;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, long long seed,
                 long long parallelism) {
    const auto cfg = load_config(config_path);
    sws::sim::SimulationConfig sim;
    sim.categories = cfg.get_list("categories", sim.categories);
    sim.weak_category = cfg.get_string("simulate.weak_category", sim.weak_category);
    sim.problems_per_category = static_cast<int>(
        cfg.get_int("simulate.problems_per_category", sim.problems_per_category));
    sim.base_skill = cfg.get_double("simulate.base_skill", sim.base_skill);
    sim.weak_skill = cfg.get_double("simulate.weak_skill", sim.weak_skill);
    sim.learning_rate = cfg.get_double("simulate.learning_rate", sim.learning_rate);
    sim.prelim_epochs =
        static_cast<int>(cfg.get_int("simulate.prelim_epochs", sim.prelim_epochs));
    sim.augmented_epochs =
        static_cast<int>(cfg.get_int("simulate.augmented_epochs", sim.augmented_epochs));
    sim.group_size = static_cast<int>(cfg.get_int("simulate.group_size", sim.group_size));
    sim.synthesis_budget = static_cast<std::size_t>(cfg.get_int(
        "simulate.synthesis_budget", static_cast<std::int64_t>(sim.synthesis_budget)));
    sim.final_total = static_cast<std::size_t>(
        cfg.get_int("simulate.final_total", static_cast<std::int64_t>(sim.final_total)));
    sim.saturation_threshold =
        cfg.get_double("simulate.saturation_threshold", sim.saturation_threshold);
    sim.clip = clip_from_config(cfg);
    sim.pipeline = pipeline_from_config(cfg);
    if (seed >= 0) sim.seed = static_cast<std::uint64_t>(seed);
    if (parallelism > 0) sim.parallelism = static_cast<int>(parallelism);

    const auto report = sws::sim::run_simulation(sim);
    sws::sim::write_simulation_outputs(report, out_dir);

    char line[160];
    for (const auto& arm : report.arms) {
        std::snprintf(line, sizeof(line), "%s: weak_drop=%.6f saturation_epoch=%d synthetic=%zu\n",
                      arm.name.c_str(), arm.weak_drop, arm.saturation_epoch,
                      arm.synthetic_count);
        std::cout << line;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weakness-driven synthetic problem curation"};
    app.require_subcommand(1);

    // weakness
    auto* weakness = app.add_subcommand("weakness", "identify failure cases from traces");
    std::string w_traces, w_dataset, w_out, w_failures_out, w_config;
    weakness->add_option("--traces", w_traces, "trace JSONL file")->required();
    weakness->add_option("--dataset", w_dataset, "dataset JSONL file")->required();
    weakness->add_option("--out", w_out, "failure report output path");
    weakness->add_option("--failures-out", w_failures_out, "write failed problems here");
    weakness->add_option("--config", w_config, "config file");

    // allocate
    auto* allocate = app.add_subcommand("allocate", "split a budget across categories");
    std::string a_report, a_out, a_dataset;
    long long a_budget = 0, a_min = 0;
    allocate->add_option("--report", a_report, "failure report path")->required();
    allocate->add_option("--budget", a_budget, "total budget")->required();
    allocate->add_option("--min-per-category", a_min, "floor per category");
    allocate->add_option("--out", a_out, "plan output path");
    allocate->add_option("--dataset", a_dataset, "dataset JSONL file (unused)");

    // concepts build / sample
    auto* concepts = app.add_subcommand("concepts", "concept graph operations");
    concepts->require_subcommand(1);
    auto* cbuild = concepts->add_subcommand("build", "build a category concept graph");
    std::string cb_dataset, cb_category, cb_report, cb_out, cb_config;
    bool cb_failed_only = false;
    long long cb_dim = 0, cb_seed = 42;
    cbuild->add_option("--dataset", cb_dataset, "dataset JSONL file")->required();
    cbuild->add_option("--category", cb_category, "category label")->required();
    cbuild->add_option("--out", cb_out, "graph output path")->required();
    cbuild->add_option("--report", cb_report, "failure report for --failed-only");
    cbuild->add_flag("--failed-only", cb_failed_only,
                     "restrict the pool to failure cases from --report");
    cbuild->add_option("--dimension", cb_dim, "embedding dimension");
    cbuild->add_option("--seed", cb_seed, "embedding seed");
    cbuild->add_option("--config", cb_config, "config file");

    auto* csample = concepts->add_subcommand("sample", "sample concept combinations");
    std::string cs_graph, cs_out, cs_dataset;
    long long cs_k = 3, cs_n = 100, cs_seed = 42;
    double cs_tau = 1.0;
    csample->add_option("--graph", cs_graph, "graph JSON path")->required();
    csample->add_option("--k", cs_k, "concepts per combination");
    csample->add_option("--tau", cs_tau, "softmax temperature");
    csample->add_option("--n", cs_n, "number of combinations");
    csample->add_option("--seed", cs_seed, "sampling seed");
    csample->add_option("--out", cs_out, "combos output path")->required();
    csample->add_option("--dataset", cs_dataset, "dataset JSONL file (unused)");

    // synthesize
    auto* synthesize = app.add_subcommand("synthesize", "generate and filter problems");
    std::string s_plan, s_graphs, s_config, s_out, s_report, s_dataset;
    long long s_seed = -1, s_parallelism = 0;
    synthesize->add_option("--plan", s_plan, "allocation plan path")->required();
    synthesize->add_option("--graph-dir", s_graphs, "directory of graph JSON files")->required();
    synthesize->add_option("--config", s_config, "config file");
    synthesize->add_option("--out", s_out, "synthetic dataset output")->required();
    synthesize->add_option("--report", s_report, "pipeline report output");
    synthesize->add_option("--seed", s_seed, "override config seed");
    synthesize->add_option("--parallelism", s_parallelism, "worker threads");
    synthesize->add_option("--dataset", s_dataset, "dataset JSONL file (unused)");

    // select
    auto* select = app.add_subcommand("select", "nearest-neighbor selection from a corpus");
    std::string sel_corpus, sel_failures, sel_plan, sel_out, sel_config;
    long long sel_seed = 42, sel_dim = 0, sel_parallelism = 0;
    bool sel_same_cat = false;
    select->add_option("--corpus", sel_corpus, "corpus dataset JSONL")->required();
    select->add_option("--failures", sel_failures, "failure-case dataset JSONL")->required();
    select->add_option("--plan", sel_plan, "allocation plan path")->required();
    select->add_option("--out", sel_out, "selected dataset output")->required();
    select->add_option("--seed", sel_seed, "embedding seed");
    select->add_option("--dimension", sel_dim, "embedding dimension");
    select->add_flag("--same-category-only", sel_same_cat,
                     "rank only corpus items of the budgeted category");
    select->add_option("--parallelism", sel_parallelism, "worker threads");
    select->add_option("--config", sel_config, "config file");
    std::string sel_dataset;
    select->add_option("--dataset", sel_dataset, "dataset JSONL file (unused)");

    // grpo-check
    auto* grpo = app.add_subcommand("grpo-check", "objective check for rollout groups");
    std::string g_groups, g_config, g_dataset;
    bool g_no_filter = false;
    long long g_parallelism = 0;
    grpo->add_option("--groups", g_groups, "rollout group JSONL")->required();
    grpo->add_option("--config", g_config, "config file");
    grpo->add_flag("--no-filter", g_no_filter, "skip the accuracy-band prompt filter");
    grpo->add_option("--parallelism", g_parallelism, "worker threads");
    grpo->add_option("--dataset", g_dataset, "dataset JSONL file (unused)");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "end-to-end desk-scale simulation");
    std::string sim_config, sim_out_dir, sim_dataset;
    long long sim_seed = -1, sim_parallelism = 0;
    simulate->add_option("--config", sim_config, "config file");
    simulate->add_option("--out-dir", sim_out_dir, "output directory")->required();
    simulate->add_option("--seed", sim_seed, "override config seed");
    simulate->add_option("--parallelism", sim_parallelism, "worker threads");
    simulate->add_option("--dataset", sim_dataset, "dataset JSONL file (unused)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (app.got_subcommand(weakness))
            return cmd_weakness(w_traces, w_dataset, w_out, w_failures_out, w_config);
        if (app.got_subcommand(allocate))
            return cmd_allocate(a_report, a_budget, a_min, a_out);
        if (app.got_subcommand(concepts)) {
            if (concepts->got_subcommand(cbuild))
                return cmd_concepts_build(cb_dataset, cb_category, cb_report, cb_failed_only,
                                          cb_out, cb_dim, cb_seed, cb_config);
            return cmd_concepts_sample(cs_graph, cs_k, cs_tau, cs_n, cs_seed, cs_out);
        }
        if (app.got_subcommand(synthesize))
            return cmd_synthesize(s_plan, s_graphs, s_config, s_out, s_report, s_seed,
                                  s_parallelism);
        if (app.got_subcommand(select))
            return cmd_select(sel_corpus, sel_failures, sel_plan, sel_out, sel_seed, sel_dim,
                              sel_same_cat, sel_parallelism, sel_config);
        if (app.got_subcommand(grpo))
            return cmd_grpo_check(g_groups, g_config, g_no_filter, g_parallelism);
        if (app.got_subcommand(simulate))
            return cmd_simulate(sim_config, sim_out_dir, sim_seed, sim_parallelism);
    } catch (const sws::backends::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
