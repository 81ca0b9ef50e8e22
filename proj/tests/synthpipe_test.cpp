#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "sws/backends.hpp"
#include "sws/corpus.hpp"
#include "sws/rng.hpp"
#include "sws/synthpipe.hpp"

using namespace sws::synthpipe;
using sws::corpus::ValidationError;

namespace {

sws::conceptgraph::ConceptSet make_set(std::vector<std::string> concepts) {
    sws::conceptgraph::ConceptSet s;
    s.category = "Geometry";
    s.concepts = std::move(concepts);
    return s;
}

std::vector<QualityVote> votes(std::initializer_list<Rating> ratings) {
    std::vector<QualityVote> v;
    int i = 0;
    for (Rating r : ratings) v.push_back({"rater-" + std::to_string(i++), r});
    return v;
}

const auto eq = sws::answers::default_equivalence();

// Everything passes: no structural rejects, unanimous perfect votes, fully
// consistent answers, and the widest band.
PipelineConfig permissive_config() {
    PipelineConfig config;
    config.band = {0.0, 1.0};
    config.k_concepts = 2;
    config.seed = 7;
    return config;
}

struct PipelineFixture {
    sws::backends::MockGenerator generator;
    sws::backends::MockRater rater;
    sws::backends::MockSolver solver;
    std::function<double(const std::string&, const std::string&, int, std::uint64_t)> rollout;
    PipelineBackends backends;

    explicit PipelineFixture(sws::backends::MockGeneratorOptions gen_opts = {},
                             sws::backends::MockRaterOptions rater_opts = {.p_bad = 0.0,
                                                                           .p_perfect = 1.0},
                             sws::backends::MockSolverOptions solver_opts = {.agreement = 1.0})
        : generator(gen_opts), rater(rater_opts), solver(solver_opts) {
        rollout = [](const std::string& text, const std::string&, int n, std::uint64_t seed) {
            sws::Rng rng(seed);
            const double difficulty = sws::backends::mock_problem_difficulty(text);
            const double p = 1.0 / (1.0 + std::exp(-(0.8 - difficulty)));
            return static_cast<double>(rng.next_binomial(n, p)) / n;
        };
        backends.generator = &generator;
        backends.rater = &rater;
        backends.solver = &solver;
        backends.rollout = rollout;
    }
};

std::map<std::string, sws::conceptgraph::ConceptGraph> two_graphs() {
    std::map<std::string, sws::conceptgraph::ConceptGraph> graphs;
    for (const std::string category : {"Algebra", "Geometry"}) {
        sws::conceptgraph::ConceptGraph graph;
        graph.category = category;
        std::vector<std::vector<std::string>> lists;
        for (int i = 0; i < 8; ++i)
            lists.push_back({category + "-c" + std::to_string(i % 4),
                             category + "-c" + std::to_string((i + 1) % 4)});
        graph.matrix = sws::conceptgraph::build_cooccurrence(lists);
        sws::conceptgraph::EmbeddingStore store(8);
        for (const auto& name : graph.matrix.vocabulary())
            store.put(name, sws::backends::mock_embed(name, 8, 3));
        graph.store = std::move(store);
        graphs.emplace(category, std::move(graph));
    }
    return graphs;
}

sws::weakness::AllocationPlan two_category_plan(std::size_t a, std::size_t g) {
    sws::weakness::AllocationPlan plan;
    plan.per_category = {{"Algebra", a}, {"Geometry", g}};
    const double total = static_cast<double>(a + g);
    plan.weights = {{"Algebra", a / total}, {"Geometry", g / total}};
    plan.total_budget = a + g;
    return plan;
}

}  // namespace

TEST_CASE("prompt rendering substitutes every placeholder") {
    const auto set = make_set({"a", "b"});
    CHECK(render_generation_prompt("Geometry", set, "Q about {category}: {concepts}") ==
          "Q about Geometry: a, b");
    CHECK(render_generation_prompt("Geometry", set,
                                   "{difficulty} {category} on {concepts}", "competition") ==
          "competition Geometry on a, b");

    SUBCASE("missing placeholders are template errors") {
        CHECK_THROWS_AS(render_generation_prompt("G", set, "no concepts here {category}"),
                        ValidationError);
        CHECK_THROWS_AS(render_generation_prompt("G", set, "no category {concepts}"),
                        ValidationError);
    }

    SUBCASE("a full template mentions each concept exactly once") {
        const std::string full_template =
            "You are given the category {category} and the concept list: {concepts}.\n"
            "First write a short rationale for how the concepts interact, then state one\n"
            "self-contained {difficulty}-level problem with a single numeric answer.\n"
            "Avoid multiple-choice, multi-part, and proof-style formulations.";
        const auto set3 = make_set({"angle bisector", "power of a point", "similarity"});
        const auto rendered =
            render_generation_prompt("Geometry", set3, full_template, "competition");
        for (const auto& concept_name : set3.concepts) {
            std::size_t hits = 0;
            for (auto pos = rendered.find(concept_name); pos != std::string::npos;
                 pos = rendered.find(concept_name, pos + 1))
                ++hits;
            CHECK(hits == 1);
        }
    }
}

TEST_CASE("structural filter catches the configured shapes") {
    CHECK_FALSE(structural_filter("What is 2+3?").has_value());
    CHECK(structural_filter("Which is largest? (A) 1 (B) 2 (C) 3") == std::string("option_list"));
    CHECK(structural_filter("Prove that the square root of 2 is irrational.") ==
          std::string("proof"));
    CHECK(structural_filter("Show that x divides y.") == std::string("proof"));
    CHECK(structural_filter("(a) find x (b) find y") == std::string("multi_part"));
    CHECK(structural_filter("Part 1: compute. Part 2: explain.") == std::string("multi_part"));
    CHECK_THROWS_AS(structural_filter(""), ValidationError);
}

TEST_CASE("quality aggregation: any bad vote disqualifies") {
    CHECK_FALSE(aggregate_quality(votes({Rating::perfect, Rating::perfect, Rating::bad}), 2));
    CHECK(aggregate_quality(votes({Rating::perfect, Rating::perfect, Rating::acceptable}), 2));
    CHECK_FALSE(aggregate_quality(votes({Rating::acceptable, Rating::acceptable}), 1));
    CHECK(aggregate_quality(votes({Rating::perfect}), 1));
    CHECK_THROWS_AS(aggregate_quality({}, 1), ValidationError);
}

TEST_CASE("rating strings parse leniently") {
    CHECK(parse_rating("perfect") == Rating::perfect);
    CHECK(parse_rating("Overall: ACCEPTABLE.") == Rating::acceptable);
    CHECK(parse_rating("this one is bad, reject") == Rating::bad);
    CHECK(parse_rating("rating: Perfect\n") == Rating::perfect);
    CHECK_FALSE(parse_rating("no verdict at all").has_value());
}

TEST_CASE("answer labeling follows the majority class") {
    SUBCASE("worked example with 3-of-4 support") {
        const auto labeled = label_answer({"9901", "9901", "10000", "9901"}, eq);
        REQUIRE(labeled.has_value());
        CHECK(labeled->answer == "9901");
        CHECK(labeled->support == doctest::Approx(0.75));
    }
    SUBCASE("numeric equivalence merges classes") {
        const auto labeled = label_answer({"1/2", "0.5"}, eq);
        REQUIRE(labeled.has_value());
        CHECK(labeled->answer == "1/2");
        CHECK(labeled->support == doctest::Approx(1.0));
    }
    SUBCASE("pairwise-distinct answers fail") {
        CHECK_FALSE(
            label_answer({"1", "2", "3", "4", "5", "6", "7", "8"}, eq).has_value());
    }
    SUBCASE("exactly half support is accepted") {
        const auto labeled = label_answer({"7", "7", "7", "7", "1", "2", "3", "4"}, eq);
        REQUIRE(labeled.has_value());
        CHECK(labeled->support == doctest::Approx(0.5));
    }
    SUBCASE("a tie between maximal classes rejects") {
        CHECK_FALSE(label_answer({"7", "7", "9", "9"}, eq).has_value());
    }
    SUBCASE("permutation invariance") {
        std::vector<std::string> responses = {"5", "5", "5", "2", "2", "9", "5", "3"};
        const auto base = label_answer(responses, eq);
        sws::Rng rng(12);
        for (int shuffle = 0; shuffle < 20; ++shuffle) {
            for (std::size_t i = responses.size(); i > 1; --i)
                std::swap(responses[i - 1], responses[rng.next_index(i)]);
            const auto moved = label_answer(responses, eq);
            REQUIRE(moved.has_value());
            CHECK(eq(moved->answer, base->answer));
            CHECK(moved->support == base->support);
        }
    }
    SUBCASE("empty input is an error") {
        CHECK_THROWS_AS(label_answer({}, eq), ValidationError);
    }
}

TEST_CASE("difficulty filter respects inclusive bounds") {
    const DifficultyBand band{0.25, 0.75};
    CHECK_FALSE(difficulty_filter(0.25, band).has_value());
    CHECK_FALSE(difficulty_filter(0.75, band).has_value());
    CHECK(difficulty_filter(1.0, {0.0, 0.99}) == RejectionReason::too_easy);
    CHECK(difficulty_filter(1.0 / 8.0, band) == RejectionReason::too_hard);
    CHECK(difficulty_filter(0.0, band) == RejectionReason::too_hard);

    SUBCASE("monotone in accuracy: hard, kept, easy, in that order") {
        int phase = 0;  // 0=too_hard 1=accept 2=too_easy
        for (int k = 0; k <= 8; ++k) {
            const auto reason = difficulty_filter(k / 8.0, band);
            int now;
            if (reason == RejectionReason::too_hard)
                now = 0;
            else if (!reason.has_value())
                now = 1;
            else
                now = 2;
            CHECK(now >= phase);
            phase = now;
        }
    }
}

TEST_CASE("preset bands reproduce the count ranges out of 8") {
    auto kept_counts = [](const DifficultyBand& band) {
        std::vector<int> kept;
        for (int k = 0; k <= 8; ++k)
            if (!difficulty_filter(k / 8.0, band).has_value()) kept.push_back(k);
        return kept;
    };
    CHECK(kept_counts(DifficultyBand::simple()) == std::vector<int>{5, 6, 7});
    CHECK(kept_counts(DifficultyBand::medium()) == std::vector<int>{3, 4, 5});
    CHECK(kept_counts(DifficultyBand::hard()) == std::vector<int>{1, 2, 3, 4});
    CHECK(kept_counts({0.25, 0.75}) == std::vector<int>{2, 3, 4, 5, 6});
}

TEST_CASE("student-teacher consistency thresholds at one quarter") {
    CHECK(student_teacher_consistency("9901", {"9901", "9901", "1", "2", "3", "4", "5", "6"},
                                      eq));
    CHECK_FALSE(student_teacher_consistency(
        "9901", {"10000", "10000", "10000", "10000", "10000", "10000", "10000", "10000"}, eq));
    CHECK(student_teacher_consistency("x", {"x", "x", "x", "y"}, eq));
    // Exactly 25% (2 of 8) is accepted; 1 of 8 is not.
    CHECK_FALSE(
        student_teacher_consistency("9901", {"9901", "1", "2", "3", "4", "5", "6", "7"}, eq));
    CHECK_THROWS_AS(student_teacher_consistency("a", {}, eq), ValidationError);
}

TEST_CASE("run_pipeline with no rejections keeps every candidate") {
    PipelineFixture fixture;
    auto config = permissive_config();
    const auto plan = two_category_plan(6, 9);
    const auto graphs = two_graphs();
    const auto result = run_pipeline(plan, graphs, fixture.backends, config);
    CHECK(result.report.generated == 15);
    CHECK(result.report.survivors == 15);
    CHECK(result.report.selected == 15);
    CHECK(result.problems.size() == 15);
    CHECK(result.report.per_category_selected.at("Algebra") == 6);
    CHECK(result.report.per_category_selected.at("Geometry") == 9);
    for (const auto& p : result.problems) {
        CHECK(p.source == sws::corpus::Source::synthetic);
        CHECK_FALSE(p.concepts.empty());
        CHECK_FALSE(p.answer.empty());
    }
}

TEST_CASE("pipeline report counts reconcile with the generated total") {
    PipelineFixture fixture({.structural_bad_rate = 0.15},
                            {.p_bad = 0.10, .p_perfect = 0.55},
                            {.agreement = 0.70});
    PipelineConfig config;
    config.band = {0.25, 0.75};
    config.k_concepts = 2;
    config.seed = 21;
    const auto plan = two_category_plan(120, 160);
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    const auto& report = result.report;
    CHECK(report.generated == 280);
    CHECK(report.rejected_total() + report.survivors == report.generated);
    CHECK(report.rejected_structure > 0);
    CHECK(report.rejected_quality > 0);

    SUBCASE("every rejected candidate carries exactly one reason") {
        for (const auto& cand : result.candidates) {
            if (cand.stage == Stage::rejected)
                CHECK(cand.rejection_reason.has_value());
            else
                CHECK_FALSE(cand.rejection_reason.has_value());
        }
    }
    SUBCASE("nothing reaches the difficulty stage without an accepted answer") {
        for (const auto& cand : result.candidates)
            if (cand.rollout_accuracy.has_value()) {
                CHECK_FALSE(cand.answer.empty());
                CHECK(cand.answer_support >= 0.5);
            }
    }
    SUBCASE("survivor metadata records support and accuracy") {
        for (const auto& p : result.problems) {
            CHECK(p.metadata.count("answer_support") == 1);
            CHECK(p.metadata.count("rollout_accuracy") == 1);
        }
    }
}

TEST_CASE("pipeline output is independent of the thread count") {
    const auto plan = two_category_plan(40, 60);
    const auto graphs = two_graphs();
    auto run_with = [&](int parallelism) {
        PipelineFixture fixture({.structural_bad_rate = 0.1},
                                {.p_bad = 0.05, .p_perfect = 0.6}, {.agreement = 0.8});
        PipelineConfig config;
        config.band = {0.25, 0.75};
        config.seed = 909;
        config.parallelism = parallelism;
        const auto result = run_pipeline(plan, graphs, fixture.backends, config);
        const auto dir = std::filesystem::temp_directory_path() / "sws_pipe_test";
        std::filesystem::create_directories(dir);
        const auto path = dir / ("out_p" + std::to_string(parallelism) + ".jsonl");
        sws::corpus::save_dataset(result.problems, path.string());
        std::ifstream in(path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    CHECK(run_with(1) == run_with(8));
}

TEST_CASE("final_total trims survivors along the plan weights") {
    PipelineFixture fixture;
    auto config = permissive_config();
    config.final_total = 10;
    const auto plan = two_category_plan(20, 30);  // weights 0.4 / 0.6
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.selected == 10);
    CHECK(result.problems.size() == 10);
    CHECK(result.report.per_category_selected.at("Algebra") == 4);
    CHECK(result.report.per_category_selected.at("Geometry") == 6);
    CHECK(result.report.survivors == 50);
}

TEST_CASE("shortfall in one category is pushed onto the others") {
    PipelineFixture fixture;
    auto config = permissive_config();
    config.final_total = 24;
    // Geometry has weight 0.6 but only 5 survivors; Algebra absorbs the rest.
    const auto plan = two_category_plan(30, 5);
    auto weighted_plan = plan;
    weighted_plan.weights = {{"Algebra", 0.4}, {"Geometry", 0.6}};
    const auto result = run_pipeline(weighted_plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.selected == 24);
    CHECK(result.report.per_category_selected.at("Geometry") == 5);
    CHECK(result.report.per_category_selected.at("Algebra") == 19);
}

TEST_CASE("a target beyond every pool records the shortfall") {
    PipelineFixture fixture;
    auto config = permissive_config();
    config.final_total = 100;
    const auto plan = two_category_plan(4, 4);
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.selected == 8);
    CHECK(result.report.shortfall == 92);
}

TEST_CASE("backend failures are retried and then rejected with a note") {
    struct FlakyGenerator : sws::backends::TextBackend {
        std::vector<std::string> complete(const sws::backends::BackendRequest&) override {
            throw sws::backends::BackendError("synthetic outage");
        }
    };
    FlakyGenerator flaky;
    PipelineFixture fixture;
    fixture.backends.generator = &flaky;
    auto config = permissive_config();
    config.max_retries = 2;
    const auto plan = two_category_plan(2, 2);
    // All candidates fail generation; zero survivors is a pipeline error.
    CHECK_THROWS_AS(run_pipeline(plan, two_graphs(), fixture.backends, config),
                    ValidationError);
}

TEST_CASE("partial backend failures leave an audit note") {
    // Fails exactly for one candidate id, succeeds otherwise.
    struct SelectiveGenerator : sws::backends::TextBackend {
        sws::backends::MockGenerator inner;
        std::vector<std::string> complete(const sws::backends::BackendRequest& request) override {
            if (request.request_id == "syn-geometry-1")
                throw sws::backends::BackendError("synthetic outage");
            return inner.complete(request);
        }
    };
    SelectiveGenerator selective;
    PipelineFixture fixture;
    fixture.backends.generator = &selective;
    auto config = permissive_config();
    const auto plan = two_category_plan(2, 3);
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.backend_failures == 1);
    CHECK(result.report.rejected_quality == 1);
    CHECK(result.report.survivors == 4);
    bool found = false;
    for (const auto& cand : result.candidates)
        if (cand.id == "syn-geometry-1") {
            found = true;
            CHECK(cand.stage == Stage::rejected);
            CHECK(cand.rejection_reason == RejectionReason::quality);
            CHECK(cand.note.find("synthetic outage") != std::string::npos);
        }
    CHECK(found);
}

TEST_CASE("the weak-to-strong revision pass drops disagreements") {
    // Teacher answers deterministically; the student never matches it.
    struct Contrarian : sws::backends::TextBackend {
        std::vector<std::string> complete(const sws::backends::BackendRequest& request) override {
            return std::vector<std::string>(request.sample_count, "-1");
        }
    };
    Contrarian student;
    PipelineFixture fixture;
    fixture.backends.student_solver = &student;
    auto config = permissive_config();
    const auto plan = two_category_plan(3, 3);
    CHECK_THROWS_AS(run_pipeline(plan, two_graphs(), fixture.backends, config),
                    ValidationError);  // every candidate rejected -> zero survivors

    // An agreeing student leaves the pipeline untouched.
    struct Parrot : sws::backends::TextBackend {
        sws::backends::MockSolver inner{{.agreement = 1.0}};
        std::vector<std::string> complete(const sws::backends::BackendRequest& request) override {
            return inner.complete(request);
        }
    };
    Parrot agreeing;
    fixture.backends.student_solver = &agreeing;
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.rejected_student_teacher == 0);
    CHECK(result.report.survivors == 6);
}

TEST_CASE("the strict rater mix rejects roughly the calibrated share") {
    PipelineFixture fixture({.structural_bad_rate = 0.0},
                            sws::backends::MockRaterOptions::strict_workflow(),
                            {.agreement = 1.0});
    auto config = permissive_config();
    config.seed = 4242;
    const auto plan = two_category_plan(1500, 1500);
    const auto result = run_pipeline(plan, two_graphs(), fixture.backends, config);
    CHECK(result.report.quality_rejection_rate() == doctest::Approx(0.7835).epsilon(0.04));
}
