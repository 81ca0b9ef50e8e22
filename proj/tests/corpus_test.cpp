#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sws/corpus.hpp"
#include "sws/rng.hpp"

using namespace sws::corpus;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "sws_corpus_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

Problem make_problem(const std::string& id, const std::string& category) {
    Problem p;
    p.id = id;
    p.text = "text for " + id;
    p.category = category;
    return p;
}

}  // namespace

TEST_CASE("load_dataset on an empty file gives an empty set") {
    const auto path = temp_file("empty.jsonl");
    std::ofstream(path).close();
    const auto set = load_dataset(path.string());
    CHECK(set.empty());
}

TEST_CASE("load_dataset preserves order and fields") {
    const auto path = temp_file("three.jsonl");
    {
        std::ofstream out(path);
        out << R"({"category":"Algebra","id":"p1","source":"original","text":"one"})" << "\n";
        out << R"({"answer":"7","category":"Geometry","id":"p2","source":"original","text":"two"})"
            << "\n";
        out << R"({"category":"Algebra","concepts":["x","y"],"id":"p3","source":"synthetic","text":"three"})"
            << "\n";
    }
    const auto set = load_dataset(path.string());
    REQUIRE(set.size() == 3);
    CHECK(set.items()[0].id == "p1");
    CHECK(set.items()[1].id == "p2");
    CHECK(set.items()[1].answer == "7");
    CHECK(set.items()[2].id == "p3");
    CHECK(set.items()[2].source == Source::synthetic);
    CHECK(set.items()[2].concepts == std::vector<std::string>{"x", "y"});
}

TEST_CASE("load_dataset rejects duplicate ids with a line number") {
    const auto path = temp_file("dup.jsonl");
    {
        std::ofstream out(path);
        out << R"({"category":"A","id":"p1","source":"original","text":"t"})" << "\n";
        out << R"({"category":"A","id":"p1","source":"original","text":"t"})" << "\n";
    }
    try {
        load_dataset(path.string());
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }
}

TEST_CASE("load_dataset reports malformed lines") {
    const auto path = temp_file("malformed.jsonl");
    {
        std::ofstream out(path);
        out << R"({"category":"A","id":"p1","source":"original","text":"t"})" << "\n";
        out << "{not json}" << "\n";
    }
    CHECK_THROWS_AS(load_dataset(path.string()), ParseError);
}

TEST_CASE("unknown category fails when a category set is configured") {
    const auto path = temp_file("cats.jsonl");
    {
        std::ofstream out(path);
        out << R"({"category":"Botany","id":"p1","source":"original","text":"t"})" << "\n";
    }
    CHECK_THROWS_AS(load_dataset(path.string(), {"Algebra", "Geometry"}), ValidationError);
    CHECK_NOTHROW(load_dataset(path.string(), {}));
}

TEST_CASE("save/load round-trip is the identity on randomized sets") {
    sws::Rng rng(20240817);
    const std::vector<std::string> categories = {"Algebra", "Geometry", "Number Theory"};
    for (int trial = 0; trial < 20; ++trial) {
        ProblemSet set("trial");
        const auto n = rng.next_index(30);
        for (std::size_t i = 0; i < n; ++i) {
            Problem p;
            p.id = "p" + std::to_string(trial) + "-" + std::to_string(i);
            p.text = "statement " + std::to_string(rng.next_u64());
            p.category = categories[rng.next_index(categories.size())];
            if (rng.next_bernoulli(0.5)) p.answer = std::to_string(rng.next_index(1000));
            if (rng.next_bernoulli(0.3)) {
                p.source = Source::synthetic;
                p.concepts = {"c" + std::to_string(rng.next_index(5)), "d"};
            }
            if (rng.next_bernoulli(0.4))
                p.metadata["k" + std::to_string(rng.next_index(3))] = "v";
            set.add(std::move(p));
        }
        const auto path = temp_file("roundtrip.jsonl");
        save_dataset(set, path.string());
        const auto loaded = load_dataset(path.string());
        REQUIRE(loaded.size() == set.size());
        for (std::size_t i = 0; i < set.size(); ++i) CHECK(loaded.items()[i] == set.items()[i]);
    }
}

TEST_CASE("non-ASCII text survives the round trip") {
    ProblemSet set("unicode");
    Problem p = make_problem("u1", "Geometry");
    p.text = "Let θ ∈ [0, π]: compute ∑ᵢ αᵢ · √2 — 数学";
    set.add(p);
    const auto path = temp_file("unicode.jsonl");
    save_dataset(set, path.string());
    const auto loaded = load_dataset(path.string());
    CHECK(loaded.items()[0].text == p.text);
}

TEST_CASE("saving the same set twice is byte-identical") {
    ProblemSet set("stable");
    for (int i = 0; i < 5; ++i) {
        auto p = make_problem("s" + std::to_string(i), "Algebra");
        p.metadata = {{"b", "2"}, {"a", "1"}};
        set.add(p);
    }
    const auto path1 = temp_file("stable1.jsonl");
    const auto path2 = temp_file("stable2.jsonl");
    save_dataset(set, path1.string());
    save_dataset(set, path2.string());
    CHECK(slurp(path1) == slurp(path2));
}

TEST_CASE("merge_augmented keeps initial items first and errors on collision") {
    ProblemSet initial("init");
    for (int i = 0; i < 4; ++i) initial.add(make_problem("p" + std::to_string(i), "Algebra"));
    ProblemSet synthetic("syn");
    for (int i = 0; i < 3; ++i) {
        auto p = make_problem("syn-" + std::to_string(i), "Algebra");
        p.source = Source::synthetic;
        p.concepts = {"c"};
        synthetic.add(p);
    }

    const auto merged = merge_augmented(initial, synthetic);
    REQUIRE(merged.size() == 7);
    CHECK(merged.items()[0].id == "p0");
    CHECK(merged.items()[4].id == "syn-0");
    CHECK(merged.items()[4].source == Source::synthetic);

    SUBCASE("empty synthetic set is the identity") {
        const auto same = merge_augmented(initial, ProblemSet{});
        CHECK(same.size() == initial.size());
    }
    SUBCASE("id collision is rejected") {
        ProblemSet clash("clash");
        clash.add(make_problem("p2", "Algebra"));
        CHECK_THROWS_AS(merge_augmented(initial, clash), ValidationError);
    }
    SUBCASE("merge size is associative") {
        ProblemSet extra("extra");
        extra.add(make_problem("x0", "Algebra"));
        const auto left = merge_augmented(merge_augmented(initial, synthetic), extra);
        const auto right = merge_augmented(initial, merge_augmented(synthetic, extra));
        CHECK(left.size() == initial.size() + synthetic.size() + extra.size());
        CHECK(left.size() == right.size());
    }
}

TEST_CASE("merging a 12k initial set with 40k synthetic gives 52k") {
    ProblemSet initial("xs");
    for (int i = 0; i < 12000; ++i) initial.add(make_problem("p" + std::to_string(i), "A"));
    ProblemSet synthetic("xt");
    for (int i = 0; i < 40000; ++i) {
        auto p = make_problem("syn-" + std::to_string(i), "A");
        p.source = Source::synthetic;
        p.concepts = {"c"};
        synthetic.add(std::move(p));
    }
    const auto merged = merge_augmented(initial, synthetic);
    CHECK(merged.size() == 52000);
    CHECK(merged.items().front().id == "p0");
    CHECK(merged.items()[12000].id == "syn-0");
}

TEST_CASE("synthetic problems must carry concepts") {
    ProblemSet set("validate");
    Problem p = make_problem("v1", "Algebra");
    p.source = Source::synthetic;
    CHECK_THROWS_AS(set.add(p), ValidationError);
}

TEST_CASE("trace persistence round-trips and validates ranges") {
    const auto path = temp_file("traces.jsonl");
    std::vector<AccuracyTrace> traces = {{"p1", {0.0, 0.5, 1.0}}, {"p2", {0.25}}};
    save_traces(traces, path.string());
    const auto loaded = load_traces(path.string());
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].accuracies == traces[0].accuracies);

    CHECK_THROWS_AS(validate_trace({"p", {}}), ValidationError);
    CHECK_THROWS_AS(validate_trace({"p", {1.5}}), ValidationError);
}
