#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sws::backends {

class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class RequestKind { generate, rate, solve, embed, rollout, categorize };

std::string to_string(RequestKind kind);

struct BackendRequest {
    RequestKind kind = RequestKind::generate;
    std::string payload;        // rendered prompt or raw text
    int sample_count = 1;
    std::uint64_t seed = 0;     // mock backends require this
    std::string request_id;     // candidate id, carried into the audit log
};

// Text-completion boundary shared by generation, rating, solving and
// category labeling. Implementations must be callable concurrently.
class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual std::vector<std::string> complete(const BackendRequest& request) = 0;
};

class EmbeddingBackend {
public:
    virtual ~EmbeddingBackend() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
    virtual std::size_t dimension() const = 0;
};

// ---- HTTP client ----------------------------------------------------------

struct EndpointConfig {
    std::string endpoint;            // e.g. http://host:port
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env;         // env var holding the bearer token, if any
    double temperature = 0.7;
    int max_tokens = 1024;
    int parallelism = 4;             // in-flight request bound
    int max_retries = 3;
    int base_delay_ms = 250;         // doubled per retry
    int timeout_s = 60;
    std::string log_path;            // JSONL audit log, empty = off
};

// Chat-completion client: posts {model, messages, n, ...}, reads choices,
// retries 5xx and transport failures with exponential backoff. Exhausted
// retries raise BackendError; malformed bodies raise BackendError with a
// protocol note.
class HttpTextBackend : public TextBackend {
public:
    explicit HttpTextBackend(EndpointConfig config);
    ~HttpTextBackend() override;
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// ---- Deterministic mocks ---------------------------------------------------

// Seeded hash of the text expanded to `dimension` coordinates and
// unit-normalized. Identical text always maps to the identical vector.
std::vector<double> mock_embed(const std::string& text, std::size_t dimension,
                               std::uint64_t seed);

class MockEmbeddingBackend : public EmbeddingBackend {
public:
    MockEmbeddingBackend(std::size_t dimension, std::uint64_t seed)
        : dimension_(dimension), seed_(seed) {}
    std::vector<double> embed(const std::string& text) override {
        return mock_embed(text, dimension_, seed_);
    }
    std::size_t dimension() const override { return dimension_; }

private:
    std::size_t dimension_;
    std::uint64_t seed_;
};

struct MockGeneratorOptions {
    // Fraction of generations that come out structurally unusable
    // (option lists, multi-part, proof imperatives).
    double structural_bad_rate = 0.0;
};

// Emits a self-contained problem statement stamped from the request payload.
// The statement's hidden difficulty is a deterministic function of the text,
// which downstream mock rollouts recover, so the difficulty filter sees a
// real distribution.
class MockGenerator : public TextBackend {
public:
    explicit MockGenerator(MockGeneratorOptions options = {}) : options_(options) {}
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    MockGeneratorOptions options_;
};

struct MockRaterOptions {
    double p_bad = 0.10;
    double p_perfect = 0.60;  // remainder is "acceptable"

    // Vote mix calibrated so that with 3 raters and a 2-perfect threshold
    // the quality stage rejects ~78.35% of candidates.
    static MockRaterOptions strict_workflow();
};

class MockRater : public TextBackend {
public:
    explicit MockRater(MockRaterOptions options = {}) : options_(options) {}
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    MockRaterOptions options_;
};

struct MockSolverOptions {
    double agreement = 0.80;  // chance a sample reproduces the canonical answer
};

// Derives a canonical integer answer from the problem text and returns
// samples that agree with it at the configured rate.
class MockSolver : public TextBackend {
public:
    explicit MockSolver(MockSolverOptions options = {}) : options_(options) {}
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    MockSolverOptions options_;
};

// Labels a category by hashing the payload onto the configured set.
class MockCategorizer : public TextBackend {
public:
    explicit MockCategorizer(std::vector<std::string> categories)
        : categories_(std::move(categories)) {}
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    std::vector<std::string> categories_;
};

// Splits the payload into concept-like tokens, deterministically.
class MockConceptExtractor : public TextBackend {
public:
    explicit MockConceptExtractor(int concepts_per_problem = 3)
        : concepts_per_problem_(concepts_per_problem) {}
    std::vector<std::string> complete(const BackendRequest& request) override;

private:
    int concepts_per_problem_;
};

// ---- Synthetic student -----------------------------------------------------

// Minimal per-category skill model standing in for the policy during
// simulation: success probability is a logistic gap between skill and
// problem difficulty, and only non-degenerate rollout groups move the skill.
struct StudentModel {
    std::map<std::string, double> skill;
    double learning_rate = 0.5;
    std::uint64_t noise_seed = 0;
};

double student_accuracy(const StudentModel& model, const std::string& category,
                        double difficulty);

void student_train_step(StudentModel& model, const std::string& category, double difficulty,
                        bool group_kept);

// Difficulty a mock-generated statement encodes; shared by the generator
// and the rollout simulation. Values land in [-4.5, 2.5].
double mock_problem_difficulty(const std::string& problem_text);

}  // namespace sws::backends
