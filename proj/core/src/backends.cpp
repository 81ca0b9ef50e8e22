#include "sws/backends.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sws/rng.hpp"

namespace sws::backends {

using nlohmann::json;

std::string to_string(RequestKind kind) {
    switch (kind) {
        case RequestKind::generate: return "generate";
        case RequestKind::rate: return "rate";
        case RequestKind::solve: return "solve";
        case RequestKind::embed: return "embed";
        case RequestKind::rollout: return "rollout";
        case RequestKind::categorize: return "categorize";
    }
    return "unknown";
}

// ---- HTTP client ----------------------------------------------------------

struct HttpTextBackend::Impl {
    EndpointConfig config;
    httplib::Client client;
    std::counting_semaphore<> in_flight;
    std::mutex log_mutex;
    std::ofstream log;

    explicit Impl(EndpointConfig cfg)
        : config(std::move(cfg)),
          client(config.endpoint),
          in_flight(std::max(1, config.parallelism)) {
        client.set_connection_timeout(config.timeout_s, 0);
        client.set_read_timeout(config.timeout_s, 0);
        if (!config.log_path.empty()) log.open(config.log_path, std::ios::app);
    }

    void log_attempt(const BackendRequest& request, int attempt, int status, bool ok) {
        if (!log.is_open()) return;
        json entry;
        entry["request_id"] = request.request_id;
        entry["kind"] = to_string(request.kind);
        entry["attempt"] = attempt;
        entry["status"] = status;
        entry["ok"] = ok;
        std::scoped_lock lock(log_mutex);
        log << entry.dump() << '\n';
        log.flush();
    }
};

HttpTextBackend::HttpTextBackend(EndpointConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpTextBackend::~HttpTextBackend() = default;

std::vector<std::string> HttpTextBackend::complete(const BackendRequest& request) {
    const auto& cfg = impl_->config;
    if (request.kind == RequestKind::embed || request.kind == RequestKind::rollout)
        throw BackendError("http backend handles text completion kinds only");

    httplib::Headers headers;
    if (!cfg.api_key_env.empty()) {
        if (const char* key = std::getenv(cfg.api_key_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::vector<std::string> completions;
    while (completions.size() < static_cast<std::size_t>(request.sample_count)) {
        json body;
        body["model"] = cfg.model;
        body["messages"] = json::array({{{"role", "user"}, {"content", request.payload}}});
        body["n"] = request.sample_count - static_cast<int>(completions.size());
        body["temperature"] = cfg.temperature;
        body["max_tokens"] = cfg.max_tokens;
        const std::string payload = body.dump();

        httplib::Result res;
        int attempt = 0;
        for (;;) {
            ++attempt;
            impl_->in_flight.acquire();
            res = impl_->client.Post(cfg.path, headers, payload, "application/json");
            impl_->in_flight.release();
            const int status = res ? res->status : 0;
            const bool retryable = !res || status >= 500 || status == 429;
            impl_->log_attempt(request, attempt, status, res && status == 200);
            if (res && status == 200) break;
            if (!retryable)
                throw BackendError("endpoint returned status " + std::to_string(status) +
                                   " for request '" + request.request_id + "'");
            if (attempt > cfg.max_retries)
                throw BackendError("backend unavailable after " + std::to_string(attempt) +
                                   " attempts for request '" + request.request_id + "'");
            const auto delay = cfg.base_delay_ms * (1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }

        json reply;
        try {
            reply = json::parse(res->body);
            const auto& choices = reply.at("choices");
            if (choices.empty()) throw BackendError("empty choices");
            for (const auto& choice : choices) {
                completions.push_back(choice.at("message").at("content").get<std::string>());
                if (completions.size() == static_cast<std::size_t>(request.sample_count)) break;
            }
        } catch (const json::exception& e) {
            throw BackendError(std::string("protocol error: ") + e.what());
        }
    }
    return completions;
}

// ---- Deterministic mocks ---------------------------------------------------

std::vector<double> mock_embed(const std::string& text, std::size_t dimension,
                               std::uint64_t seed) {
    if (text.empty()) throw BackendError("cannot embed empty text");
    if (dimension == 0) throw BackendError("embedding dimension must be >= 1");
    Rng rng(derive_seed(seed, fnv1a(text)));
    std::vector<double> vec(dimension);
    double norm_sq = 0.0;
    for (double& v : vec) {
        v = rng.next_gaussian();
        norm_sq += v * v;
    }
    if (norm_sq <= 0.0) {
        vec[0] = 1.0;
        norm_sq = 1.0;
    }
    const double inv = 1.0 / std::sqrt(norm_sq);
    for (double& v : vec) v *= inv;
    return vec;
}

double mock_problem_difficulty(const std::string& problem_text) {
    Rng rng(derive_seed(0x5157u, fnv1a(problem_text)));
    return -4.5 + 7.0 * rng.next_double();
}

std::vector<std::string> MockGenerator::complete(const BackendRequest& request) {
    std::vector<std::string> out;
    for (int i = 0; i < request.sample_count; ++i) {
        Rng rng(derive_seed(request.seed, fnv1a(request.payload) + i));
        const std::uint64_t a = rng.next_u64() % 90 + 10;
        const std::uint64_t b = rng.next_u64() % 90 + 10;
        if (rng.next_bernoulli(options_.structural_bad_rate)) {
            switch (rng.next_index(3)) {
                case 0:
                    out.push_back("Which value is largest? (A) " + std::to_string(a) + " (B) " +
                                  std::to_string(b) + " (C) " + std::to_string(a + b));
                    continue;
                case 1:
                    out.push_back("Part 1: compute " + std::to_string(a) + "+" +
                                  std::to_string(b) + ". Part 2: justify your method.");
                    continue;
                default:
                    out.push_back("Prove that " + std::to_string(a) + "+" + std::to_string(b) +
                                  " equals " + std::to_string(a + b) + ".");
                    continue;
            }
        }
        const std::uint64_t tag = rng.next_u64() % 100000;
        out.push_back("A sequence starts at " + std::to_string(a) + " and each step adds " +
                      std::to_string(b) + ". Find the value of term number " +
                      std::to_string(tag % 97 + 3) + ".");
    }
    return out;
}

MockRaterOptions MockRaterOptions::strict_workflow() {
    // With 3 raters and a 2-perfect threshold this mix accepts
    // 3*p^2*(1-b-p) + p^3 = 21.65% of candidates.
    return MockRaterOptions{.p_bad = 0.05, .p_perfect = 0.3118};
}

std::vector<std::string> MockRater::complete(const BackendRequest& request) {
    std::vector<std::string> out;
    Rng rng(derive_seed(request.seed, fnv1a(request.payload)));
    for (int i = 0; i < request.sample_count; ++i) {
        const double u = rng.next_double();
        if (u < options_.p_bad)
            out.push_back("bad");
        else if (u < options_.p_bad + options_.p_perfect)
            out.push_back("perfect");
        else
            out.push_back("acceptable");
    }
    return out;
}

std::vector<std::string> MockSolver::complete(const BackendRequest& request) {
    const std::uint64_t canonical = fnv1a(request.payload) % 9000 + 100;
    std::vector<std::string> out;
    Rng rng(derive_seed(request.seed, fnv1a(request.payload)));
    for (int i = 0; i < request.sample_count; ++i) {
        if (rng.next_bernoulli(options_.agreement))
            out.push_back(std::to_string(canonical));
        else
            out.push_back(std::to_string(canonical + 1 + rng.next_index(7)));
    }
    return out;
}

std::vector<std::string> MockCategorizer::complete(const BackendRequest& request) {
    if (categories_.empty()) throw BackendError("categorizer has no category set");
    std::vector<std::string> out;
    for (int i = 0; i < request.sample_count; ++i)
        out.push_back(categories_[fnv1a(request.payload) % categories_.size()]);
    return out;
}

std::vector<std::string> MockConceptExtractor::complete(const BackendRequest& request) {
    // Tokens hash into a fixed pool so problems from the same source text
    // share concepts and co-occurrence counts accumulate.
    constexpr std::size_t kPoolSize = 48;
    std::vector<std::string> concepts;
    std::string token;
    auto flush = [&] {
        if (token.size() >= 4) {
            std::string pooled = "concept-" + std::to_string(fnv1a(token) % kPoolSize);
            if (std::find(concepts.begin(), concepts.end(), pooled) == concepts.end())
                concepts.push_back(pooled);
        }
        token.clear();
    };
    for (char c : request.payload) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else
            flush();
    }
    flush();
    if (concepts.empty()) concepts.push_back("concept-0");
    while (concepts.size() > static_cast<std::size_t>(concepts_per_problem_)) concepts.pop_back();

    std::string joined;
    for (std::size_t i = 0; i < concepts.size(); ++i) {
        if (i) joined += "\n";
        joined += concepts[i];
    }
    std::vector<std::string> out;
    for (int i = 0; i < request.sample_count; ++i) out.push_back(joined);
    return out;
}

// ---- Synthetic student -----------------------------------------------------

double student_accuracy(const StudentModel& model, const std::string& category,
                        double difficulty) {
    auto it = model.skill.find(category);
    if (it == model.skill.end())
        throw BackendError("student has no skill entry for category '" + category + "'");
    return 1.0 / (1.0 + std::exp(-(it->second - difficulty)));
}

void student_train_step(StudentModel& model, const std::string& category, double difficulty,
                        bool group_kept) {
    if (!group_kept) return;  // degenerate groups carry no gradient
    const double p = student_accuracy(model, category, difficulty);
    model.skill[category] += model.learning_rate * p * (1.0 - p);
}

}  // namespace sws::backends
