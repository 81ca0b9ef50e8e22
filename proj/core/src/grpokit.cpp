#include "sws/grpokit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "sws/corpus.hpp"
#include "sws/rng.hpp"

namespace sws::grpokit {

using corpus::ParseError;
using corpus::ValidationError;
using nlohmann::json;

void RolloutGroup::validate() const {
    if (rewards.empty()) throw ValidationError("group needs at least one response");
    if (advantages.empty() && rewards.size() < 2)
        throw ValidationError("deriving advantages needs G >= 2 responses");
    if (!advantages.empty() && advantages.size() != rewards.size())
        throw ValidationError("advantages size must match rewards size");
    if (token_counts.size() != rewards.size())
        throw ValidationError("token_counts size must match rewards size");
    for (std::size_t n : token_counts)
        if (n == 0) throw ValidationError("token counts must be >= 1");
    if (!ratios.empty()) {
        if (ratios.size() != rewards.size())
            throw ValidationError("ratios must have one list per response");
        for (std::size_t i = 0; i < ratios.size(); ++i) {
            if (ratios[i].size() != token_counts[i])
                throw ValidationError("ratio list length must equal the token count");
            for (double k : ratios[i])
                if (!(k > 0.0)) throw ValidationError("importance ratios must be > 0");
        }
    }
}

void ClipConfig::validate() const {
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    if (epsilon_high < epsilon) throw ValidationError("epsilon_high must be >= epsilon");
    if (!(acc_lower >= 0.0 && acc_lower < acc_upper && acc_upper <= 1.0))
        throw ValidationError("accuracy band must satisfy 0 <= lower < upper <= 1");
}

std::vector<double> group_advantages(const std::vector<double>& rewards, const ClipConfig& cfg) {
    const std::size_t g = rewards.size();
    if (g < 2) throw ValidationError("group advantages need G >= 2 rewards");

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(g);

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(cfg.sample_std ? g - 1 : g);
    const double std_dev = std::sqrt(var);

    std::vector<double> advantages(g, 0.0);
    if (std_dev == 0.0) return advantages;  // degenerate group: uniform zeros
    for (std::size_t i = 0; i < g; ++i) advantages[i] = (rewards[i] - mean) / std_dev;
    return advantages;
}

bool dynamic_sampling_keep(const std::vector<double>& rewards, const ClipConfig& cfg) {
    cfg.validate();
    if (rewards.empty()) throw ValidationError("empty reward list");
    std::size_t correct = 0;
    for (double r : rewards) {
        if (r != 0.0 && r != 1.0)
            throw ValidationError("dynamic sampling expects binary rewards");
        if (r == 1.0) ++correct;
    }
    const double frac = static_cast<double>(correct) / static_cast<double>(rewards.size());
    return cfg.acc_lower < frac && frac < cfg.acc_upper;
}

double clipped_surrogate(double ratio, double advantage, const ClipConfig& cfg) {
    cfg.validate();
    if (!(ratio > 0.0)) throw ValidationError("importance ratio must be > 0");
    const double clipped =
        std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon_high);
    return std::min(ratio * advantage, clipped * advantage);
}

namespace {

struct GroupPartial {
    double numerator = 0.0;
    std::size_t tokens = 0;
    bool kept = false;
    std::vector<double> advantages;
};

// Index-order pairwise reduction; the bracketing is a function of the count
// alone, so partial sums combine identically for any partitioning upstream.
double pairwise_sum(const std::vector<double>& values, std::size_t lo, std::size_t hi) {
    if (hi - lo == 0) return 0.0;
    if (hi - lo == 1) return values[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(values, lo, mid) + pairwise_sum(values, mid, hi);
}

}  // namespace

BatchResult batch_objective(const std::vector<RolloutGroup>& groups, const ClipConfig& cfg,
                            bool apply_filter, int threads) {
    cfg.validate();
    std::vector<char> keep(groups.size(), 1);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        groups[gi].validate();
        if (apply_filter) keep[gi] = dynamic_sampling_keep(groups[gi].rewards, cfg) ? 1 : 0;
        if (keep[gi] && groups[gi].ratios.empty())
            throw ValidationError("group '" + groups[gi].prompt_id + "' is missing ratios");
    }

    // Per-group partials are pure arithmetic; all validation happened above.
    std::vector<GroupPartial> partials(groups.size());
    parallel_for(groups.size(), threads, [&](std::size_t gi) {
        if (!keep[gi]) return;
        const auto& group = groups[gi];
        GroupPartial& part = partials[gi];
        part.kept = true;
        part.advantages = group.advantages.empty() ? group_advantages(group.rewards, cfg)
                                                   : group.advantages;
        for (std::size_t i = 0; i < group.rewards.size(); ++i) {
            for (double k : group.ratios[i])
                part.numerator += clipped_surrogate(k, part.advantages[i], cfg);
            part.tokens += group.token_counts[i];
        }
    });

    BatchResult result;
    std::vector<double> numerators;
    for (const auto& part : partials) {
        if (!part.kept) {
            ++result.groups_dropped;
            continue;
        }
        ++result.groups_kept;
        result.token_total += part.tokens;
        numerators.push_back(part.numerator);
        result.advantages.insert(result.advantages.end(), part.advantages.begin(),
                                 part.advantages.end());
    }
    if (result.token_total > 0)
        result.objective = pairwise_sum(numerators, 0, numerators.size()) /
                           static_cast<double>(result.token_total);
    return result;
}

std::vector<RolloutGroup> load_groups(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "' for reading");
    std::vector<RolloutGroup> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            RolloutGroup g;
            g.prompt_id = j.at("prompt_id").get<std::string>();
            g.rewards = j.at("rewards").get<std::vector<double>>();
            g.token_counts = j.at("token_counts").get<std::vector<std::size_t>>();
            if (j.contains("ratios"))
                g.ratios = j.at("ratios").get<std::vector<std::vector<double>>>();
            if (j.contains("advantages"))
                g.advantages = j.at("advantages").get<std::vector<double>>();
            g.validate();
            groups.push_back(std::move(g));
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return groups;
}

}  // namespace sws::grpokit
