#pragma once

#include <optional>
#include <string>
#include <vector>

namespace sws::grpokit {

// One prompt's G sampled responses: rewards, response lengths, and
// (optionally) per-token importance ratios. When `advantages` is empty it is
// derived from the rewards by group normalization, which needs G >= 2;
// precomputed advantages may come with groups of any size.
struct RolloutGroup {
    std::string prompt_id;
    std::vector<double> rewards;
    std::vector<std::size_t> token_counts;
    std::vector<std::vector<double>> ratios;  // empty or one list per response
    std::vector<double> advantages;           // empty = derive from rewards

    void validate() const;
};

// Clipping thresholds and the accuracy band for prompt filtering.
// The upper clip bound is allowed to exceed the lower one to bias
// exploration upward.
struct ClipConfig {
    double epsilon = 0.20;
    double epsilon_high = 0.28;
    double acc_lower = 0.10;
    double acc_upper = 0.90;
    bool sample_std = false;  // Bessel-corrected std instead of population std

    void validate() const;
};

// Group-normalized advantages: (r_i - mean) / std. A zero-variance group
// collapses to all-zero advantages rather than erroring; dropping such
// groups is the filter's job, not the normalizer's.
std::vector<double> group_advantages(const std::vector<double>& rewards,
                                     const ClipConfig& cfg = {});

// Keep a prompt only if its fraction of correct rollouts lies strictly
// inside (acc_lower, acc_upper). Rewards must be binary.
bool dynamic_sampling_keep(const std::vector<double>& rewards, const ClipConfig& cfg);

// min(k*A, clip(k, 1-eps, 1+eps_high)*A) for one token.
double clipped_surrogate(double ratio, double advantage, const ClipConfig& cfg);

struct BatchResult {
    double objective = 0.0;
    std::size_t groups_kept = 0;
    std::size_t groups_dropped = 0;
    std::size_t token_total = 0;
    std::vector<double> advantages;  // per response, kept groups, group order
};

// Token-level objective: every token of every kept response contributes
// clipped_surrogate(k, A_i) with the response advantage broadcast to its
// tokens, normalized by the total token count across kept groups. With
// apply_filter, all-correct / all-incorrect groups are dropped first.
// Summation is fixed-order (per-group partials, then index-order pairwise
// reduction), so results are bit-identical for any thread count.
BatchResult batch_objective(const std::vector<RolloutGroup>& groups, const ClipConfig& cfg,
                            bool apply_filter = false, int threads = 1);

std::vector<RolloutGroup> load_groups(const std::string& path);

}  // namespace sws::grpokit
