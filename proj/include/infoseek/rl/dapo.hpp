#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace infoseek::rl {

// 1 iff the text parses under the strict tagged grammar (tool calls included).
int score_format(std::string_view raw);

// 0.1 * format + 0.9 * answer. Throws std::invalid_argument unless both are 0 or 1.
double reward(int score_format, int score_answer);

// One policy decision inside a sample: the decision point and the choice.
struct Decision {
    std::size_t state = 0;
    std::size_t action = 0;

    bool operator==(const Decision&) const = default;
};

struct RewardedSample {
    std::string raw;
    std::vector<Decision> decisions;
    int score_format = 0;
    int score_answer = 0;
    double reward = 0;
};

struct RolloutGroup {
    std::string qa_id;
    std::vector<RewardedSample> samples;
    std::vector<double> advantages;
};

// Keeps the groups with 0 < correct answers < G, in order, unmodified.
std::vector<RolloutGroup> dynamic_filter(std::vector<RolloutGroup> groups);

inline constexpr double kAdvantageEpsilon = 1e-8;

// (R_i - mean) / (population std + eps). Throws for fewer than two rewards.
std::vector<double> group_advantages(const std::vector<double>& rewards, double eps = kAdvantageEpsilon);

// Fills group.advantages from the sample rewards.
void normalize_advantages(RolloutGroup& group);

// Policy over finite decision points: pi(action | state).
class Policy {
public:
    virtual ~Policy() = default;
    virtual double prob(std::size_t state, std::size_t action) const = 0;
};

// pi_new / pi_old per decision. Throws std::domain_error when the old
// probability is zero.
std::vector<double> prob_ratio(const Policy& new_policy, const Policy& old_policy, const RewardedSample& sample);

enum class RatioAggregation {
    // One ratio per sample: the mean of its per-decision ratios.
    sample_mean,
    // Clip per decision, then average the clipped terms within the sample.
    decision,
};

struct ClipConfig {
    double eps_low = 0.2;
    double eps_high = 0.28;
    RatioAggregation aggregation = RatioAggregation::sample_mean;
};

// min(r * A, clip(r, 1 - eps_low, 1 + eps_high) * A)
double clipped_term(double ratio, double advantage, double eps_low, double eps_high);

// (1/G) sum_j clipped_term(r_j, A_j) from precomputed per-sample ratios.
double dapo_objective(const std::vector<double>& ratios, const std::vector<double>& advantages,
                      double eps_low = 0.2, double eps_high = 0.28);

// Objective of a normalized group. Throws std::invalid_argument for an
// empty group or advantages that are missing or do not sum to zero.
double dapo_objective(const Policy& new_policy, const Policy& old_policy, const RolloutGroup& group,
                      const ClipConfig& clip = {});

} // namespace infoseek::rl
