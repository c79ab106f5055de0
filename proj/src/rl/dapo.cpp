#include "infoseek/rl/dapo.hpp"

#include "infoseek/core/tagged.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infoseek::rl {

int score_format(std::string_view raw)
{
    return core::parse_tagged(raw).has_value() ? 1 : 0;
}

double reward(int format, int answer)
{
    const auto binary = [](int v) { return v == 0 || v == 1; };
    if (!binary(format) || !binary(answer))
        throw std::invalid_argument(fmt::format("reward needs binary scores, got ({}, {})", format, answer));
    return 0.1 * format + 0.9 * answer;
}

std::vector<RolloutGroup> dynamic_filter(std::vector<RolloutGroup> groups)
{
    std::vector<RolloutGroup> kept;
    for (auto& group : groups) {
        const auto correct = std::count_if(group.samples.begin(), group.samples.end(),
                                           [](const RewardedSample& s) { return s.score_answer == 1; });
        if (correct > 0 && correct < static_cast<std::ptrdiff_t>(group.samples.size()))
            kept.push_back(std::move(group));
    }
    return kept;
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double eps)
{
    if (rewards.size() < 2)
        throw std::invalid_argument("group_advantages needs at least two rewards");
    const auto n = static_cast<double>(rewards.size());
    double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
    // One refinement pass so equal rewards give an exact mean (and A = 0
    // rather than rounding noise amplified by 1 / eps).
    double residual = 0;
    for (double r : rewards)
        residual += r - mean;
    mean += residual / n;
    double variance = 0;
    for (double r : rewards)
        variance += (r - mean) * (r - mean);
    const double denom = std::sqrt(variance / n) + eps;
    std::vector<double> out;
    out.reserve(rewards.size());
    for (double r : rewards)
        out.push_back((r - mean) / denom);
    return out;
}

void normalize_advantages(RolloutGroup& group)
{
    std::vector<double> rewards;
    for (const auto& s : group.samples)
        rewards.push_back(s.reward);
    group.advantages = group_advantages(rewards);
}

std::vector<double> prob_ratio(const Policy& new_policy, const Policy& old_policy, const RewardedSample& sample)
{
    std::vector<double> ratios;
    ratios.reserve(sample.decisions.size());
    for (const auto& d : sample.decisions) {
        const double old_p = old_policy.prob(d.state, d.action);
        if (!(old_p > 0))
            throw std::domain_error(
                fmt::format("old policy gives probability 0 to action {} at state {}", d.action, d.state));
        ratios.push_back(new_policy.prob(d.state, d.action) / old_p);
    }
    return ratios;
}

double clipped_term(double ratio, double advantage, double eps_low, double eps_high)
{
    const double clipped = std::clamp(ratio, 1.0 - eps_low, 1.0 + eps_high);
    return std::min(ratio * advantage, clipped * advantage);
}

double dapo_objective(const std::vector<double>& ratios, const std::vector<double>& advantages, double eps_low,
                      double eps_high)
{
    if (ratios.empty())
        throw std::invalid_argument("dapo_objective on an empty group");
    if (ratios.size() != advantages.size())
        throw std::invalid_argument("dapo_objective: ratio and advantage counts differ");
    double total = 0;
    for (std::size_t j = 0; j < ratios.size(); ++j)
        total += clipped_term(ratios[j], advantages[j], eps_low, eps_high);
    return total / static_cast<double>(ratios.size());
}

double dapo_objective(const Policy& new_policy, const Policy& old_policy, const RolloutGroup& group,
                      const ClipConfig& clip)
{
    if (group.samples.empty())
        throw std::invalid_argument("dapo_objective on an empty group");
    if (group.advantages.size() != group.samples.size())
        throw std::invalid_argument("dapo_objective: group advantages are not computed");
    const double advantage_sum = std::accumulate(group.advantages.begin(), group.advantages.end(), 0.0);
    if (std::abs(advantage_sum) > 1e-9 * static_cast<double>(group.samples.size()))
        throw std::invalid_argument("dapo_objective: group advantages are not centered");

    // Summing (term - A) drops the mean of A, which is zero for a normalized
    // group, so r = 1 everywhere gives exactly 0 without rounding residue.
    double total = 0;
    for (std::size_t j = 0; j < group.samples.size(); ++j) {
        const auto ratios = prob_ratio(new_policy, old_policy, group.samples[j]);
        if (ratios.empty())
            throw std::invalid_argument("dapo_objective: sample without decisions");
        const double a = group.advantages[j];
        const auto t = static_cast<double>(ratios.size());
        if (clip.aggregation == RatioAggregation::sample_mean) {
            const double r = std::accumulate(ratios.begin(), ratios.end(), 0.0) / t;
            total += clipped_term(r, a, clip.eps_low, clip.eps_high) - a;
        }
        else {
            double inner = 0;
            for (double r : ratios)
                inner += clipped_term(r, a, clip.eps_low, clip.eps_high) - a;
            total += inner / t;
        }
    }
    return total / static_cast<double>(group.samples.size());
}

} // namespace infoseek::rl
