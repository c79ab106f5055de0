#pragma once

#include "infoseek/core/types.hpp"
#include "infoseek/rl/dapo.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace infoseek::rl {

struct LeafLabel {
    int format = 1;
    int answer = 0;

    bool operator==(const LeafLabel&) const = default;
};

// One task: a complete decision tree of `depth` levels with `branching`
// choices per node. Leaves are indexed in lexicographic path order.
struct ToyTask {
    std::string qa_id;
    std::string question;
    std::string answer;
    std::vector<LeafLabel> leaves;
};

// Finite synthetic environment. Every root-to-leaf path is rendered as a
// tagged trajectory (one search round per non-final decision, then an
// answer). Leaves labelled format = 0 get a truncated tool-call payload
// (an unclosed think block when there is no tool call); leaves labelled
// answer = 0 answer with a wrong string.
class ToyEnvironment {
public:
    ToyEnvironment(int depth, int branching, std::vector<ToyTask> tasks);

    // Labels drawn per task from a seed mixed with the QA id; each task has
    // at least one correct and one incorrect leaf.
    static ToyEnvironment from_qas(const std::vector<core::QAPair>& qas, int depth, int branching,
                                   std::uint64_t seed);
    static ToyEnvironment random(int tasks, int depth, int branching, std::uint64_t seed);

    int depth() const noexcept { return depth_; }
    int branching() const noexcept { return branching_; }
    const std::vector<ToyTask>& tasks() const noexcept { return tasks_; }

    std::size_t internal_nodes() const noexcept { return internal_nodes_; }
    std::size_t leaf_count() const noexcept { return leaf_count_; }
    // Decision points across all tasks.
    std::size_t state_count() const noexcept { return internal_nodes_ * tasks_.size(); }
    std::size_t state_of(std::size_t task, std::size_t node) const noexcept { return task * internal_nodes_ + node; }

    // Path through the tree for `leaf` (length depth).
    std::vector<std::size_t> path_of(std::size_t leaf) const;
    std::string render(std::size_t task, const std::vector<std::size_t>& path) const;

    // Scores a rendered leaf with score_format and answer matching.
    RewardedSample score(std::size_t task, const std::vector<std::size_t>& path) const;

private:
    int depth_;
    int branching_;
    std::size_t internal_nodes_ = 0;
    std::size_t leaf_count_ = 0;
    std::vector<ToyTask> tasks_;
};

void to_json(nlohmann::json& out, const ToyEnvironment& env);
ToyEnvironment toy_environment_from_json(const nlohmann::json& in);

// Tabular softmax policy: theta holds one logit per (state, action).
class ToyPolicy : public Policy {
public:
    ToyPolicy(std::size_t states, std::size_t actions, std::vector<double> theta);
    static ToyPolicy uniform(const ToyEnvironment& env);
    static ToyPolicy random(const ToyEnvironment& env, std::uint64_t seed, double scale = 1.0);

    double prob(std::size_t state, std::size_t action) const override;
    std::vector<double> probs(std::size_t state) const;

    std::size_t states() const noexcept { return states_; }
    std::size_t actions() const noexcept { return actions_; }
    const std::vector<double>& theta() const noexcept { return theta_; }
    std::vector<double>& theta() noexcept { return theta_; }
    std::size_t index(std::size_t state, std::size_t action) const noexcept { return state * actions_ + action; }

private:
    std::size_t states_;
    std::size_t actions_;
    std::vector<double> theta_;
};

RewardedSample sample_rollout(const ToyEnvironment& env, const ToyPolicy& policy, std::size_t task,
                              std::mt19937_64& rng);

// Exact expected reward of `policy` on task `task` (or averaged over tasks).
double expected_reward(const ToyEnvironment& env, const ToyPolicy& policy, std::size_t task);
double expected_reward(const ToyEnvironment& env, const ToyPolicy& policy);

// Analytic gradient of the mean group objective with respect to theta. The
// clipped branch contributes zero.
std::vector<double> dapo_gradient(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                                  const std::vector<RolloutGroup>& groups, const ClipConfig& clip = {});
// Mean of dapo_objective over the groups (0 for no groups).
double mean_objective(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                      const std::vector<RolloutGroup>& groups, const ClipConfig& clip = {});

struct GradientCheckReport {
    std::vector<double> analytic;
    std::vector<double> numeric;
    // ||analytic - numeric|| / max(||analytic||, ||numeric||), 0 when both vanish.
    double max_rel_error = 0;
    // Largest componentwise |a - n| / max(|a|, |n|, floor).
    double max_component_error = 0;
    double analytic_norm = 0;
};

// Central differences with step h; the old policy stays frozen.
GradientCheckReport dapo_gradient_check(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                        const std::vector<RolloutGroup>& groups, const ClipConfig& clip = {},
                                        double h = 1e-5);
// Old policy frozen at the current theta.
GradientCheckReport dapo_gradient_check(const ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                        const ClipConfig& clip = {}, double h = 1e-5);

struct SimConfig {
    int group_size = 16;
    int steps = 200;
    double lr = 0.5;
    // Gradient steps on each batch; the old policy is the batch sampler.
    int updates_per_step = 1;
    std::uint64_t seed = 0;
    ClipConfig clip;
    int parallelism = 1;
};

struct StepReport {
    int step = 0;
    // Mean reward of the sampled batch (before the update).
    double mean_reward = 0;
    int groups_kept = 0;
    // Mean objective at the updated theta against the batch sampler.
    double objective = 0;
    // Exact expected reward of the policy after the step.
    double expected_reward = 0;
    bool skipped = false;
};

void to_json(nlohmann::json& out, const StepReport& report);

struct SimReport {
    double initial_expected_reward = 0;
    std::vector<StepReport> steps;
    int updates = 0;
};

// Throws std::invalid_argument for group_size < 2, negative steps or an
// environment without tasks.
SimReport rl_sim_loop(ToyPolicy& policy, const ToyEnvironment& env, const SimConfig& config);

} // namespace infoseek::rl
