#include "infoseek/rl/toy.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/parallel.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/text.hpp"
#include "infoseek/eval/judge.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace infoseek::rl {

using nlohmann::json;

namespace {

double unit_interval(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string extract_answer(std::string_view raw)
{
    const auto open = raw.rfind(core::tags::answer_open);
    if (open == std::string_view::npos)
        return {};
    const auto from = open + core::tags::answer_open.size();
    const auto close = raw.find(core::tags::answer_close, from);
    if (close == std::string_view::npos)
        return {};
    return std::string(raw.substr(from, close - from));
}

} // namespace

ToyEnvironment::ToyEnvironment(int depth, int branching, std::vector<ToyTask> tasks)
    : depth_(depth), branching_(branching), tasks_(std::move(tasks))
{
    if (depth < 1 || depth > 8)
        throw std::invalid_argument(fmt::format("toy depth must be in [1, 8], got {}", depth));
    if (branching < 2 || branching > 8)
        throw std::invalid_argument(fmt::format("toy branching must be in [2, 8], got {}", branching));
    std::size_t level = 1;
    for (int i = 0; i < depth; ++i) {
        internal_nodes_ += level;
        level *= static_cast<std::size_t>(branching);
    }
    leaf_count_ = level;
    for (const auto& task : tasks_) {
        if (task.leaves.size() != leaf_count_)
            throw std::invalid_argument(fmt::format("toy task {} has {} leaf labels, expected {}", task.qa_id,
                                                    task.leaves.size(), leaf_count_));
        for (const auto& leaf : task.leaves) {
            if ((leaf.format != 0 && leaf.format != 1) || (leaf.answer != 0 && leaf.answer != 1))
                throw std::invalid_argument(fmt::format("toy task {} has a non-binary leaf label", task.qa_id));
        }
        if (task.answer.empty())
            throw std::invalid_argument(fmt::format("toy task {} has an empty answer", task.qa_id));
    }
}

ToyEnvironment ToyEnvironment::from_qas(const std::vector<core::QAPair>& qas, int depth, int branching,
                                        std::uint64_t seed)
{
    ToyEnvironment shape(depth, branching, {});
    std::vector<ToyTask> tasks;
    for (const auto& qa : qas) {
        std::mt19937_64 rng(seed ^ core::fnv1a64(qa.id));
        ToyTask task{qa.id, qa.question, qa.answer, {}};
        int correct = 0;
        for (std::size_t i = 0; i < shape.leaf_count(); ++i) {
            LeafLabel leaf{unit_interval(rng) < 0.8 ? 1 : 0, unit_interval(rng) < 0.3 ? 1 : 0};
            correct += leaf.answer;
            task.leaves.push_back(leaf);
        }
        const auto pick = static_cast<std::size_t>(rng() % shape.leaf_count());
        if (correct == 0)
            task.leaves[pick].answer = 1;
        else if (correct == static_cast<int>(shape.leaf_count()))
            task.leaves[pick].answer = 0;
        tasks.push_back(std::move(task));
    }
    return ToyEnvironment(depth, branching, std::move(tasks));
}

ToyEnvironment ToyEnvironment::random(int tasks, int depth, int branching, std::uint64_t seed)
{
    std::vector<core::QAPair> qas;
    for (int i = 0; i < tasks; ++i) {
        core::QAPair qa;
        qa.id = fmt::format("toy-{}", i);
        qa.question = fmt::format("Which option leads to item {}?", i);
        qa.answer = fmt::format("item {}", i);
        qas.push_back(std::move(qa));
    }
    return from_qas(qas, depth, branching, seed);
}

std::vector<std::size_t> ToyEnvironment::path_of(std::size_t leaf) const
{
    std::vector<std::size_t> path(static_cast<std::size_t>(depth_));
    for (auto i = path.size(); i-- > 0;) {
        path[i] = leaf % static_cast<std::size_t>(branching_);
        leaf /= static_cast<std::size_t>(branching_);
    }
    return path;
}

std::string ToyEnvironment::render(std::size_t task_index, const std::vector<std::size_t>& path) const
{
    const auto& task = tasks_.at(task_index);
    std::size_t leaf = 0;
    for (auto a : path)
        leaf = leaf * static_cast<std::size_t>(branching_) + a;
    const auto& label = task.leaves.at(leaf);

    core::Trajectory trajectory;
    trajectory.qa_id = task.qa_id;
    std::size_t node = 0;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto url = fmt::format("https://toy.example/{}/{}", task.qa_id, node);
        trajectory.steps.push_back(
            {fmt::format("Step {}: take option {}.", i + 1, path[i]),
             core::ActionCall::search(fmt::format("{} option {}", task.question, path[i])),
             core::SearchObservation{{{fmt::format("Option {}", path[i]), "A branch of the toy tree.", url}}}});
        node = node * static_cast<std::size_t>(branching_) + 1 + path[i];
    }
    trajectory.steps.push_back({fmt::format("Final choice: option {}.", path.back()),
                                core::ActionCall::answer(label.answer ? task.answer : fmt::format("wrong {}", leaf)),
                                std::nullopt});
    auto text = core::serialize_tagged(trajectory);
    if (label.format == 0) {
        // Truncate the first tool-call payload; answer-only trees lose a tag.
        const auto call_end = text.find(core::tags::call_close);
        if (call_end != std::string::npos)
            text.erase(call_end - 1, 1);
        else
            text.erase(text.find(core::tags::think_close), core::tags::think_close.size());
    }
    return text;
}

RewardedSample ToyEnvironment::score(std::size_t task_index, const std::vector<std::size_t>& path) const
{
    if (path.size() != static_cast<std::size_t>(depth_))
        throw std::invalid_argument("toy path length differs from the tree depth");
    RewardedSample sample;
    sample.raw = render(task_index, path);
    std::size_t node = 0;
    for (auto a : path) {
        sample.decisions.push_back({state_of(task_index, node), a});
        node = node * static_cast<std::size_t>(branching_) + 1 + a;
    }
    sample.score_format = score_format(sample.raw);
    sample.score_answer = eval::lenient_match(extract_answer(sample.raw), tasks_[task_index].answer) ? 1 : 0;
    sample.reward = reward(sample.score_format, sample.score_answer);
    return sample;
}

void to_json(json& out, const ToyEnvironment& env)
{
    json tasks = json::array();
    for (const auto& task : env.tasks()) {
        json leaves = json::array();
        for (const auto& leaf : task.leaves)
            leaves.push_back(json{{"format", leaf.format}, {"answer", leaf.answer}});
        tasks.push_back(json{{"qa_id", task.qa_id}, {"question", task.question}, {"answer", task.answer},
                             {"leaves", leaves}});
    }
    out = json{{"depth", env.depth()}, {"branching", env.branching()}, {"tasks", tasks}};
}

ToyEnvironment toy_environment_from_json(const json& in)
{
    try {
        std::vector<ToyTask> tasks;
        for (const auto& item : in.at("tasks")) {
            ToyTask task{item.at("qa_id").get<std::string>(), item.value("question", std::string{}),
                         item.at("answer").get<std::string>(), {}};
            for (const auto& leaf : item.at("leaves"))
                task.leaves.push_back({leaf.at("format").get<int>(), leaf.at("answer").get<int>()});
            tasks.push_back(std::move(task));
        }
        return ToyEnvironment(in.at("depth").get<int>(), in.at("branching").get<int>(), std::move(tasks));
    }
    catch (const json::exception& e) {
        throw core::SchemaError(fmt::format("toy environment: {}", e.what()));
    }
}

ToyPolicy::ToyPolicy(std::size_t states, std::size_t actions, std::vector<double> theta)
    : states_(states), actions_(actions), theta_(std::move(theta))
{
    if (theta_.size() != states_ * actions_)
        throw std::invalid_argument("toy policy theta has the wrong size");
}

ToyPolicy ToyPolicy::uniform(const ToyEnvironment& env)
{
    const auto actions = static_cast<std::size_t>(env.branching());
    return ToyPolicy(env.state_count(), actions, std::vector<double>(env.state_count() * actions, 0.0));
}

ToyPolicy ToyPolicy::random(const ToyEnvironment& env, std::uint64_t seed, double scale)
{
    auto policy = uniform(env);
    std::mt19937_64 rng(seed);
    for (auto& value : policy.theta()) {
        // Box-Muller on the portable uniform draw.
        const double u1 = 1.0 - unit_interval(rng);
        const double u2 = unit_interval(rng);
        value = scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    return policy;
}

std::vector<double> ToyPolicy::probs(std::size_t state) const
{
    if (state >= states_)
        throw std::out_of_range(fmt::format("toy policy has no state {}", state));
    const auto* logits = theta_.data() + state * actions_;
    double top = -INFINITY;
    for (std::size_t a = 0; a < actions_; ++a)
        top = std::max(top, logits[a]);
    std::vector<double> out(actions_);
    double total = 0;
    for (std::size_t a = 0; a < actions_; ++a) {
        out[a] = std::exp(logits[a] - top);
        total += out[a];
    }
    for (auto& p : out)
        p /= total;
    return out;
}

double ToyPolicy::prob(std::size_t state, std::size_t action) const
{
    if (action >= actions_)
        throw std::out_of_range(fmt::format("toy policy has no action {}", action));
    return probs(state)[action];
}

RewardedSample sample_rollout(const ToyEnvironment& env, const ToyPolicy& policy, std::size_t task,
                              std::mt19937_64& rng)
{
    std::vector<std::size_t> path;
    std::size_t node = 0;
    for (int level = 0; level < env.depth(); ++level) {
        const auto p = policy.probs(env.state_of(task, node));
        const double u = unit_interval(rng);
        std::size_t action = 0;
        double cumulative = p[0];
        while (u >= cumulative && action + 1 < p.size())
            cumulative += p[++action];
        path.push_back(action);
        node = node * static_cast<std::size_t>(env.branching()) + 1 + action;
    }
    return env.score(task, path);
}

double expected_reward(const ToyEnvironment& env, const ToyPolicy& policy, std::size_t task)
{
    double total = 0;
    for (std::size_t leaf = 0; leaf < env.leaf_count(); ++leaf) {
        const auto sample = env.score(task, env.path_of(leaf));
        double p = 1;
        for (const auto& d : sample.decisions)
            p *= policy.prob(d.state, d.action);
        total += p * sample.reward;
    }
    return total;
}

double expected_reward(const ToyEnvironment& env, const ToyPolicy& policy)
{
    if (env.tasks().empty())
        return 0;
    double total = 0;
    for (std::size_t t = 0; t < env.tasks().size(); ++t)
        total += expected_reward(env, policy, t);
    return total / static_cast<double>(env.tasks().size());
}

double mean_objective(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                      const std::vector<RolloutGroup>& groups, const ClipConfig& clip)
{
    if (groups.empty())
        return 0;
    double total = 0;
    for (const auto& group : groups)
        total += dapo_objective(new_policy, old_policy, group, clip);
    return total / static_cast<double>(groups.size());
}

std::vector<double> dapo_gradient(const ToyPolicy& new_policy, const ToyPolicy& old_policy,
                                  const std::vector<RolloutGroup>& groups, const ClipConfig& clip)
{
    std::vector<double> grad(new_policy.theta().size(), 0.0);
    if (groups.empty())
        return grad;
    // d r_t / d theta[s, b] = r_t * (1[b = a_t] - pi_new(b | s_t))
    const auto add_ratio_gradient = [&](const Decision& d, double ratio, double weight) {
        const auto p = new_policy.probs(d.state);
        for (std::size_t b = 0; b < p.size(); ++b)
            grad[new_policy.index(d.state, b)] += weight * ratio * ((b == d.action ? 1.0 : 0.0) - p[b]);
    };
    const auto unclipped = [&](double r, double a) {
        return r * a <= std::clamp(r, 1.0 - clip.eps_low, 1.0 + clip.eps_high) * a;
    };
    const double group_weight = 1.0 / static_cast<double>(groups.size());
    for (const auto& group : groups) {
        if (group.samples.empty() || group.advantages.size() != group.samples.size())
            throw std::invalid_argument("dapo_gradient needs normalized, non-empty groups");
        const double sample_weight = group_weight / static_cast<double>(group.samples.size());
        for (std::size_t j = 0; j < group.samples.size(); ++j) {
            const auto& sample = group.samples[j];
            const auto ratios = prob_ratio(new_policy, old_policy, sample);
            const double a = group.advantages[j];
            const auto t = static_cast<double>(ratios.size());
            if (clip.aggregation == RatioAggregation::sample_mean) {
                const double mean = std::accumulate(ratios.begin(), ratios.end(), 0.0) / t;
                if (!unclipped(mean, a))
                    continue;
                for (std::size_t k = 0; k < ratios.size(); ++k)
                    add_ratio_gradient(sample.decisions[k], ratios[k], sample_weight * a / t);
            }
            else {
                for (std::size_t k = 0; k < ratios.size(); ++k) {
                    if (unclipped(ratios[k], a))
                        add_ratio_gradient(sample.decisions[k], ratios[k], sample_weight * a / t);
                }
            }
        }
    }
    return grad;
}

GradientCheckReport dapo_gradient_check(const ToyPolicy& policy, const ToyPolicy& old_policy,
                                        const std::vector<RolloutGroup>& groups, const ClipConfig& clip, double h)
{
    GradientCheckReport report;
    report.analytic = dapo_gradient(policy, old_policy, groups, clip);
    report.numeric.resize(report.analytic.size());
    auto probe = policy;
    for (std::size_t i = 0; i < report.numeric.size(); ++i) {
        const double base = probe.theta()[i];
        probe.theta()[i] = base + h;
        const double up = mean_objective(probe, old_policy, groups, clip);
        probe.theta()[i] = base - h;
        const double down = mean_objective(probe, old_policy, groups, clip);
        probe.theta()[i] = base;
        report.numeric[i] = (up - down) / (2 * h);
    }
    double diff = 0;
    double a_norm = 0;
    double n_norm = 0;
    constexpr double floor = 1e-6;
    for (std::size_t i = 0; i < report.analytic.size(); ++i) {
        const double a = report.analytic[i];
        const double n = report.numeric[i];
        diff += (a - n) * (a - n);
        a_norm += a * a;
        n_norm += n * n;
        report.max_component_error =
            std::max(report.max_component_error, std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor}));
    }
    report.analytic_norm = std::sqrt(a_norm);
    const double scale = std::sqrt(std::max(a_norm, n_norm));
    report.max_rel_error = scale > 0 ? std::sqrt(diff) / scale : 0.0;
    return report;
}

GradientCheckReport dapo_gradient_check(const ToyPolicy& policy, const std::vector<RolloutGroup>& groups,
                                        const ClipConfig& clip, double h)
{
    return dapo_gradient_check(policy, policy, groups, clip, h);
}

void to_json(json& out, const StepReport& report)
{
    out = json{{"step", report.step},
               {"mean_reward", report.mean_reward},
               {"groups_kept", report.groups_kept},
               {"J", report.objective},
               {"expected_reward", report.expected_reward},
               {"skipped", report.skipped}};
}

SimReport rl_sim_loop(ToyPolicy& policy, const ToyEnvironment& env, const SimConfig& config)
{
    if (config.group_size < 2)
        throw std::invalid_argument(fmt::format("group size must be at least 2, got {}", config.group_size));
    if (config.steps < 0 || config.updates_per_step < 1)
        throw std::invalid_argument("steps must be >= 0 and updates_per_step >= 1");
    if (env.tasks().empty())
        throw std::invalid_argument("the environment has no tasks");

    SimReport report;
    report.initial_expected_reward = expected_reward(env, policy);
    const auto task_count = env.tasks().size();
    for (int step = 0; step < config.steps; ++step) {
        const ToyPolicy old_policy = policy;
        std::vector<RolloutGroup> groups(task_count);
        core::parallel_for(task_count, config.parallelism, [&](std::size_t t) {
            std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                              static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(t)};
            std::mt19937_64 rng(seq);
            auto& group = groups[t];
            group.qa_id = env.tasks()[t].qa_id;
            for (int g = 0; g < config.group_size; ++g)
                group.samples.push_back(sample_rollout(env, old_policy, t, rng));
        });

        StepReport row;
        row.step = step;
        double total = 0;
        for (const auto& group : groups) {
            for (const auto& s : group.samples)
                total += s.reward;
        }
        if (task_count > 0)
            row.mean_reward = total / static_cast<double>(task_count * static_cast<std::size_t>(config.group_size));

        auto kept = dynamic_filter(std::move(groups));
        row.groups_kept = static_cast<int>(kept.size());
        if (kept.empty()) {
            spdlog::debug("rl step {}: every group was filtered out, skipping the update", step);
            row.skipped = true;
        }
        else {
            for (auto& group : kept)
                normalize_advantages(group);
            for (int u = 0; u < config.updates_per_step; ++u) {
                const auto grad = dapo_gradient(policy, old_policy, kept, config.clip);
                for (std::size_t i = 0; i < grad.size(); ++i)
                    policy.theta()[i] += config.lr * grad[i];
            }
            row.objective = mean_objective(policy, old_policy, kept, config.clip);
            ++report.updates;
        }
        row.expected_reward = expected_reward(env, policy);
        report.steps.push_back(row);
    }
    const auto skipped = report.steps.size() - static_cast<std::size_t>(report.updates);
    if (skipped > 0)
        spdlog::warn("rl: {} of {} steps skipped because dynamic sampling filtered out every group", skipped,
                     report.steps.size());
    return report;
}

} // namespace infoseek::rl
