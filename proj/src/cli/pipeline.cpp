#include "infoseek/cli/pipeline.hpp"

#include "infoseek/core/parallel.hpp"
#include "infoseek/core/tagged.hpp"
#include "infoseek/core/url.hpp"
#include "infoseek/synthesis/e2h.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <map>
#include <set>

namespace infoseek::cli {

CrawlSynthesis synthesize_crawl(const std::string& root_url, const PipelineConfig& config, Backends& backends)
{
    const auto root = core::Url::parse(root_url);
    if (!root)
        throw ConfigError(fmt::format("--root is not an absolute URL: {}", root_url));
    const auto& s = config.synthesis;

    synthesis::CrawlOptions crawl_options;
    crawl_options.allowed_domains = s.allowed_domains;
    crawl_options.respect_robots = s.respect_robots;
    crawl_options.user_agent = s.user_agent;
    crawl_options.parallelism = config.parallelism;
    crawl_options.retry = backends.retry();

    CrawlSynthesis out;
    out.crawl = synthesis::crawl_site(*root, s.max_depth, s.page_budget, backends.fetch(), crawl_options);
    spdlog::info("crawled {} pages ({} failures)", out.crawl.pages.size(), out.crawl.failures.size());

    synthesis::CrawlQaOptions qa_options;
    qa_options.pages_per_question = static_cast<std::size_t>(s.pages_per_question);
    qa_options.model = backends.model(Role::synthesis);
    qa_options.retry = backends.retry();
    std::set<std::string> seen;
    for (const auto type : s.question_types) {
        auto generated = synthesis::generate_crawl_qa(out.crawl.pages, type, s.questions_per_type,
                                                      backends.chat(Role::synthesis), qa_options);
        for (auto& qa : generated) {
            if (seen.insert(qa.id).second)
                out.qas.push_back(std::move(qa));
        }
    }
    return out;
}

E2HSynthesis synthesize_e2h(const std::vector<core::QAPair>& seeds, int iterations, const PipelineConfig& config,
                            Backends& backends)
{
    if (iterations < 0)
        throw ConfigError("--iterations must be >= 0");
    synthesis::E2HOptions options;
    options.model = backends.model(Role::synthesis);
    options.retry = backends.retry();
    auto& llm = backends.chat(Role::synthesis);
    auto& search = backends.search();

    std::vector<std::optional<core::QAPair>> results(seeds.size());
    std::vector<std::string> errors(seeds.size());
    core::parallel_for(seeds.size(), config.parallelism, [&](std::size_t i) {
        try {
            results[i] = synthesis::e2h_synthesize(seeds[i], iterations, llm, search, options).qa;
        }
        catch (const synthesis::E2HError& e) {
            errors[i] = fmt::format("{}: {} ({})", seeds[i].id, e.what(), synthesis::to_string(e.kind()));
        }
    });

    E2HSynthesis out;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (results[i])
            out.qas.push_back(std::move(*results[i]));
        else {
            spdlog::warn("e2h dropped seed {}", errors[i]);
            out.failures.push_back(std::move(errors[i]));
        }
    }
    return out;
}

rollout::RolloutConfig rollout_config(const PipelineConfig& config, const Backends& backends)
{
    const auto& r = config.rollout;
    rollout::RolloutConfig out;
    out.rejection_budget = r.rejection_budget;
    out.sampling = core::SamplingParams{r.temperature, r.top_p, config.repetition_penalty(), r.max_rounds};
    out.cot_mode = r.cot_mode;
    out.format = r.format;
    out.model_id = backends.model(Role::agent);
    out.retry = backends.retry();
    return out;
}

filter::QualityRules quality_rules(const PipelineConfig& config)
{
    const auto& f = config.filter;
    filter::QualityRules rules;
    rules.ngram_n = f.ngram_n;
    rules.ngram_threshold = f.ngram_threshold;
    rules.min_actions = f.min_actions;
    rules.max_actions = f.max_actions;
    rules.use_judge = f.use_judge;
    return rules;
}

eval::JudgeOptions judge_options(const Backends& backends)
{
    eval::JudgeOptions options;
    options.model = backends.model(Role::judge);
    options.retry = backends.retry();
    return options;
}

RolloutOutput rollout_stage(const std::vector<core::QAPair>& qas, const PipelineConfig& config, Backends& backends)
{
    const auto tools = make_tools(backends);
    const auto settings = rollout_config(config, backends);
    const auto acceptor = config.rollout.accept == "any"
                              ? rollout::accept_any()
                              : filter::funnel_acceptor(backends.chat(Role::judge), quality_rules(config),
                                                        judge_options(backends));
    auto results = rollout::reject_sample_all(qas, backends.chat(Role::agent), tools, settings, acceptor,
                                              config.parallelism);
    RolloutOutput out;
    for (auto& result : results) {
        if (result.accepted)
            out.accepted.push_back(std::move(*result.accepted));
        for (auto& attempt : result.attempts)
            out.attempts.push_back(std::move(attempt));
    }
    return out;
}

filter::FunnelResult filter_stage(const std::vector<core::QAPair>& qas,
                                  const std::vector<rollout::RolloutAttempt>& attempts, const PipelineConfig& config,
                                  Backends& backends)
{
    std::vector<filter::FunnelSample> samples;
    std::map<std::string, std::size_t> slot;
    for (const auto& qa : qas) {
        if (!slot.emplace(qa.id, samples.size()).second)
            throw core::SchemaError(fmt::format("duplicate QA id {}", qa.id));
        samples.push_back({qa, {}});
    }
    for (const auto& attempt : attempts) {
        const auto it = slot.find(attempt.qa_id);
        if (it == slot.end())
            throw core::SchemaError(fmt::format("attempt for unknown QA id {}", attempt.qa_id));
        samples[it->second].attempts.push_back(attempt);
    }

    filter::FunnelOptions options;
    options.rules = quality_rules(config);
    options.judge = judge_options(backends);
    options.format = config.filter.format;
    options.parallelism = config.parallelism;
    return filter::funnel(samples, backends.chat(Role::judge), options);
}

std::vector<rollout::RolloutAttempt> attempts_from_trajectories(const std::vector<core::Trajectory>& trajectories)
{
    std::vector<rollout::RolloutAttempt> out;
    for (const auto& trajectory : trajectories) {
        rollout::RolloutAttempt attempt;
        attempt.qa_id = trajectory.qa_id;
        attempt.attempt_index = trajectory.sampler_meta.attempt_index;
        attempt.status = rollout::AttemptStatus::accepted;
        attempt.raw = core::serialize_tagged(trajectory);
        attempt.rounds = static_cast<int>(trajectory.steps.size());
        attempt.cot_mode = trajectory.cot_mode;
        attempt.sampler_meta = trajectory.sampler_meta;
        out.push_back(std::move(attempt));
    }
    return out;
}

std::vector<sft::SFTRecord> sft_stage(const std::vector<core::Trajectory>& trajectories, const PipelineConfig& config)
{
    std::vector<sft::SFTRecord> records;
    records.reserve(trajectories.size());
    for (const auto& trajectory : trajectories)
        records.push_back(sft::emit_sft(trajectory, sft::MaskPolicy{config.sft.mask_tags}));
    return records;
}

rl::SimConfig sim_config(const PipelineConfig& config)
{
    const auto& r = config.rl;
    rl::SimConfig sim;
    sim.group_size = r.group_size;
    sim.steps = r.steps;
    sim.lr = r.lr;
    sim.updates_per_step = r.updates_per_step;
    sim.seed = r.seed;
    sim.clip = rl::ClipConfig{r.eps_low, r.eps_high, r.aggregation};
    sim.parallelism = config.parallelism;
    return sim;
}

RlOutput rl_stage(const rl::ToyEnvironment& env, const PipelineConfig& config)
{
    auto policy = rl::ToyPolicy::uniform(env);
    RlOutput out;
    out.report = rl::rl_sim_loop(policy, env, sim_config(config));
    out.final_expected_reward = rl::expected_reward(env, policy);
    return out;
}

std::vector<eval::RunOutcome> collect_runs(const std::vector<core::QAPair>& qas, int attempts,
                                           const PipelineConfig& config, Backends& backends)
{
    if (attempts < 1)
        throw ConfigError("--attempts must be >= 1");
    const auto tools = make_tools(backends);
    const auto settings = rollout_config(config, backends);
    auto& agent = backends.chat(Role::agent);

    std::vector<eval::RunOutcome> runs(qas.size());
    core::parallel_for(qas.size(), config.parallelism, [&](std::size_t i) {
        const auto& qa = qas[i];
        auto& run = runs[i];
        run.qa_id = qa.id;
        run.question = qa.question;
        run.reference = qa.answer;
        for (int a = 1; a <= attempts; ++a) {
            auto episode = rollout::run_react(qa, agent, tools, settings, a);
            if (episode)
                run.attempts.push_back({episode->final_answer().final_answer, std::nullopt});
            else
                run.attempts.push_back({"", false});
        }
    });
    return runs;
}

nlohmann::json eval_stage(std::vector<eval::RunOutcome>& runs, const std::vector<std::string>& metrics,
                          const PipelineConfig& config, Backends& backends)
{
    bool needs_judge = false;
    for (const auto& run : runs)
        for (const auto& attempt : run.attempts)
            needs_judge = needs_judge || !attempt.correct;
    if (needs_judge)
        eval::judge_outcomes(runs, backends.chat(Role::judge), judge_options(backends), config.parallelism);

    const auto values = eval::compute_metrics(runs, metrics);
    nlohmann::json report{{"metrics", nlohmann::json::object()}, {"questions", runs.size()}};
    for (const auto& name : metrics)
        report["metrics"][name] = values.at(name);
    std::size_t min_attempts = runs.empty() ? 0 : runs.front().attempts.size();
    for (const auto& run : runs)
        min_attempts = std::min(min_attempts, run.attempts.size());
    report["min_attempts_per_question"] = min_attempts;
    return report;
}

} // namespace infoseek::cli
