#pragma once

#include "infoseek/cli/backends.hpp"
#include "infoseek/cli/config.hpp"
#include "infoseek/eval/metrics.hpp"
#include "infoseek/filter/filter.hpp"
#include "infoseek/rl/toy.hpp"
#include "infoseek/rollout/react.hpp"
#include "infoseek/sft/sft.hpp"
#include "infoseek/synthesis/crawl.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace infoseek::cli {

// Stage drivers shared by the subcommands and the offline demo. They take
// settings from the config and backends from `backends`; nothing here
// touches the filesystem.

struct CrawlSynthesis {
    synthesis::CrawlResult crawl;
    std::vector<core::QAPair> qas;
};

CrawlSynthesis synthesize_crawl(const std::string& root_url, const PipelineConfig& config, Backends& backends);

struct E2HSynthesis {
    std::vector<core::QAPair> qas;
    // "<seed id>: <error>" for seeds whose complication failed (dropped).
    std::vector<std::string> failures;
};

E2HSynthesis synthesize_e2h(const std::vector<core::QAPair>& seeds, int iterations, const PipelineConfig& config,
                            Backends& backends);

rollout::RolloutConfig rollout_config(const PipelineConfig& config, const Backends& backends);
filter::QualityRules quality_rules(const PipelineConfig& config);
eval::JudgeOptions judge_options(const Backends& backends);

struct RolloutOutput {
    std::vector<core::Trajectory> accepted;
    // Every attempt of every question, in input order.
    std::vector<rollout::RolloutAttempt> attempts;
};

RolloutOutput rollout_stage(const std::vector<core::QAPair>& qas, const PipelineConfig& config, Backends& backends);

// Groups attempts under their QA (unknown qa ids are a SchemaError) and
// runs the funnel. QAs without attempts land in the RL set.
filter::FunnelResult filter_stage(const std::vector<core::QAPair>& qas,
                                  const std::vector<rollout::RolloutAttempt>& attempts, const PipelineConfig& config,
                                  Backends& backends);

// Attempts rebuilt from accepted trajectories (tagged raw text).
std::vector<rollout::RolloutAttempt> attempts_from_trajectories(const std::vector<core::Trajectory>& trajectories);

std::vector<sft::SFTRecord> sft_stage(const std::vector<core::Trajectory>& trajectories, const PipelineConfig& config);

rl::SimConfig sim_config(const PipelineConfig& config);

struct RlOutput {
    rl::SimReport report;
    double final_expected_reward = 0;
};

// Uniform initial policy.
RlOutput rl_stage(const rl::ToyEnvironment& env, const PipelineConfig& config);

// `attempts` independent episodes per question (no acceptor). Failed
// episodes are recorded with an empty answer and judged incorrect.
std::vector<eval::RunOutcome> collect_runs(const std::vector<core::QAPair>& qas, int attempts,
                                           const PipelineConfig& config, Backends& backends);

// Judges unjudged attempts in place and returns the report object
// {"metrics": {...}, "questions": n, "attempts_per_question": k}.
nlohmann::json eval_stage(std::vector<eval::RunOutcome>& runs, const std::vector<std::string>& metrics,
                          const PipelineConfig& config, Backends& backends);

} // namespace infoseek::cli
