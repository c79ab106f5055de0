#pragma once

#include "infoseek/cli/config.hpp"
#include "infoseek/clients/mock.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace infoseek::cli {

inline constexpr std::string_view kDemoRoot = "https://lakeside.example/";

// A small library website with a search index over it.
clients::MockWorld demo_world();

// Writes pages/*.json and index.json in the MockWorld directory layout.
void save_world(const clients::MockWorld& world, const std::filesystem::path& dir);

// Rule-based stand-ins for the model roles. The agent follows a fixed plan
// per question and answers in the prompt format; some plans fail on early
// attempts so rejection sampling and the filter have work to do.
std::unique_ptr<clients::ChatBackend> demo_agent();
std::unique_ptr<clients::ChatBackend> demo_summarizer();
std::unique_ptr<clients::ChatBackend> demo_synthesis();

struct DemoSummary {
    std::size_t pages = 0;
    std::size_t qas = 0;
    std::size_t attempts = 0;
    std::size_t sft_records = 0;
    std::size_t rl_questions = 0;
    std::size_t masked_spans = 0;
    double initial_expected_reward = 0;
    double final_expected_reward = 0;
    nlohmann::json eval;
    std::vector<std::filesystem::path> artifacts;
};

// All four stages against the demo world: crawl + E2H synthesis, rollout
// with rejection sampling, the filter funnel, SFT emission, the RL
// simulation on the toy environment built from the RL question set, and
// evaluation. Backend settings in `config` are ignored; the rest applies.
DemoSummary run_demo(const std::filesystem::path& out_dir, std::uint64_t seed, PipelineConfig config);

} // namespace infoseek::cli
