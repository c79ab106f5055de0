#pragma once

#include "infoseek/core/types.hpp"
#include "infoseek/rollout/completion.hpp"
#include "infoseek/rl/dapo.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace infoseek::cli {

// Bad config file, bad flag value or missing environment variable (exit 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BackendSettings {
    std::string llm_base_url = "https://api.openai.com/v1";
    std::string llm_api_key = "${INFOSEEK_LLM_API_KEY}";
    std::string agent_model = "gpt-4o";
    std::string summarizer_model = "gpt-4o-mini";
    std::string judge_model = "gpt-4o";
    std::string synthesis_model = "gpt-4o";
    std::string search_base_url = "https://google.serper.dev";
    std::string search_api_key = "${INFOSEEK_SEARCH_API_KEY}";
    int per_host_delay_ms = 1000;
    int timeout_ms = 60000;
    int max_retries = 3;
    int initial_backoff_ms = 250;
    std::size_t content_budget = 24000;
    // MockWorld directory; when set every backend is served offline from it.
    std::optional<std::filesystem::path> world;
};

struct SynthesisSettings {
    int max_depth = 2;
    int page_budget = 50;
    std::vector<std::string> allowed_domains;
    bool respect_robots = true;
    std::string user_agent = "infoseek";
    int questions_per_type = 2;
    std::vector<core::QuestionType> question_types{core::QuestionType::count, core::QuestionType::multi_hop,
                                                   core::QuestionType::intersection};
    int pages_per_question = 3;
    int e2h_iterations = 2;
};

struct RolloutSettings {
    int rejection_budget = 5;
    double temperature = 0.6;
    double top_p = 0.95;
    // Unset: 1.1 for long CoT, 1.0 for short CoT.
    std::optional<double> repetition_penalty;
    int max_rounds = 30;
    core::CotMode cot_mode = core::CotMode::short_cot;
    rollout::CompletionFormat format = rollout::CompletionFormat::prompt;
    // "funnel": accept only episodes passing correctness and quality; "any".
    std::string accept = "funnel";
};

struct FilterSettings {
    int min_actions = 2;
    std::optional<int> max_actions;
    int ngram_n = 10;
    int ngram_threshold = 4;
    bool use_judge = true;
    // Codec for attempt text.
    rollout::CompletionFormat format = rollout::CompletionFormat::tagged;
};

struct SftSettings {
    bool mask_tags = true;
};

struct RlSettings {
    int group_size = 16;
    double eps_low = 0.2;
    double eps_high = 0.28;
    double lr = 0.5;
    std::uint64_t seed = 0;
    int steps = 200;
    int depth = 3;
    int branching = 3;
    int updates_per_step = 1;
    rl::RatioAggregation aggregation = rl::RatioAggregation::sample_mean;
};

struct EvalSettings {
    // "llm" (judge_model over the chat API) or "reference" (offline lenient match).
    std::string judge = "llm";
    int attempts = 3;
    std::vector<std::string> metrics{"pass@1", "pass@3", "cons@3"};
};

struct PipelineConfig {
    BackendSettings backends;
    SynthesisSettings synthesis;
    RolloutSettings rollout;
    FilterSettings filter;
    SftSettings sft;
    RlSettings rl;
    EvalSettings eval;
    int parallelism = 1;

    // "section.key" -> environment variable that was referenced but unset.
    std::map<std::string, std::string> unresolved_env;

    double repetition_penalty() const;
};

// Replaces ${NAME} with the variable's value. Unset variables are reported
// through `missing` and expand to the empty string.
std::string interpolate_env(std::string_view text, std::vector<std::string>* missing = nullptr);

// Defaults with the environment applied to the default key strings.
PipelineConfig default_config();

// TOML document with sections [backends] [synthesis] [rollout] [filter] [sft]
// [rl] [eval] plus top-level `parallelism`. Unknown keys, wrong types and
// out-of-range values are ConfigErrors.
PipelineConfig parse_config(std::string_view toml_text, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

// Bounds and path checks; throws ConfigError naming the key.
void validate(const PipelineConfig& config);

// Throws ConfigError when `key` ("backends.llm_api_key") needs an unset
// environment variable or is empty.
const std::string& require_setting(const PipelineConfig& config, const std::string& key);

} // namespace infoseek::cli
