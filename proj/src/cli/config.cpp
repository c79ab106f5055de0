#include "infoseek/cli/config.hpp"

#include "infoseek/core/text.hpp"

#include <fmt/format.h>
#include <toml.hpp>

#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace infoseek::cli {

namespace {

// Typed access to one TOML table that remembers which keys were read.
class Section {
public:
    Section(const toml::table* table, std::string name, std::map<std::string, std::string>& unresolved)
        : table_(table), name_(std::move(name)), unresolved_(unresolved)
    {
    }

    void get(const char* key, int& out) { read_int(key, out); }
    template <class U>
        requires std::is_unsigned_v<U>
    void get(const char* key, U& out)
    {
        std::int64_t value = static_cast<std::int64_t>(out);
        read_int(key, value);
        if (value < 0)
            fail(key, "must be non-negative");
        out = static_cast<std::size_t>(value);
    }
    void get(const char* key, std::optional<int>& out)
    {
        if (!has(key))
            return;
        int value = 0;
        read_int(key, value);
        out = value;
    }
    void get(const char* key, double& out)
    {
        if (const auto* node = find(key)) {
            if (auto value = node->value<double>(); value && (node->is_floating_point() || node->is_integer()))
                out = *value;
            else
                fail(key, "must be a number");
        }
    }
    void get(const char* key, std::optional<double>& out)
    {
        if (!has(key))
            return;
        double value = 0;
        get(key, value);
        out = value;
    }
    void get(const char* key, bool& out)
    {
        if (const auto* node = find(key)) {
            if (!node->is_boolean())
                fail(key, "must be true or false");
            out = *node->value<bool>();
        }
    }
    void get(const char* key, std::string& out)
    {
        if (const auto* node = find(key)) {
            if (!node->is_string())
                fail(key, "must be a string");
            out = expand(key, *node->value<std::string>());
        }
    }
    void get(const char* key, std::vector<std::string>& out)
    {
        if (const auto* node = find(key)) {
            const auto* array = node->as_array();
            if (!array)
                fail(key, "must be an array of strings");
            out.clear();
            for (const auto& item : *array) {
                if (!item.is_string())
                    fail(key, "must be an array of strings");
                out.push_back(expand(key, *item.value<std::string>()));
            }
        }
    }

    template <class Parse, class T>
    void get_enum(const char* key, T& out, Parse parse)
    {
        std::string text;
        if (!has(key))
            return;
        get(key, text);
        try {
            out = parse(text);
        }
        catch (const std::exception& e) {
            fail(key, e.what());
        }
    }

    bool has(const char* key) const { return table_ && table_->contains(key); }

    void finish() const
    {
        if (!table_)
            return;
        for (const auto& [key, _] : *table_) {
            const std::string name(key.str());
            if (!read_.contains(name))
                throw ConfigError(fmt::format("unknown config key '{}'", qualified(name)));
        }
    }

    [[noreturn]] void fail(const std::string& key, std::string_view why) const
    {
        throw ConfigError(fmt::format("config key '{}' {}", qualified(key), why));
    }

private:
    const toml::node* find(const char* key)
    {
        read_.insert(key);
        return table_ ? table_->get(key) : nullptr;
    }

    template <class I>
    void read_int(const char* key, I& out)
    {
        if (const auto* node = find(key)) {
            if (!node->is_integer())
                fail(key, "must be an integer");
            const auto value = *node->value<std::int64_t>();
            if constexpr (std::is_same_v<I, int>) {
                if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max())
                    fail(key, "is out of range");
            }
            out = static_cast<I>(value);
        }
    }

    std::string expand(const std::string& key, const std::string& text)
    {
        std::vector<std::string> missing;
        auto out = interpolate_env(text, &missing);
        if (!missing.empty())
            unresolved_[qualified(key)] = missing.front();
        else
            unresolved_.erase(qualified(key));
        return out;
    }

    std::string qualified(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

    const toml::table* table_;
    std::string name_;
    std::map<std::string, std::string>& unresolved_;
    std::set<std::string> read_;
};

rollout::CompletionFormat parse_format(std::string_view text)
{
    return rollout::completion_format_from_string(text);
}

rl::RatioAggregation parse_aggregation(std::string_view text)
{
    if (text == "sample_mean")
        return rl::RatioAggregation::sample_mean;
    if (text == "decision")
        return rl::RatioAggregation::decision;
    throw std::invalid_argument(fmt::format("must be sample_mean or decision, got '{}'", text));
}

void apply_environment_defaults(PipelineConfig& config)
{
    for (auto [key, value] : {std::pair{"backends.llm_api_key", &config.backends.llm_api_key},
                              std::pair{"backends.search_api_key", &config.backends.search_api_key}}) {
        std::vector<std::string> missing;
        *value = interpolate_env(*value, &missing);
        if (!missing.empty())
            config.unresolved_env[key] = missing.front();
    }
}

} // namespace

double PipelineConfig::repetition_penalty() const
{
    if (rollout.repetition_penalty)
        return *rollout.repetition_penalty;
    return rollout.cot_mode == core::CotMode::long_cot ? 1.1 : 1.0;
}

std::string interpolate_env(std::string_view text, std::vector<std::string>* missing)
{
    std::string out;
    std::size_t at = 0;
    while (at < text.size()) {
        const auto open = text.find("${", at);
        if (open == std::string_view::npos) {
            out += text.substr(at);
            break;
        }
        const auto close = text.find('}', open + 2);
        if (close == std::string_view::npos)
            throw ConfigError(fmt::format("unterminated ${{...}} in '{}'", text));
        out += text.substr(at, open - at);
        const std::string name(text.substr(open + 2, close - open - 2));
        if (name.empty())
            throw ConfigError(fmt::format("empty ${{}} in '{}'", text));
        if (const char* value = std::getenv(name.c_str()); value && *value)
            out += value;
        else if (missing)
            missing->push_back(name);
        at = close + 1;
    }
    return out;
}

PipelineConfig default_config()
{
    PipelineConfig config;
    apply_environment_defaults(config);
    return config;
}

PipelineConfig parse_config(std::string_view toml_text, const std::string& source)
{
    toml::table doc;
    try {
        doc = toml::parse(toml_text, source);
    }
    catch (const toml::parse_error& e) {
        std::ostringstream where;
        where << e.source().begin;
        throw ConfigError(fmt::format("{}: {} ({})", source, e.description(), where.str()));
    }

    PipelineConfig config = default_config();
    auto& env = config.unresolved_env;
    const auto section = [&](const char* name) {
        const auto* node = doc.get(name);
        if (node && !node->is_table())
            throw ConfigError(fmt::format("config section '{}' must be a table", name));
        return Section(node ? node->as_table() : nullptr, name, env);
    };

    Section top(&doc, "", env);
    top.get("parallelism", config.parallelism);

    {
        auto s = section("backends");
        auto& b = config.backends;
        s.get("llm_base_url", b.llm_base_url);
        s.get("llm_api_key", b.llm_api_key);
        s.get("agent_model", b.agent_model);
        s.get("summarizer_model", b.summarizer_model);
        s.get("judge_model", b.judge_model);
        s.get("synthesis_model", b.synthesis_model);
        s.get("search_base_url", b.search_base_url);
        s.get("search_api_key", b.search_api_key);
        s.get("per_host_delay_ms", b.per_host_delay_ms);
        s.get("timeout_ms", b.timeout_ms);
        s.get("max_retries", b.max_retries);
        s.get("initial_backoff_ms", b.initial_backoff_ms);
        s.get("content_budget", b.content_budget);
        if (s.has("world")) {
            std::string world;
            s.get("world", world);
            b.world = world;
        }
        s.finish();
    }
    {
        auto s = section("synthesis");
        auto& y = config.synthesis;
        s.get("max_depth", y.max_depth);
        s.get("page_budget", y.page_budget);
        s.get("allowed_domains", y.allowed_domains);
        s.get("respect_robots", y.respect_robots);
        s.get("user_agent", y.user_agent);
        s.get("questions_per_type", y.questions_per_type);
        if (s.has("question_types")) {
            std::vector<std::string> names;
            s.get("question_types", names);
            y.question_types.clear();
            for (const auto& name : names) {
                try {
                    y.question_types.push_back(core::question_type_from_string(name));
                }
                catch (const std::exception& e) {
                    s.fail("question_types", e.what());
                }
            }
        }
        s.get("pages_per_question", y.pages_per_question);
        s.get("e2h_iterations", y.e2h_iterations);
        s.finish();
    }
    {
        auto s = section("rollout");
        auto& r = config.rollout;
        s.get("rejection_budget", r.rejection_budget);
        s.get("temperature", r.temperature);
        s.get("top_p", r.top_p);
        s.get("repetition_penalty", r.repetition_penalty);
        s.get("max_rounds", r.max_rounds);
        s.get_enum("cot_mode", r.cot_mode, core::cot_mode_from_string);
        s.get_enum("format", r.format, parse_format);
        s.get("accept", r.accept);
        s.finish();
    }
    {
        auto s = section("filter");
        auto& f = config.filter;
        s.get("min_actions", f.min_actions);
        s.get("max_actions", f.max_actions);
        s.get("ngram_n", f.ngram_n);
        s.get("ngram_threshold", f.ngram_threshold);
        s.get("use_judge", f.use_judge);
        s.get_enum("format", f.format, parse_format);
        s.finish();
    }
    {
        auto s = section("sft");
        s.get("mask_tags", config.sft.mask_tags);
        s.finish();
    }
    {
        auto s = section("rl");
        auto& r = config.rl;
        s.get("group_size", r.group_size);
        s.get("eps_low", r.eps_low);
        s.get("eps_high", r.eps_high);
        s.get("lr", r.lr);
        s.get("seed", r.seed);
        s.get("steps", r.steps);
        s.get("depth", r.depth);
        s.get("branching", r.branching);
        s.get("updates_per_step", r.updates_per_step);
        s.get_enum("aggregation", r.aggregation, parse_aggregation);
        s.finish();
    }
    {
        auto s = section("eval");
        auto& e = config.eval;
        s.get("judge", e.judge);
        s.get("attempts", e.attempts);
        s.get("metrics", e.metrics);
        s.finish();
    }

    for (const auto& [key, node] : doc) {
        const std::string name(key.str());
        static const std::set<std::string> known{"parallelism", "backends", "synthesis", "rollout",
                                                 "filter",      "sft",      "rl",        "eval"};
        if (!known.contains(name))
            throw ConfigError(fmt::format("unknown config key '{}'", name));
    }
    validate(config);
    return config;
}

PipelineConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(fmt::format("cannot read config file {}", path.string()));
    std::ostringstream text;
    text << in.rdbuf();
    auto config = parse_config(text.str(), path.string());
    if (config.backends.world && config.backends.world->is_relative())
        config.backends.world = path.parent_path() / *config.backends.world;
    validate(config);
    return config;
}

void validate(const PipelineConfig& config)
{
    const auto check = [](bool ok, std::string_view key, std::string_view rule) {
        if (!ok)
            throw ConfigError(fmt::format("config key '{}' {}", key, rule));
    };
    const auto& b = config.backends;
    check(config.parallelism >= 1, "parallelism", "must be >= 1");
    check(b.per_host_delay_ms >= 0, "backends.per_host_delay_ms", "must be >= 0");
    check(b.timeout_ms > 0, "backends.timeout_ms", "must be > 0");
    check(b.max_retries >= 0, "backends.max_retries", "must be >= 0");
    check(b.initial_backoff_ms >= 0, "backends.initial_backoff_ms", "must be >= 0");
    check(b.content_budget >= 256, "backends.content_budget", "must be >= 256");
    if (b.world)
        check(std::filesystem::is_directory(*b.world), "backends.world",
              fmt::format("names a missing directory: {}", b.world->string()));

    const auto& y = config.synthesis;
    check(y.max_depth >= 0, "synthesis.max_depth", "must be >= 0");
    check(y.page_budget >= 1, "synthesis.page_budget", "must be >= 1");
    check(y.questions_per_type >= 0, "synthesis.questions_per_type", "must be >= 0");
    check(y.pages_per_question >= 1, "synthesis.pages_per_question", "must be >= 1");
    check(y.e2h_iterations >= 0, "synthesis.e2h_iterations", "must be >= 0");

    const auto& r = config.rollout;
    check(r.rejection_budget >= 1, "rollout.rejection_budget", "must be >= 1");
    check(r.accept == "funnel" || r.accept == "any", "rollout.accept", "must be \"funnel\" or \"any\"");
    const core::SamplingParams sampling{r.temperature, r.top_p, config.repetition_penalty(), r.max_rounds};
    if (auto issue = core::validate(sampling))
        throw ConfigError(fmt::format("config section 'rollout': {}", *issue));

    const auto& f = config.filter;
    check(f.min_actions >= 1, "filter.min_actions", "must be >= 1");
    check(!f.max_actions || *f.max_actions >= f.min_actions, "filter.max_actions", "must be >= filter.min_actions");
    check(f.ngram_n >= 1, "filter.ngram_n", "must be >= 1");
    check(f.ngram_threshold >= 1, "filter.ngram_threshold", "must be >= 1");

    const auto& l = config.rl;
    check(l.group_size >= 2, "rl.group_size", "must be >= 2");
    check(l.eps_low >= 0 && l.eps_low < 1, "rl.eps_low", "must be in [0, 1)");
    check(l.eps_high >= 0, "rl.eps_high", "must be >= 0");
    check(l.lr >= 0, "rl.lr", "must be >= 0");
    check(l.steps >= 0, "rl.steps", "must be >= 0");
    check(l.depth >= 1 && l.depth <= 8, "rl.depth", "must be in [1, 8]");
    check(l.branching >= 2 && l.branching <= 8, "rl.branching", "must be in [2, 8]");
    check(l.updates_per_step >= 1, "rl.updates_per_step", "must be >= 1");

    const auto& e = config.eval;
    check(e.judge == "llm" || e.judge == "reference", "eval.judge", "must be \"llm\" or \"reference\"");
    check(e.attempts >= 1, "eval.attempts", "must be >= 1");
    for (const auto& metric : e.metrics) {
        bool known = metric == "cons@3";
        if (metric.starts_with("pass@")) {
            const auto k = metric.substr(5);
            known = !k.empty() && k.find_first_not_of("0123456789") == std::string::npos && std::stoi(k) >= 1 &&
                    std::stoi(k) <= e.attempts;
        }
        check(known, "eval.metrics", fmt::format("has an unknown metric or k > eval.attempts: '{}'", metric));
        if (metric == "cons@3")
            check(e.attempts >= 3, "eval.metrics", "cons@3 needs eval.attempts >= 3");
    }
}

const std::string& require_setting(const PipelineConfig& config, const std::string& key)
{
    if (const auto it = config.unresolved_env.find(key); it != config.unresolved_env.end())
        throw ConfigError(fmt::format("{} requires environment variable {} (unset)", key, it->second));
    const auto& b = config.backends;
    static const std::map<std::string, const std::string BackendSettings::*> fields{
        {"backends.llm_base_url", &BackendSettings::llm_base_url},
        {"backends.llm_api_key", &BackendSettings::llm_api_key},
        {"backends.search_base_url", &BackendSettings::search_base_url},
        {"backends.search_api_key", &BackendSettings::search_api_key},
    };
    const auto field = fields.find(key);
    if (field == fields.end())
        throw std::invalid_argument(fmt::format("require_setting: unsupported key {}", key));
    const auto& value = b.*(field->second);
    if (value.empty())
        throw ConfigError(fmt::format("{} must not be empty", key));
    return value;
}

} // namespace infoseek::cli
