#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace infoseek::core {

// Thrown when text or JSON does not match a domain schema.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A tool call naming a tool outside {search, visit, answer}.
class UnknownToolError : public SchemaError {
public:
    using SchemaError::SchemaError;
};

enum class QaSource { crawl, e2h, open };
enum class QuestionType { count, multi_hop, intersection, other };
enum class ToolName { search, visit, answer };
enum class CotMode { short_cot, long_cot };

std::string_view to_string(QaSource source);
std::string_view to_string(QuestionType type);
std::string_view to_string(ToolName name);
std::string_view to_string(CotMode mode);

QaSource qa_source_from_string(std::string_view text);
QuestionType question_type_from_string(std::string_view text);
std::optional<ToolName> tool_name_from_string(std::string_view text);
CotMode cot_mode_from_string(std::string_view text);

struct QAPair {
    std::string id;
    std::string question;
    std::string answer;
    QaSource source = QaSource::open;
    int e2h_iterations = 0;
    std::optional<QuestionType> question_type;
    std::vector<std::string> provenance_urls;

    bool operator==(const QAPair&) const = default;
};

// Empty when the pair satisfies its invariants, else the first violation.
std::optional<std::string> validate(const QAPair& qa);

struct SearchArgs {
    std::string query;
    std::optional<int> filter_year;

    bool operator==(const SearchArgs&) const = default;
};

struct VisitArgs {
    std::string goal;
    std::string url_link;

    bool operator==(const VisitArgs&) const = default;
};

struct AnswerArgs {
    std::string final_answer;

    bool operator==(const AnswerArgs&) const = default;
};

struct ActionCall {
    // Alternative order matches ToolName.
    using Args = std::variant<SearchArgs, VisitArgs, AnswerArgs>;

    Args args;

    static ActionCall search(std::string query, std::optional<int> filter_year = std::nullopt);
    static ActionCall visit(std::string goal, std::string url_link);
    static ActionCall answer(std::string final_answer);

    ToolName name() const noexcept { return static_cast<ToolName>(args.index()); }
    bool is_answer() const noexcept { return name() == ToolName::answer; }

    bool operator==(const ActionCall&) const = default;
};

std::optional<std::string> validate(const ActionCall& action);

struct SearchResult {
    std::string title;
    std::string snippet;
    std::string url;

    bool operator==(const SearchResult&) const = default;
};

inline constexpr std::size_t kMaxSearchResults = 10;

struct SearchObservation {
    std::vector<SearchResult> results;

    bool operator==(const SearchObservation&) const = default;
};

inline constexpr std::string_view kToolErrorPrefix = "TOOL ERROR: ";

struct VisitObservation {
    std::string evidence;
    std::string summary;

    // A visit observation with a missing field marks its step as failed.
    bool failed() const noexcept { return evidence.empty() || summary.empty(); }

    bool operator==(const VisitObservation&) const = default;
};

using Observation = std::variant<SearchObservation, VisitObservation>;

// Error observation emitted when a tool invocation fails.
Observation tool_error_observation(std::string_view message);
bool is_tool_error(const Observation& observation);

struct Step {
    std::string thought;
    ActionCall action;
    std::optional<Observation> observation;

    bool operator==(const Step&) const = default;
};

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    double repetition_penalty = 1.0;
    int max_rounds = 30;

    bool operator==(const SamplingParams&) const = default;
};

std::optional<std::string> validate(const SamplingParams& params);

struct SamplerMeta {
    std::string model_id;
    int attempt_index = 1;
    SamplingParams sampling;
    // Steps whose thought fell back to visible text because the reasoning
    // channel was empty (long-CoT mode only).
    std::vector<std::size_t> fallback_thought_steps;

    bool operator==(const SamplerMeta&) const = default;
};

struct Trajectory {
    std::string qa_id;
    std::vector<Step> steps;
    CotMode cot_mode = CotMode::short_cot;
    SamplerMeta sampler_meta;

    const AnswerArgs& final_answer() const;

    bool operator==(const Trajectory&) const = default;
};

// Checks the trajectory invariants; rejection_budget bounds attempt_index
// when given.
std::optional<std::string> validate(const Trajectory& trajectory,
                                    std::optional<int> rejection_budget = std::nullopt);

} // namespace infoseek::core
