#pragma once

#include "infoseek/core/result.hpp"
#include "infoseek/core/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace infoseek::rollout {

// How the agent writes its turns.
//   prompt: "Thought: ... Action: ... Action Input: {...}" / "Final Answer: ..."
//   tagged: "<think>...</think><tool_call>{...}</tool_call>" / "<answer>...</answer>"
enum class CompletionFormat { prompt, tagged };

std::string_view to_string(CompletionFormat format);
CompletionFormat completion_format_from_string(std::string_view text);

struct ParsedTurn {
    std::string thought;
    core::ActionCall action;
};

// Anything the model writes after the action (a self-invented observation)
// is ignored. Errors are human-readable causes.
Result<ParsedTurn, std::string> parse_prompt_turn(std::string_view text);
Result<ParsedTurn, std::string> parse_tagged_turn(std::string_view text);
Result<ParsedTurn, std::string> parse_turn(std::string_view text, CompletionFormat format);

// Renders one step's action the way the model is asked to write it.
std::string render_action(const core::ActionCall& action, CompletionFormat format);
std::string render_observation(const core::Observation& observation, CompletionFormat format);

// Whole-trajectory codec for the prompt format:
//   Thought: ...\nAction: ...\nAction Input: {...}\nObservation: {...}\n ... Thought: ...\nFinal Answer: ...
// Observations are single-line JSON. The parser is all-or-nothing.
std::string render_prompt_transcript(const std::vector<core::Step>& steps);
Result<core::Trajectory, std::string> parse_prompt_transcript(std::string_view text);

} // namespace infoseek::rollout
