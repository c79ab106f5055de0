#pragma once

#include "infoseek/core/types.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string_view>

namespace infoseek::core {

using json = nlohmann::json;

// JSONL record mappings. Readers are strict: unknown enum values, missing
// required keys and invariant violations raise SchemaError.
void to_json(json& out, const QAPair& qa);
void from_json(const json& in, QAPair& qa);

void to_json(json& out, const SamplingParams& params);
void from_json(const json& in, SamplingParams& params);

void to_json(json& out, const SamplerMeta& meta);
void from_json(const json& in, SamplerMeta& meta);

void to_json(json& out, const Trajectory& trajectory);
void from_json(const json& in, Trajectory& trajectory);

// Tool-call payload: {"name": ..., "arguments": {...}}.
json action_to_json(const ActionCall& action);
// Exact-schema decoding: no extra keys, no missing required keys. Throws
// UnknownToolError for names outside the action space, SchemaError otherwise.
ActionCall action_from_json(const json& payload);

json observation_to_json(const Observation& observation);
// `after` is the action the observation answers; tool-error observations
// are accepted after any action.
Observation observation_from_json(const json& payload, ToolName after);

// Pulls a JSON object out of a model reply: the whole reply, a fenced
// ```json block, or the outermost {...} span of surrounding prose.
std::optional<json> extract_json_object(std::string_view reply);

// Compact dump with '<' escaped so payloads never contain tag text.
std::string dump_tag_safe(const json& value);

} // namespace infoseek::core
