#pragma once

#include "infoseek/core/tagged.hpp"
#include "infoseek/core/types.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace infoseek::sft {

// [start, end) in Unicode code points of SFTRecord::text.
using Span = std::pair<std::size_t, std::size_t>;

struct RecordSegment {
    core::SegmentRole role;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const RecordSegment&) const = default;
};

struct SFTRecord {
    std::string qa_id;
    std::string text;
    std::vector<RecordSegment> segments;
    std::vector<Span> mask_spans;

    bool operator==(const SFTRecord&) const = default;
};

struct MaskPolicy {
    // Mask the <tool_response> tags along with their payload.
    bool include_tags = true;
};

// Spans are taken from the serializer. Throws core::SerializationError.
SFTRecord emit_sft(const core::Trajectory& trajectory, const MaskPolicy& policy = {});

// Empty when the record is consistent (segments tile the text, roles follow
// the grammar, masks lie on observation segments), else the first problem.
std::optional<std::string> validate(const SFTRecord& record, const MaskPolicy& policy = {});

// JSONL schema: {"qa_id", "text", "segments":[{"role","start","end"}], "mask_spans":[[start,end]]}
void to_json(nlohmann::json& out, const SFTRecord& record);
// Strict; throws core::SchemaError, including for records that fail validate().
void from_json(const nlohmann::json& in, SFTRecord& record);

// Per-position data for the loss: one entry per token (or character).
struct TokenLoss {
    std::vector<Span> offsets;
    std::vector<double> logprobs;
    std::vector<bool> masked;
};

std::optional<std::string> validate(const TokenLoss& loss);

// A token is masked when it overlaps any mask span, so no observation
// character is ever trained on. Offsets are code point spans into the text.
std::vector<bool> token_mask(const SFTRecord& record, const std::vector<Span>& token_offsets);

// One position per code point.
std::vector<bool> char_mask(const SFTRecord& record);

// -(sum of unmasked logprobs) / (number of unmasked positions). Throws
// std::invalid_argument on length mismatch or when everything is masked.
double masked_nll(const std::vector<double>& logprobs, const std::vector<bool>& masked);
double masked_nll(const TokenLoss& loss);

} // namespace infoseek::sft
