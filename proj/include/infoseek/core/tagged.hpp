#pragma once

#include "infoseek/core/result.hpp"
#include "infoseek/core/types.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace infoseek::core {

namespace tags {
inline constexpr std::string_view think_open = "<think>";
inline constexpr std::string_view think_close = "</think>";
inline constexpr std::string_view call_open = "<tool_call>";
inline constexpr std::string_view call_close = "</tool_call>";
inline constexpr std::string_view response_open = "<tool_response>";
inline constexpr std::string_view response_close = "</tool_response>";
inline constexpr std::string_view answer_open = "<answer>";
inline constexpr std::string_view answer_close = "</answer>";
} // namespace tags

class SerializationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class SegmentRole { thought, action, observation, answer };
std::string_view to_string(SegmentRole role);
SegmentRole segment_role_from_string(std::string_view text);

// Byte range [begin, end) of one tagged block within serialized text.
struct Segment {
    SegmentRole role;
    std::size_t begin = 0;
    std::size_t end = 0;

    bool operator==(const Segment&) const = default;
};

struct TaggedText {
    std::string text;
    // Tiles `text`: consecutive, non-overlapping, covering every byte. The
    // newline separating two rounds belongs to the next round's thought.
    std::vector<Segment> segments;
};

// Throws SerializationError naming the first violated invariant.
TaggedText serialize_tagged_segments(const Trajectory& trajectory);
std::string serialize_tagged(const Trajectory& trajectory);

enum class ParseErrorKind {
    unclosed_tag,
    out_of_order_tag,
    invalid_json,
    unknown_tool,
    schema_violation,
    missing_answer,
    unexpected_end,
    unexpected_text,
};
std::string_view to_string(ParseErrorKind kind);

struct ParseError {
    ParseErrorKind kind;
    std::size_t position = 0;
    std::string detail;

    std::string message() const;
};

// All-or-nothing parse of the tagged grammar
//   (think tool_call tool_response)* think answer
// with optional whitespace between blocks. The result carries only steps;
// qa_id, cot_mode and sampler metadata are left at their defaults.
Result<Trajectory, ParseError> parse_tagged(std::string_view text);

} // namespace infoseek::core
