#pragma once

#include <string_view>

namespace infoseek::core {

// Versioned prompt assets. Placeholders use {name} syntax and are filled
// with render_template(). Bump the version when the wording changes so
// artifacts can be traced to the template that produced them.
struct PromptTemplate {
    std::string_view id;
    std::string_view version;
    std::string_view text;
};

namespace prompts {

// ReAct prompt for instruction models: Thought / Action / Action Input /
// Observation rounds, ending with "Final Answer:".
// {tool_descs} {tool_names} {query}
extern const PromptTemplate react_instruct;
// ReAct prompt for reasoning models: only Action / Action Input is
// requested; the reasoning channel supplies the thought.
extern const PromptTemplate react_reasoning;
// Prompt for models trained on the tagged format.
extern const PromptTemplate react_tagged;
// Appended after the latest observation. {format_hint}
extern const PromptTemplate react_continue;

// {goal} {url} {content}
extern const PromptTemplate summarizer;

// {question_type} {type_guidance} {count_hint} {pages}
extern const PromptTemplate crawl_qa;

// {question}
extern const PromptTemplate e2h_entity;
// {question} {entity}
extern const PromptTemplate e2h_query;
// {question} {entity} {context}
extern const PromptTemplate e2h_rewrite;

// {question} {prediction} {reference}
extern const PromptTemplate judge_correctness;
// {question} {reference} {trajectory}
extern const PromptTemplate judge_quality;

} // namespace prompts
} // namespace infoseek::core
