#include "infoseek/core/prompts.hpp"

namespace infoseek::core::prompts {

const PromptTemplate react_instruct{"react_instruct", "1", R"(Answer the question below as well as you can. You can call tools to gather information.

Reply using exactly this layout:

Question: the question to answer
Thought: your reasoning about what to do next
Action: the tool to use, one of [{tool_names}]
Action Input: the tool arguments as a JSON object with explicit parameters
Observation: the tool result (provided to you, never write it yourself)
... (Thought / Action / Action Input / Observation may repeat as often as needed)
Thought: your reasoning once the evidence is sufficient
Final Answer: the final answer to the original question

Guidelines
1. Thinking: check whether the evidence collected so far is complete and explain why the next tool is the right one.
2. Acting: use only the tools described below, or give the Final Answer. Give the Final Answer only when you can confirm it from the evidence.
3. Observing: read each tool result and use it to plan the next step.

Available tools:

{tool_descs}

Work step by step, interleaving thoughts, actions and observations. Take as many steps as you need.

Question: {query})"};

const PromptTemplate react_reasoning{"react_reasoning", "1", R"(Answer the question below as well as you can. Use only the tools described here, or give the Final Answer once it is confirmed by evidence.

Available tools:

{tool_descs}

Output layout:
Action: the tool to use, one of [{tool_names}]
Action Input: the tool arguments as a JSON object with explicit parameters

To finish, write "Final Answer: <answer>" instead of an Action. Always gather information with the tools before answering. After every Action and Action Input, stop and wait for the Observation.

Question: {query})"};

const PromptTemplate react_tagged{"react_tagged", "1", R"(Answer the question below by interleaving reasoning and tool calls.

Available tools:

{tool_descs}

Wrap each piece of reasoning in <think></think>. Call a tool with <tool_call>{"name": "<tool>", "arguments": {...}}</tool_call> and wait for the <tool_response>. When the evidence is sufficient, write the final thought followed by <answer>your answer</answer>.

Question: {query})"};

const PromptTemplate react_continue{"react_continue", "1", R"(Continue. {format_hint})"};

const PromptTemplate summarizer{"summarizer", "1", R"(You extract goal-relevant information from a web page.

Goal: {goal}
Page URL: {url}

Page content:
{content}

Reply with a single JSON object and nothing else:
{"evidence": "verbatim passages from the page that bear on the goal", "summary": "a short summary of what the page says about the goal"}
If the page holds nothing relevant, set evidence to an empty string and say so in the summary.)"};

const PromptTemplate crawl_qa{"crawl_qa", "1", R"(You write challenging fact-seeking questions from a set of crawled web pages.

Question type: {question_type}
{type_guidance}
{count_hint}

Rules:
- The answer must be a short, unambiguous entity, number or date found in the pages.
- The question must be answerable only by reading the pages; do not rely on common knowledge.
- Do not copy sentences verbatim into the question.

Examples:
COUNT: "How many projects listed on the lab's software page were released before 2020?" -> "3"
MULTI_HOP: "Which university awarded the doctorate of the person who maintains the parser library?" -> "ETH Zurich"
INTERSECTION: "Which workshop is listed both on the 2021 schedule and on the organizer's profile page?" -> "LLM Agents Day"

Pages:
{pages}

Reply with one JSON object: {"question": "...", "answer": "..."})"};

const PromptTemplate e2h_entity{"e2h_entity", "1", R"(Pick one named entity from the question below that could be replaced by an indirect description. Do not pick the answer or a word that is only a question word.

Question: {question}

Reply with JSON: {"entity": "<exact substring of the question>"})"};

const PromptTemplate e2h_query{"e2h_query", "1", R"(Write one web search query that finds distinguishing facts about the entity "{entity}" as it is used in this question:

{question}

Reply with JSON: {"query": "..."})"};

const PromptTemplate e2h_rewrite{"e2h_rewrite", "1", R"(Rewrite the entity "{entity}" as an indirect description grounded in the retrieved information below, so that a solver must first identify the entity before answering. The description must not contain "{entity}" and must not reveal the answer.

Question: {question}

Retrieved information:
{context}

Reply with JSON: {"rewrite": "<noun phrase that replaces the entity>"})"};

const PromptTemplate judge_correctness{"judge_correctness", "1", R"(Judge whether the response to the question is correct, using the reference answer as ground truth.

[question]: {question}

[response]: {prediction}

[reference answer]: {reference}

Decide only whether the final answer in the response matches the reference answer. Accept semantically equivalent answers (formatting, units, aliases, small numeric rounding). Reject answers that are incomplete, ambiguous, or that differ in substance. Do not solve the question yourself.

Reply in this format:
extracted_final_answer: <the final answer taken from the response, or None>
reasoning: <one or two sentences>
verdict: CORRECT or INCORRECT)"};

const PromptTemplate judge_quality{"judge_quality", "1", R"(Review an agent trajectory that answered a question with web tools. Judge three criteria:
1. information_non_redundancy: the steps do not repeat the same searches or restate the same information without progress.
2. goal_alignment: every action serves the question being asked.
3. logical_reasoning: the reasoning is coherent and the final answer follows from the gathered evidence.

Question: {question}
Reference answer: {reference}

Trajectory:
{trajectory}

Reply with one JSON object of booleans:
{"information_non_redundancy": true|false, "goal_alignment": true|false, "logical_reasoning": true|false})"};

} // namespace infoseek::core::prompts
