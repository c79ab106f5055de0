#include "infoseek/eval/judge.hpp"

#include "infoseek/core/prompts.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <cctype>
#include <charconv>
#include <cmath>

namespace infoseek::eval {

namespace {

std::optional<bool> verdict_word(std::string_view text)
{
    std::string word;
    for (char c : text) {
        if (std::isalpha(static_cast<unsigned char>(c)))
            word += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        else if (!word.empty())
            break;
    }
    if (word == "CORRECT")
        return true;
    if (word == "INCORRECT")
        return false;
    return std::nullopt;
}

} // namespace

std::optional<bool> parse_verdict(std::string_view reply)
{
    std::optional<bool> from_line;
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto end = reply.find('\n', start);
        if (end == std::string_view::npos)
            end = reply.size();
        auto line = core::trim(reply.substr(start, end - start));
        while (!line.empty() && (line.front() == '*' || line.front() == '#'))
            line.remove_prefix(1);
        if (core::starts_with_icase(line, "verdict")) {
            const auto colon = line.find(':');
            if (colon != std::string_view::npos) {
                if (auto verdict = verdict_word(line.substr(colon + 1)))
                    from_line = verdict;
            }
        }
        start = end + 1;
    }
    if (from_line)
        return from_line;

    bool saw_correct = false;
    bool saw_incorrect = false;
    std::string word;
    for (std::size_t i = 0; i <= reply.size(); ++i) {
        const char c = i < reply.size() ? reply[i] : ' ';
        if (std::isalpha(static_cast<unsigned char>(c))) {
            word += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            continue;
        }
        saw_correct |= word == "CORRECT";
        saw_incorrect |= word == "INCORRECT";
        word.clear();
    }
    if (saw_correct != saw_incorrect)
        return saw_correct;
    return std::nullopt;
}

bool judge_answer(std::string_view question, std::string_view prediction, std::string_view reference,
                  clients::ChatBackend& judge, const JudgeOptions& options)
{
    auto request = clients::user_request(core::render_template(core::prompts::judge_correctness.text,
                                                               {{"question", std::string(question)},
                                                                {"prediction", std::string(prediction)},
                                                                {"reference", std::string(reference)}}),
                                         options.sampling);
    request.model = options.model;
    const auto reply = clients::chat(judge, request, options.retry);
    const auto verdict = parse_verdict(reply.content);
    if (!verdict)
        throw JudgeError(fmt::format("judge reply has no CORRECT/INCORRECT verdict: {}", reply.content.substr(0, 200)));
    return *verdict;
}

namespace {

std::string normalize_answer(std::string_view text)
{
    std::string cleaned;
    for (char c : core::to_lower(text)) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || u >= 0x80 || c == '.' || c == '-')
            cleaned += c;
        else
            cleaned += ' ';
    }
    std::string out;
    for (auto token : core::split_whitespace(cleaned)) {
        while (!token.empty() && (token.back() == '.' || token.back() == '-'))
            token.remove_suffix(1);
        if (token.empty())
            continue;
        if (out.empty() && (token == "the" || token == "a" || token == "an"))
            continue;
        if (!out.empty())
            out += ' ';
        out += token;
    }
    return out;
}

std::optional<double> as_number(std::string_view text)
{
    std::string digits;
    for (char c : core::trim(text)) {
        if (c != ',')
            digits += c;
    }
    double value = 0;
    const auto* end = digits.data() + digits.size();
    const auto [ptr, ec] = std::from_chars(digits.data(), end, value);
    if (ec != std::errc{} || ptr != end || digits.empty())
        return std::nullopt;
    return value;
}

std::string section(std::string_view prompt, std::string_view open, std::string_view close)
{
    const auto begin = prompt.find(open);
    if (begin == std::string_view::npos)
        return {};
    const auto from = begin + open.size();
    const auto end = prompt.find(close, from);
    return std::string(core::trim(prompt.substr(from, end == std::string_view::npos ? std::string_view::npos : end - from)));
}

} // namespace

bool lenient_match(std::string_view prediction, std::string_view reference)
{
    const auto a = as_number(prediction);
    const auto b = as_number(reference);
    if (a && b)
        return std::abs(*a - *b) <= 1e-9 * std::max(1.0, std::abs(*b));
    const auto left = normalize_answer(prediction);
    return !left.empty() && left == normalize_answer(reference);
}

clients::ChatResponse ReferenceMatchJudge::complete(const clients::ChatRequest& request)
{
    if (request.messages.empty())
        throw clients::BackendError("empty judge request");
    const auto& prompt = request.messages.back().content;
    if (prompt.find("[reference answer]:") == std::string::npos)
        return {"I can only grade correctness prompts.", std::nullopt, "stop"};
    const auto prediction = section(prompt, "[response]:", "[reference answer]:");
    const auto reference = section(prompt, "[reference answer]:", "\n\nDecide only");
    const bool match = lenient_match(prediction, reference);
    return {fmt::format("extracted_final_answer: {}\nreasoning: {}\nverdict: {}", prediction,
                        match ? "The response matches the reference." : "The response differs from the reference.",
                        match ? "CORRECT" : "INCORRECT"),
            std::nullopt, "stop"};
}

} // namespace infoseek::eval
