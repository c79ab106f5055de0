#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>

namespace infoseek::core {

namespace {

bool is_space(char c)
{
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_continuation(char c)
{
    return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

} // namespace

std::string_view trim(std::string_view text)
{
    while (!text.empty() && is_space(text.front()))
        text.remove_prefix(1);
    while (!text.empty() && is_space(text.back()))
        text.remove_suffix(1);
    return text;
}

std::string to_lower(std::string_view text)
{
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_whitespace(std::string_view text)
{
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i]))
            ++i;
        const auto start = i;
        while (i < text.size() && !is_space(text[i]))
            ++i;
        if (i > start)
            tokens.push_back(text.substr(start, i - start));
    }
    return tokens;
}

std::string normalize_query(std::string_view text)
{
    std::string out;
    for (const auto token : split_whitespace(text)) {
        if (!out.empty())
            out += ' ';
        out += to_lower(token);
    }
    return out;
}

std::string replace_all(std::string_view text, std::string_view from, std::string_view to)
{
    if (from.empty())
        return std::string(text);
    std::string out;
    std::size_t pos = 0;
    while (true) {
        const auto hit = text.find(from, pos);
        if (hit == std::string_view::npos)
            break;
        out.append(text.substr(pos, hit - pos));
        out.append(to);
        pos = hit + from.size();
    }
    out.append(text.substr(pos));
    return out;
}

bool contains(std::string_view haystack, std::string_view needle)
{
    return haystack.find(needle) != std::string_view::npos;
}

bool starts_with_icase(std::string_view text, std::string_view prefix)
{
    if (text.size() < prefix.size())
        return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

std::uint64_t fnv1a64(std::string_view text)
{
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

std::string hex_digest(std::string_view text, std::size_t width)
{
    auto digest = fmt::format("{:016x}", fnv1a64(text));
    if (width < digest.size())
        digest.resize(width);
    return digest;
}

std::size_t utf8_length(std::string_view text)
{
    return static_cast<std::size_t>(
        std::count_if(text.begin(), text.end(), [](char c) { return !is_continuation(c); }));
}

std::size_t utf8_codepoint_offset(std::string_view text, std::size_t byte_offset)
{
    return utf8_length(text.substr(0, std::min(byte_offset, text.size())));
}

std::size_t utf8_byte_offset(std::string_view text, std::size_t codepoint_offset)
{
    std::size_t seen = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_continuation(text[i]))
            continue;
        if (seen == codepoint_offset)
            return i;
        ++seen;
    }
    return text.size();
}

std::string truncate_head_tail(std::string_view text, std::size_t budget)
{
    if (text.size() <= budget)
        return std::string(text);
    constexpr std::string_view marker = "\n[...]\n";
    if (budget <= marker.size())
        return std::string(text.substr(0, budget));
    const auto room = budget - marker.size();
    auto head = room - room / 3;
    auto tail = room - head;
    // Do not split a UTF-8 sequence.
    while (head > 0 && is_continuation(text[head]))
        --head;
    auto tail_start = text.size() - tail;
    while (tail_start < text.size() && is_continuation(text[tail_start]))
        ++tail_start;
    std::string out(text.substr(0, head));
    out += marker;
    out += text.substr(tail_start);
    return out;
}

std::string render_template(std::string_view templ,
                            const std::vector<std::pair<std::string, std::string>>& values)
{
    // Single pass, so substituted values are never re-expanded.
    std::string out;
    std::size_t pos = 0;
    while (pos < templ.size()) {
        const auto open = templ.find('{', pos);
        if (open == std::string_view::npos)
            break;
        const auto close = templ.find('}', open + 1);
        if (close == std::string_view::npos)
            break;
        const auto name = templ.substr(open + 1, close - open - 1);
        const auto hit = std::find_if(values.begin(), values.end(),
                                      [&](const auto& entry) { return entry.first == name; });
        out.append(templ.substr(pos, open - pos));
        if (hit != values.end()) {
            out.append(hit->second);
            pos = close + 1;
        }
        else {
            out.push_back('{');
            pos = open + 1;
        }
    }
    out.append(templ.substr(pos));
    return out;
}

} // namespace infoseek::core
