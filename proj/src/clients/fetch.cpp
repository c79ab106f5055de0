#include "infoseek/clients/fetch.hpp"

#include "infoseek/core/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>

namespace infoseek::clients {

FetchedPage RateLimitedFetch::fetch(const core::Url& url)
{
    limiter_.acquire(url.host());
    return inner_.fetch(url);
}

namespace {

constexpr std::array<std::string_view, 4> kSkippedElements = {"script", "style", "noscript", "template"};
constexpr std::array<std::string_view, 16> kBlockElements = {"p",  "div", "br", "li", "ul", "ol", "tr", "table",
                                                             "h1", "h2",  "h3", "h4", "h5", "h6", "section", "article"};

std::string lower_name(std::string_view tag)
{
    std::size_t i = 0;
    if (i < tag.size() && tag[i] == '/')
        ++i;
    std::size_t j = i;
    while (j < tag.size() && (std::isalnum(static_cast<unsigned char>(tag[j])) || tag[j] == '-'))
        ++j;
    return core::to_lower(tag.substr(i, j - i));
}

std::string decode_entities(std::string_view text)
{
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '&') {
            out += text[i];
            continue;
        }
        const auto semi = text.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += '&';
            continue;
        }
        const auto entity = text.substr(i + 1, semi - i - 1);
        if (entity == "amp")
            out += '&';
        else if (entity == "lt")
            out += '<';
        else if (entity == "gt")
            out += '>';
        else if (entity == "quot")
            out += '"';
        else if (entity == "apos" || entity == "#39")
            out += '\'';
        else if (entity == "nbsp")
            out += ' ';
        else if (entity.size() > 1 && entity[0] == '#') {
            unsigned long code = 0;
            try {
                code = entity[1] == 'x' || entity[1] == 'X' ? std::stoul(std::string(entity.substr(2)), nullptr, 16)
                                                            : std::stoul(std::string(entity.substr(1)));
            }
            catch (const std::exception&) {
                out += '&';
                continue;
            }
            // UTF-8 encode.
            if (code < 0x80) {
                out += static_cast<char>(code);
            }
            else if (code < 0x800) {
                out += static_cast<char>(0xC0 | (code >> 6));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
            else if (code < 0x10000) {
                out += static_cast<char>(0xE0 | (code >> 12));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
            else {
                out += static_cast<char>(0xF0 | (code >> 18));
                out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
                out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
                out += static_cast<char>(0x80 | (code & 0x3F));
            }
        }
        else {
            out += '&';
            continue;
        }
        i = semi;
    }
    return out;
}

std::optional<std::string> attribute(std::string_view tag, std::string_view name)
{
    const auto lower = core::to_lower(tag);
    std::size_t pos = 0;
    while ((pos = lower.find(name, pos)) != std::string::npos) {
        const bool boundary = pos > 0 && std::isspace(static_cast<unsigned char>(lower[pos - 1]));
        auto eq = pos + name.size();
        while (eq < lower.size() && std::isspace(static_cast<unsigned char>(lower[eq])))
            ++eq;
        if (!boundary || eq >= lower.size() || lower[eq] != '=') {
            pos += name.size();
            continue;
        }
        auto start = eq + 1;
        while (start < tag.size() && std::isspace(static_cast<unsigned char>(tag[start])))
            ++start;
        if (start >= tag.size())
            return std::nullopt;
        if (tag[start] == '"' || tag[start] == '\'') {
            const auto quote = tag[start];
            const auto end = tag.find(quote, start + 1);
            if (end == std::string_view::npos)
                return std::nullopt;
            return decode_entities(tag.substr(start + 1, end - start - 1));
        }
        auto end = start;
        while (end < tag.size() && !std::isspace(static_cast<unsigned char>(tag[end])) && tag[end] != '>')
            ++end;
        return decode_entities(tag.substr(start, end - start));
    }
    return std::nullopt;
}

std::string collapse_lines(std::string_view text)
{
    std::string out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos)
            end = text.size();
        std::string line;
        for (const auto token : core::split_whitespace(text.substr(start, end - start))) {
            if (!line.empty())
                line += ' ';
            line += token;
        }
        if (!line.empty()) {
            if (!out.empty())
                out += '\n';
            out += line;
        }
        start = end + 1;
    }
    return out;
}

} // namespace

HtmlDocument extract_html(std::string_view html, const core::Url& base)
{
    HtmlDocument doc;
    std::string raw_text;
    std::set<std::string> seen_links;
    std::size_t i = 0;
    while (i < html.size()) {
        if (html[i] != '<') {
            const auto next = html.find('<', i);
            const auto chunk = html.substr(i, next == std::string_view::npos ? std::string_view::npos : next - i);
            raw_text += decode_entities(chunk);
            if (next == std::string_view::npos)
                break;
            i = next;
            continue;
        }
        if (html.substr(i).starts_with("<!--")) {
            const auto end = html.find("-->", i + 4);
            i = end == std::string_view::npos ? html.size() : end + 3;
            continue;
        }
        const auto close = html.find('>', i);
        if (close == std::string_view::npos)
            break;
        const auto tag = html.substr(i + 1, close - i - 1);
        const auto name = lower_name(tag);
        i = close + 1;
        const bool closing = !tag.empty() && tag[0] == '/';
        if (!closing && std::find(kSkippedElements.begin(), kSkippedElements.end(), name) != kSkippedElements.end()) {
            const auto lower_rest = core::to_lower(html.substr(i));
            const auto end = lower_rest.find("</" + name);
            i = end == std::string::npos ? html.size() : i + end;
            continue;
        }
        if (!closing && name == "title") {
            const auto lower_rest = core::to_lower(html.substr(i));
            const auto end = lower_rest.find("</title");
            const auto title = html.substr(i, end == std::string::npos ? std::string_view::npos : end);
            doc.title = collapse_lines(decode_entities(title));
            i = end == std::string::npos ? html.size() : i + end;
            continue;
        }
        if (!closing && name == "a") {
            if (auto href = attribute(tag, "href")) {
                if (auto resolved = base.resolve(*href)) {
                    if (seen_links.insert(resolved->str()).second)
                        doc.links.push_back(resolved->str());
                }
            }
        }
        if (std::find(kBlockElements.begin(), kBlockElements.end(), name) != kBlockElements.end())
            raw_text += '\n';
        else
            raw_text += ' ';
    }
    doc.text = collapse_lines(raw_text);
    return doc;
}

RobotsRules RobotsRules::parse(std::string_view robots_txt, std::string_view user_agent)
{
    struct Group {
        std::vector<std::string> agents;
        RobotsRules rules;
    };
    std::vector<Group> groups;
    bool last_was_agent = false;
    std::size_t start = 0;
    while (start < robots_txt.size()) {
        auto end = robots_txt.find('\n', start);
        if (end == std::string_view::npos)
            end = robots_txt.size();
        auto line = robots_txt.substr(start, end - start);
        start = end + 1;
        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        const auto colon = line.find(':');
        if (colon == std::string_view::npos)
            continue;
        const auto key = core::to_lower(core::trim(line.substr(0, colon)));
        const auto value = std::string(core::trim(line.substr(colon + 1)));
        if (key == "user-agent") {
            if (!last_was_agent)
                groups.emplace_back();
            groups.back().agents.push_back(core::to_lower(value));
            last_was_agent = true;
            continue;
        }
        last_was_agent = false;
        if (groups.empty())
            continue;
        if (key == "disallow" && !value.empty())
            groups.back().rules.disallow_.push_back(value);
        else if (key == "allow" && !value.empty())
            groups.back().rules.allow_.push_back(value);
    }

    const auto agent = core::to_lower(user_agent);
    const auto product = agent.substr(0, agent.find('/'));
    const Group* wildcard = nullptr;
    for (const auto& group : groups) {
        for (const auto& name : group.agents) {
            if (name == "*")
                wildcard = &group;
            else if (!product.empty() && core::contains(name, product))
                return group.rules;
        }
    }
    return wildcard ? wildcard->rules : RobotsRules{};
}

bool RobotsRules::allowed(std::string_view path) const
{
    std::size_t best_allow = 0;
    std::size_t best_disallow = 0;
    bool any_disallow = false;
    for (const auto& rule : allow_) {
        if (path.starts_with(rule))
            best_allow = std::max(best_allow, rule.size());
    }
    for (const auto& rule : disallow_) {
        if (path.starts_with(rule)) {
            any_disallow = true;
            best_disallow = std::max(best_disallow, rule.size());
        }
    }
    return !any_disallow || best_allow >= best_disallow;
}

} // namespace infoseek::clients
