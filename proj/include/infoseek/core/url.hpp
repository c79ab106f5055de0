#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace infoseek::core {

// Absolute http(s)-style URL, normalized by libcurl's URL parser with the
// fragment removed.
class Url {
public:
    static std::optional<Url> parse(std::string_view text);

    // Resolves `reference` (absolute or relative) against this URL.
    std::optional<Url> resolve(std::string_view reference) const;

    const std::string& str() const noexcept { return text_; }
    const std::string& scheme() const noexcept { return scheme_; }
    const std::string& host() const noexcept { return host_; }
    const std::string& path() const noexcept { return path_; }

    // scheme://host[:port]
    std::string origin() const;

    // Approximate registrable domain: the last two host labels, or three
    // when the second-level label is a common public suffix (co.uk, ...).
    std::string registrable_domain() const;

    bool operator==(const Url& other) const { return text_ == other.text_; }
    bool operator<(const Url& other) const { return text_ < other.text_; }

private:
    std::string text_;
    std::string scheme_;
    std::string host_;
    std::string port_;
    std::string path_;
};

bool is_absolute_url(std::string_view text);

} // namespace infoseek::core
