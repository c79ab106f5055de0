#include "infoseek/core/url.hpp"

#include "infoseek/core/text.hpp"

#include <curl/curl.h>

#include <algorithm>
#include <array>
#include <memory>
#include <vector>

namespace infoseek::core {

namespace {

struct UrlHandleDeleter {
    void operator()(CURLU* handle) const noexcept { curl_url_cleanup(handle); }
};
using UrlHandle = std::unique_ptr<CURLU, UrlHandleDeleter>;

std::string get_part(CURLU* handle, CURLUPart part)
{
    char* value = nullptr;
    if (curl_url_get(handle, part, &value, 0) != CURLUE_OK || value == nullptr)
        return {};
    std::string out(value);
    curl_free(value);
    return out;
}

} // namespace

std::optional<Url> Url::parse(std::string_view text)
{
    const auto trimmed = std::string(trim(text));
    if (trimmed.empty() || trimmed.find("://") == std::string::npos)
        return std::nullopt;
    UrlHandle handle(curl_url());
    if (!handle)
        return std::nullopt;
    if (curl_url_set(handle.get(), CURLUPART_URL, trimmed.c_str(), 0) != CURLUE_OK)
        return std::nullopt;
    curl_url_set(handle.get(), CURLUPART_FRAGMENT, nullptr, 0);

    Url url;
    url.scheme_ = to_lower(get_part(handle.get(), CURLUPART_SCHEME));
    url.host_ = to_lower(get_part(handle.get(), CURLUPART_HOST));
    url.port_ = get_part(handle.get(), CURLUPART_PORT);
    url.path_ = get_part(handle.get(), CURLUPART_PATH);
    if (url.host_.empty() || (url.scheme_ != "http" && url.scheme_ != "https"))
        return std::nullopt;
    curl_url_set(handle.get(), CURLUPART_HOST, url.host_.c_str(), 0);
    curl_url_set(handle.get(), CURLUPART_SCHEME, url.scheme_.c_str(), 0);
    url.text_ = get_part(handle.get(), CURLUPART_URL);
    if (url.text_.empty())
        return std::nullopt;
    return url;
}

std::optional<Url> Url::resolve(std::string_view reference) const
{
    const auto ref = std::string(trim(reference));
    if (ref.empty() || ref.starts_with('#') || starts_with_icase(ref, "javascript:") ||
        starts_with_icase(ref, "mailto:"))
        return std::nullopt;
    UrlHandle handle(curl_url());
    if (!handle)
        return std::nullopt;
    if (curl_url_set(handle.get(), CURLUPART_URL, text_.c_str(), 0) != CURLUE_OK)
        return std::nullopt;
    // A relative URL set on a handle that already holds one is resolved
    // against it.
    if (curl_url_set(handle.get(), CURLUPART_URL, ref.c_str(), 0) != CURLUE_OK)
        return std::nullopt;
    return parse(get_part(handle.get(), CURLUPART_URL));
}

std::string Url::origin() const
{
    std::string out = scheme_ + "://" + host_;
    if (!port_.empty())
        out += ":" + port_;
    return out;
}

std::string Url::registrable_domain() const
{
    static constexpr std::array<std::string_view, 10> kSecondLevel = {
        "co", "com", "ac", "org", "net", "gov", "edu", "ne", "or", "go"};
    std::vector<std::string_view> labels;
    std::string_view rest = host_;
    while (!rest.empty()) {
        const auto dot = rest.find('.');
        labels.push_back(rest.substr(0, dot));
        if (dot == std::string_view::npos)
            break;
        rest.remove_prefix(dot + 1);
    }
    if (labels.size() <= 2)
        return host_;
    std::size_t keep = 2;
    const auto second = labels[labels.size() - 2];
    if (labels.back().size() == 2 &&
        std::find(kSecondLevel.begin(), kSecondLevel.end(), second) != kSecondLevel.end())
        keep = 3;
    std::string out;
    for (std::size_t i = labels.size() - keep; i < labels.size(); ++i) {
        if (!out.empty())
            out += '.';
        out += labels[i];
    }
    return out;
}

bool is_absolute_url(std::string_view text)
{
    return Url::parse(text).has_value();
}

} // namespace infoseek::core
