#include "infoseek/clients/mock.hpp"

#include "infoseek/core/text.hpp"
#include "infoseek/core/types.hpp"
#include "infoseek/core/url.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace infoseek::clients {

namespace {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw core::SchemaError(fmt::format("cannot open {}", path.string()));
    try {
        return json::parse(in);
    }
    catch (const json::parse_error& e) {
        throw core::SchemaError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::string normalized_url(std::string_view text)
{
    const auto url = core::Url::parse(text);
    if (!url)
        throw core::SchemaError(fmt::format("'{}' is not an absolute URL", text));
    return url->str();
}

MockPage page_from_json(const json& in, const std::string& origin)
{
    if (!in.is_object())
        throw core::SchemaError(fmt::format("{}: page must be an object", origin));
    for (const auto& [key, value] : in.items()) {
        if (key != "url" && key != "title" && key != "content" && key != "out_links" && key != "year")
            throw core::SchemaError(fmt::format("{}: unexpected key '{}'", origin, key));
    }
    MockPage page;
    try {
        page.url = in.at("url").get<std::string>();
        page.title = in.value("title", std::string{});
        page.content = in.at("content").get<std::string>();
        page.out_links = in.value("out_links", std::vector<std::string>{});
        if (in.contains("year") && !in.at("year").is_null())
            page.year = in.at("year").get<int>();
    }
    catch (const json::exception& e) {
        throw core::SchemaError(fmt::format("{}: {}", origin, e.what()));
    }
    return page;
}

ChatResponse response_from_json(const json& in)
{
    if (in.is_string())
        return ChatResponse{in.get<std::string>(), std::nullopt, "stop"};
    ChatResponse response;
    response.content = in.value("content", std::string{});
    if (in.contains("reasoning_content") && !in.at("reasoning_content").is_null())
        response.reasoning_content = in.at("reasoning_content").get<std::string>();
    return response;
}

} // namespace

MockWorld MockWorld::load(const std::filesystem::path& dir)
{
    MockWorld world;
    const auto pages_dir = dir / "pages";
    if (!std::filesystem::is_directory(pages_dir))
        throw core::SchemaError(fmt::format("{} has no pages/ directory", dir.string()));
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(pages_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files)
        world.add_page(page_from_json(read_json_file(file), file.string()));

    const auto index_path = dir / "index.json";
    if (std::filesystem::exists(index_path)) {
        const auto index = read_json_file(index_path);
        if (!index.is_object())
            throw core::SchemaError("index.json must map queries to URL lists");
        for (const auto& [query, urls] : index.items())
            world.index(query, urls.get<std::vector<std::string>>());
    }

    const auto scripts_path = dir / "scripts.json";
    if (std::filesystem::exists(scripts_path)) {
        const auto scripts = read_json_file(scripts_path);
        if (!scripts.is_object())
            throw core::SchemaError("scripts.json must map scenario names to response lists");
        for (const auto& [scenario, responses] : scripts.items()) {
            std::vector<ChatResponse> list;
            for (const auto& item : responses)
                list.push_back(response_from_json(item));
            world.add_script(scenario, std::move(list));
        }
    }
    world.validate();
    return world;
}

void MockWorld::add_page(MockPage page)
{
    page.url = normalized_url(page.url);
    auto key = page.url;
    pages_.insert_or_assign(std::move(key), std::move(page));
}

void MockWorld::index(std::string_view query, std::vector<std::string> urls)
{
    for (auto& url : urls)
        url = normalized_url(url);
    index_.insert_or_assign(core::normalize_query(query), std::move(urls));
}

void MockWorld::add_script(std::string scenario, std::vector<ChatResponse> responses)
{
    scripts_.insert_or_assign(std::move(scenario), std::move(responses));
}

void MockWorld::validate() const
{
    for (const auto& [query, urls] : index_) {
        for (const auto& url : urls) {
            if (!pages_.contains(url))
                throw core::SchemaError(fmt::format("index entry '{}' points to unknown page {}", query, url));
        }
    }
}

const MockPage* MockWorld::page(std::string_view url) const
{
    const auto parsed = core::Url::parse(url);
    if (!parsed)
        return nullptr;
    const auto it = pages_.find(parsed->str());
    return it == pages_.end() ? nullptr : &it->second;
}

const std::vector<std::string>* MockWorld::lookup(std::string_view query) const
{
    const auto it = index_.find(core::normalize_query(query));
    return it == index_.end() ? nullptr : &it->second;
}

const std::vector<ChatResponse>& MockWorld::script(std::string_view scenario) const
{
    const auto it = scripts_.find(scenario);
    if (it == scripts_.end())
        throw core::SchemaError(fmt::format("no script for scenario '{}'", scenario));
    return it->second;
}

bool MockWorld::has_script(std::string_view scenario) const
{
    return scripts_.find(scenario) != scripts_.end();
}

std::unique_ptr<ScriptedChat> ScriptedChat::from_world(const MockWorld& world, std::string_view scenario)
{
    return std::make_unique<ScriptedChat>(world.script(scenario));
}

std::unique_ptr<ScriptedChat> ScriptedChat::of(std::vector<std::string> contents)
{
    std::vector<ChatResponse> script;
    for (auto& content : contents)
        script.push_back(ChatResponse{std::move(content), std::nullopt, "stop"});
    return std::make_unique<ScriptedChat>(std::move(script));
}

ChatResponse ScriptedChat::complete(const ChatRequest& request)
{
    std::lock_guard lock(mutex_);
    requests_.push_back(request);
    if (next_ >= script_.size())
        throw BackendError(fmt::format("scripted chat exhausted after {} responses", script_.size()));
    return script_[next_++];
}

std::size_t ScriptedChat::consumed() const
{
    std::lock_guard lock(mutex_);
    return next_;
}

std::vector<ChatRequest> ScriptedChat::requests() const
{
    std::lock_guard lock(mutex_);
    return requests_;
}

ChatResponse FlakyChat::complete(const ChatRequest& request)
{
    ++calls_;
    if (remaining_.fetch_sub(1) > 0)
        throw TransientError("injected failure");
    return inner_.complete(request);
}

core::SearchObservation MockSearch::search(std::string_view query, std::optional<int> filter_year)
{
    core::SearchObservation observation;
    const auto* urls = world_.lookup(query);
    if (!urls)
        return observation;
    for (const auto& url : *urls) {
        if (observation.results.size() == core::kMaxSearchResults)
            break;
        const auto* page = world_.page(url);
        if (!page)
            continue;
        if (filter_year && page->year != filter_year)
            continue;
        observation.results.push_back({page->title, snippet_of(page->content), page->url});
    }
    return observation;
}

FetchedPage MockFetch::fetch(const core::Url& url)
{
    {
        std::lock_guard lock(mutex_);
        fetched_.push_back(url.str());
    }
    const auto* page = world_.page(url.str());
    if (!page)
        return FetchedPage{404, url.str(), {}, {}, {}, std::nullopt};
    return FetchedPage{200, page->url, page->title, page->content, page->out_links, page->year};
}

std::vector<std::string> MockFetch::fetched() const
{
    std::lock_guard lock(mutex_);
    return fetched_;
}

std::string snippet_of(std::string_view content, std::size_t max_bytes)
{
    const auto text = core::trim(content);
    if (text.size() <= max_bytes)
        return std::string(text);
    // Back off to a code point boundary.
    auto cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80)
        --cut;
    return std::string(core::trim(text.substr(0, cut)));
}

} // namespace infoseek::clients
