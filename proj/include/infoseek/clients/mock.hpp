#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/fetch.hpp"
#include "infoseek/clients/search.hpp"

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace infoseek::clients {

struct MockPage {
    std::string url;
    std::string title;
    std::string content;
    std::vector<std::string> out_links;
    std::optional<int> year;
};

// Deterministic offline web: pages, a query index, and canned chat scripts.
//
// On-disk layout (see docs/mockworld.md):
//   <dir>/pages/*.json   one MockPage object per file
//   <dir>/index.json     {"<query>": ["<url>", ...], ...}
//   <dir>/scripts.json   {"<scenario>": [{"content": ..., "reasoning_content": ...}, ...]}  (optional)
class MockWorld {
public:
    static MockWorld load(const std::filesystem::path& dir);

    // URLs are normalized before storage; throws SchemaError on a bad URL.
    void add_page(MockPage page);
    // Queries are normalized (lowercase, collapsed whitespace).
    void index(std::string_view query, std::vector<std::string> urls);
    void add_script(std::string scenario, std::vector<ChatResponse> responses);

    // Throws SchemaError if an indexed URL has no page.
    void validate() const;

    const MockPage* page(std::string_view url) const;
    const std::vector<std::string>* lookup(std::string_view query) const;
    const std::vector<ChatResponse>& script(std::string_view scenario) const;
    bool has_script(std::string_view scenario) const;

    const std::map<std::string, MockPage, std::less<>>& pages() const noexcept { return pages_; }
    const std::map<std::string, std::vector<std::string>, std::less<>>& search_index() const noexcept
    {
        return index_;
    }

private:
    std::map<std::string, MockPage, std::less<>> pages_;
    std::map<std::string, std::vector<std::string>, std::less<>> index_;
    std::map<std::string, std::vector<ChatResponse>, std::less<>> scripts_;
};

// Replays canned responses in order; exhaustion raises BackendError.
class ScriptedChat : public ChatBackend {
public:
    explicit ScriptedChat(std::vector<ChatResponse> script) : script_(std::move(script)) {}
    static std::unique_ptr<ScriptedChat> from_world(const MockWorld& world, std::string_view scenario);
    // Content-only shorthand.
    static std::unique_ptr<ScriptedChat> of(std::vector<std::string> contents);

    ChatResponse complete(const ChatRequest& request) override;

    std::size_t consumed() const;
    std::vector<ChatRequest> requests() const;

private:
    mutable std::mutex mutex_;
    std::vector<ChatResponse> script_;
    std::size_t next_ = 0;
    std::vector<ChatRequest> requests_;
};

// Computes each response from the request.
class FunctionChat : public ChatBackend {
public:
    using Handler = std::function<ChatResponse(const ChatRequest&)>;
    explicit FunctionChat(Handler handler) : handler_(std::move(handler)) {}

    ChatResponse complete(const ChatRequest& request) override { return handler_(request); }

private:
    Handler handler_;
};

// Failure injection: the first `failures` calls throw TransientError.
class FlakyChat : public ChatBackend {
public:
    FlakyChat(ChatBackend& inner, int failures) : inner_(inner), remaining_(failures) {}

    ChatResponse complete(const ChatRequest& request) override;
    int calls() const noexcept { return calls_; }

private:
    ChatBackend& inner_;
    std::atomic<int> remaining_;
    std::atomic<int> calls_{0};
};

// Index lookup, optional year filter on page metadata, top-10 cap, results
// in index order. Unknown queries give an empty observation.
class MockSearch : public SearchBackend {
public:
    explicit MockSearch(const MockWorld& world) : world_(world) {}

    core::SearchObservation search(std::string_view query, std::optional<int> filter_year) override;

private:
    const MockWorld& world_;
};

// Serves world pages; anything else is a 404.
class MockFetch : public FetchBackend {
public:
    explicit MockFetch(const MockWorld& world) : world_(world) {}

    FetchedPage fetch(const core::Url& url) override;
    std::vector<std::string> fetched() const;

private:
    const MockWorld& world_;
    mutable std::mutex mutex_;
    std::vector<std::string> fetched_;
};

std::string snippet_of(std::string_view content, std::size_t max_bytes = 200);

} // namespace infoseek::clients
