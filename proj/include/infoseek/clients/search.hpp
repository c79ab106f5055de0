#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/core/types.hpp"

#include <optional>
#include <string_view>

namespace infoseek::clients {

class SearchBackend {
public:
    virtual ~SearchBackend() = default;

    // One attempt. Year filtering semantics belong to the backend.
    virtual core::SearchObservation search(std::string_view query, std::optional<int> filter_year) = 0;
};

// Top-10 search with retries. Throws std::invalid_argument on an empty
// query and TransportError once retries are exhausted.
core::SearchObservation search(SearchBackend& backend, std::string_view query,
                               std::optional<int> filter_year = std::nullopt, const RetryPolicy& policy = {});

} // namespace infoseek::clients
