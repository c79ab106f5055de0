#include "infoseek/clients/search.hpp"

#include "infoseek/core/text.hpp"

#include <stdexcept>

namespace infoseek::clients {

core::SearchObservation search(SearchBackend& backend, std::string_view query, std::optional<int> filter_year,
                               const RetryPolicy& policy)
{
    if (core::trim(query).empty())
        throw std::invalid_argument("search query is empty");
    auto observation = with_retries([&] { return backend.search(query, filter_year); }, policy);
    if (observation.results.size() > core::kMaxSearchResults)
        observation.results.resize(core::kMaxSearchResults);
    return observation;
}

} // namespace infoseek::clients
