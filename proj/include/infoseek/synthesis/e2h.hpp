#pragma once

#include "infoseek/clients/chat.hpp"
#include "infoseek/clients/search.hpp"
#include "infoseek/core/types.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace infoseek::synthesis {

struct E2HHop {
    std::string entity;
    std::string search_query;
    std::string context;
    std::string rewrite;

    bool operator==(const E2HHop&) const = default;
};

struct E2HState {
    std::string question;
    std::string answer;
    int iteration = 0;
    std::vector<E2HHop> entity_history;
    std::vector<std::string> source_urls;

    bool operator==(const E2HState&) const = default;
};

enum class E2HErrorKind { no_entity, no_context, bad_rewrite, backend };

std::string_view to_string(E2HErrorKind kind);

// A failed step; `state()` is the last good state.
class E2HError : public std::runtime_error {
public:
    E2HError(E2HErrorKind kind, const std::string& message, E2HState state)
        : std::runtime_error(message), kind_(kind), state_(std::move(state))
    {
    }

    E2HErrorKind kind() const noexcept { return kind_; }
    const E2HState& state() const noexcept { return state_; }

private:
    E2HErrorKind kind_;
    E2HState state_;
};

struct E2HOptions {
    // Search results folded into the context C_n.
    std::size_t context_results = 5;
    std::string model;
    core::SamplingParams sampling{0.7, 0.95, 1.0, 1};
    clients::RetryPolicy retry;
};

// One complication round: select an entity, search for it, rewrite it as an
// indirect description and substitute every occurrence in the question.
E2HState e2h_step(const E2HState& state, clients::ChatBackend& llm, clients::SearchBackend& search,
                  const E2HOptions& options = {});

struct E2HResult {
    core::QAPair qa;
    E2HState state;
};

// Applies n rounds to `seed`; throws std::invalid_argument for n < 0 or a
// seed without an answer, E2HError when a round fails.
E2HResult e2h_synthesize(const core::QAPair& seed, int n, clients::ChatBackend& llm, clients::SearchBackend& search,
                         const E2HOptions& options = {});

} // namespace infoseek::synthesis
