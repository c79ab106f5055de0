#include "infoseek/synthesis/e2h.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/prompts.hpp"
#include "infoseek/core/text.hpp"

#include <fmt/format.h>

#include <stdexcept>

namespace infoseek::synthesis {

std::string_view to_string(E2HErrorKind kind)
{
    switch (kind) {
    case E2HErrorKind::no_entity: return "no entity";
    case E2HErrorKind::no_context: return "no context";
    case E2HErrorKind::bad_rewrite: return "bad rewrite";
    case E2HErrorKind::backend: return "backend";
    }
    return "backend";
}

namespace {

class StepRunner {
public:
    StepRunner(const E2HState& state, clients::ChatBackend& llm, const E2HOptions& options)
        : state_(state), llm_(llm), options_(options)
    {
    }

    [[noreturn]] void fail(E2HErrorKind kind, const std::string& detail) const
    {
        throw E2HError(kind, fmt::format("e2h step {}: {}: {}", state_.iteration + 1, to_string(kind), detail), state_);
    }

    // Asks for a JSON reply and returns the string field `key` (trimmed).
    std::string ask(const core::PromptTemplate& prompt, std::vector<std::pair<std::string, std::string>> values,
                    std::string_view key) const
    {
        auto request = clients::user_request(core::render_template(prompt.text, values), options_.sampling);
        request.model = options_.model;
        clients::ChatResponse reply;
        try {
            reply = clients::chat(llm_, request, options_.retry);
        }
        catch (const clients::TransportError& e) {
            fail(E2HErrorKind::backend, e.what());
        }
        const auto parsed = core::extract_json_object(reply.content);
        if (!parsed || !parsed->contains(key) || !(*parsed)[std::string(key)].is_string())
            return {};
        return std::string(core::trim((*parsed)[std::string(key)].get<std::string>()));
    }

private:
    const E2HState& state_;
    clients::ChatBackend& llm_;
    const E2HOptions& options_;
};

} // namespace

E2HState e2h_step(const E2HState& state, clients::ChatBackend& llm, clients::SearchBackend& search,
                  const E2HOptions& options)
{
    const StepRunner runner(state, llm, options);

    const auto entity = runner.ask(core::prompts::e2h_entity, {{"question", state.question}}, "entity");
    if (entity.empty())
        runner.fail(E2HErrorKind::no_entity, "entity selection returned nothing");
    if (!core::contains(state.question, entity))
        runner.fail(E2HErrorKind::no_entity, fmt::format("'{}' does not occur in the question", entity));
    if (core::contains(core::to_lower(entity), core::to_lower(state.answer)))
        runner.fail(E2HErrorKind::no_entity, "selected entity contains the answer");

    auto query =
        runner.ask(core::prompts::e2h_query, {{"question", state.question}, {"entity", entity}}, "query");
    if (query.empty())
        query = entity;

    core::SearchObservation found;
    try {
        found = clients::search(search, query, std::nullopt, options.retry);
    }
    catch (const clients::TransportError& e) {
        runner.fail(E2HErrorKind::backend, e.what());
    }
    if (found.results.empty())
        runner.fail(E2HErrorKind::no_context, fmt::format("search for '{}' returned no results", query));

    std::string context;
    std::vector<std::string> urls;
    for (std::size_t i = 0; i < found.results.size() && i < options.context_results; ++i) {
        const auto& hit = found.results[i];
        context += fmt::format("- {}: {}\n", hit.title, hit.snippet);
        urls.push_back(hit.url);
    }
    context = std::string(core::trim(context));

    const auto rewrite = runner.ask(core::prompts::e2h_rewrite,
                                    {{"question", state.question}, {"entity", entity}, {"context", context}}, "rewrite");
    if (rewrite.empty())
        runner.fail(E2HErrorKind::bad_rewrite, "rewrite returned nothing");
    if (core::contains(rewrite, entity))
        runner.fail(E2HErrorKind::bad_rewrite, fmt::format("rewrite still contains '{}'", entity));
    if (core::contains(core::to_lower(rewrite), core::to_lower(state.answer)))
        runner.fail(E2HErrorKind::bad_rewrite, "rewrite reveals the answer");

    auto question = core::replace_all(state.question, entity, rewrite);
    if (core::contains(question, entity))
        runner.fail(E2HErrorKind::bad_rewrite, fmt::format("substitution left '{}' in the question", entity));

    E2HState next = state;
    next.question = std::move(question);
    next.iteration += 1;
    next.entity_history.push_back({entity, query, context, rewrite});
    for (auto& url : urls) {
        if (std::find(next.source_urls.begin(), next.source_urls.end(), url) == next.source_urls.end())
            next.source_urls.push_back(std::move(url));
    }
    return next;
}

E2HResult e2h_synthesize(const core::QAPair& seed, int n, clients::ChatBackend& llm, clients::SearchBackend& search,
                         const E2HOptions& options)
{
    if (n < 0)
        throw std::invalid_argument("e2h iteration count must be >= 0");
    if (seed.answer.empty())
        throw std::invalid_argument(fmt::format("seed {} has no answer", seed.id));

    E2HState state{seed.question, seed.answer, 0, {}, {}};
    for (int i = 0; i < n; ++i)
        state = e2h_step(state, llm, search, options);

    E2HResult result{seed, state};
    result.qa.question = state.question;
    result.qa.source = core::QaSource::e2h;
    result.qa.e2h_iterations = state.iteration;
    for (const auto& url : state.source_urls) {
        if (std::find(result.qa.provenance_urls.begin(), result.qa.provenance_urls.end(), url) ==
            result.qa.provenance_urls.end())
            result.qa.provenance_urls.push_back(url);
    }
    return result;
}

} // namespace infoseek::synthesis
