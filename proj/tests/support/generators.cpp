#include "support/generators.hpp"

#include "infoseek/core/json.hpp"
#include "infoseek/core/tagged.hpp"

#include <array>
#include <string_view>

namespace infoseek::testing {

namespace {

int uniform(Rng& rng, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template <class Array>
auto pick(Rng& rng, const Array& items)
{
    return items[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(items.size()) - 1))];
}

constexpr std::array<std::string_view, 12> kWords = {
    "search", "the", "founder", "of", "X-Corp", "page", "1999", "evidence", "check", "visit", "answer", "Zürich"};

constexpr std::array<std::string_view, 12> kOddTokens = {
    "\"quoted\"", "{brace}", "<tool_call>", "<answer>", "</tool_response>", "back\\slash",
    "tab\there", "line\nbreak", "<b>bold</b>", "50%", "日本語", "a<b"};

constexpr std::array<std::string_view, 4> kUrls = {
    "https://example.org/", "https://example.org/a/b?x=1", "http://wiki.example.com/Page_(x)",
    "https://arxiv.example.net/abs/1234.5678"};

} // namespace

std::string random_text(Rng& rng, int min_words, int max_words)
{
    std::string out(pick(rng, std::array<std::string_view, 4>{"Okay", "First", "Then", "So"}));
    const int n = uniform(rng, min_words, max_words);
    for (int i = 0; i < n; ++i) {
        out += uniform(rng, 0, 5) == 0 ? "  " : " ";
        out += uniform(rng, 0, 3) == 0 ? pick(rng, kOddTokens) : pick(rng, kWords);
    }
    if (uniform(rng, 0, 4) == 0)
        out += "\n";
    return out;
}

core::Trajectory random_trajectory(Rng& rng, int max_tool_steps)
{
    core::Trajectory t;
    t.qa_id = "qa-" + std::to_string(uniform(rng, 0, 99999));
    t.cot_mode = uniform(rng, 0, 1) ? core::CotMode::long_cot : core::CotMode::short_cot;
    t.sampler_meta.attempt_index = uniform(rng, 1, 5);
    const int tool_steps = uniform(rng, 0, max_tool_steps);
    for (int i = 0; i < tool_steps; ++i) {
        core::Step step;
        step.thought = random_text(rng);
        if (uniform(rng, 0, 1) == 0) {
            std::optional<int> year;
            if (uniform(rng, 0, 2) == 0)
                year = uniform(rng, 1990, 2025);
            step.action = core::ActionCall::search(random_text(rng, 1, 4), year);
            if (uniform(rng, 0, 6) == 0) {
                step.observation = core::tool_error_observation(random_text(rng, 1, 3));
            }
            else {
                core::SearchObservation obs;
                const int n = uniform(rng, 0, 10);
                for (int r = 0; r < n; ++r)
                    obs.results.push_back({random_text(rng, 1, 3), random_text(rng, 0, 8), std::string(pick(rng, kUrls))});
                step.observation = obs;
            }
        }
        else {
            step.action = core::ActionCall::visit(random_text(rng, 1, 5), std::string(pick(rng, kUrls)));
            step.observation = core::VisitObservation{random_text(rng, 0, 10), random_text(rng, 0, 6)};
        }
        t.steps.push_back(std::move(step));
    }
    t.steps.push_back(core::Step{random_text(rng), core::ActionCall::answer(random_text(rng, 0, 3)), std::nullopt});
    return t;
}

std::string mutate_serialized(const core::Trajectory& trajectory, Rng& rng, Mutation* applied)
{
    namespace tags = core::tags;
    const auto tagged = core::serialize_tagged_segments(trajectory);
    std::string text = tagged.text;

    struct Site {
        std::size_t pos;
        std::size_t len;
    };
    std::vector<Site> deletable;
    std::vector<core::Segment> payloads;
    std::size_t last_think_close = std::string::npos;
    for (const auto& seg : tagged.segments) {
        const auto block = std::string_view(text).substr(seg.begin, seg.end - seg.begin);
        const auto open_at = seg.begin + block.find('<');
        switch (seg.role) {
        case core::SegmentRole::thought:
            deletable.push_back({open_at, tags::think_open.size()});
            last_think_close = seg.end - tags::think_close.size();
            break;
        case core::SegmentRole::answer:
            deletable.push_back({seg.begin, tags::answer_open.size()});
            deletable.push_back({seg.end - tags::answer_close.size(), tags::answer_close.size()});
            break;
        case core::SegmentRole::action:
            deletable.push_back({seg.begin, tags::call_open.size()});
            deletable.push_back({seg.end - tags::call_close.size(), tags::call_close.size()});
            payloads.push_back(seg);
            break;
        case core::SegmentRole::observation:
            deletable.push_back({seg.begin, tags::response_open.size()});
            deletable.push_back({seg.end - tags::response_close.size(), tags::response_close.size()});
            payloads.push_back(seg);
            break;
        }
    }
    // Removing an inner </think> can merge two rounds into one valid
    // thought, so only the final one is a guaranteed break.
    deletable.push_back({last_think_close, tags::think_close.size()});

    auto kind = static_cast<Mutation>(uniform(rng, 0, 2));
    if (payloads.empty())
        kind = Mutation::delete_tag;

    if (kind == Mutation::delete_tag) {
        const auto site = deletable[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(deletable.size()) - 1))];
        text.erase(site.pos, site.len);
    }
    else {
        const auto seg = payloads[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(payloads.size()) - 1))];
        const auto open_len = seg.role == core::SegmentRole::action ? tags::call_open.size() : tags::response_open.size();
        const auto close_len = seg.role == core::SegmentRole::action ? tags::call_close.size() : tags::response_close.size();
        const auto body_begin = seg.begin + open_len;
        const auto body_len = seg.end - close_len - body_begin;
        if (kind == Mutation::unknown_tool && seg.role == core::SegmentRole::action) {
            auto payload = core::json::parse(text.substr(body_begin, body_len));
            payload["name"] = "calculate";
            text.replace(body_begin, body_len, core::dump_tag_safe(payload));
        }
        else {
            kind = Mutation::truncate_json;
            // Any strict prefix of a compact JSON object is invalid JSON.
            const auto keep = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(body_len) - 1));
            text.erase(body_begin + keep, body_len - keep);
        }
    }
    if (applied)
        *applied = kind;
    return text;
}

} // namespace infoseek::testing
