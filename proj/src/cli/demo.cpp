#include "infoseek/cli/demo.hpp"

#include "infoseek/cli/backends.hpp"
#include "infoseek/cli/jsonl.hpp"
#include "infoseek/cli/pipeline.hpp"
#include "infoseek/core/json.hpp"
#include "infoseek/core/text.hpp"
#include "infoseek/rollout/completion.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <map>
#include <mutex>
#include <set>

namespace infoseek::cli {

namespace {

using nlohmann::json;

std::string site(std::string_view path)
{
    return fmt::format("https://lakeside.example{}", path);
}

std::string after_last(std::string_view text, std::string_view marker)
{
    const auto at = text.rfind(marker);
    return at == std::string_view::npos ? std::string{} : std::string(text.substr(at + marker.size()));
}

std::string between(std::string_view text, std::string_view open, std::string_view close)
{
    const auto start = text.find(open);
    if (start == std::string_view::npos)
        return {};
    const auto from = start + open.size();
    const auto end = text.find(close, from);
    return std::string(text.substr(from, end == std::string_view::npos ? std::string_view::npos : end - from));
}

std::string line_value(std::string_view text, std::string_view key)
{
    return std::string(core::trim(between(text, key, "\n")));
}

clients::ChatResponse reply(std::string content)
{
    return clients::ChatResponse{std::move(content), std::nullopt, "stop"};
}

struct CannedQa {
    const char* question;
    const char* answer;
};

const std::map<std::string, std::vector<CannedQa>, std::less<>>& canned_questions()
{
    static const std::map<std::string, std::vector<CannedQa>, std::less<>> table{
        {"COUNT",
         {{"How many branch libraries does the Lakeside Public Library operate?", "3"},
          {"How many loans did the North Pier branch of the Lakeside Public Library record in 2023?", "4120"}}},
        {"MULTI_HOP", {{"Who founded the library whose Old Mill branch keeps a map archive?", "Mara Quill"}}},
        {"INTERSECTION", {{"Which Lakeside branch opened in 1964 and also houses the map archive?", "Old Mill"}}},
    };
    return table;
}

struct E2HRule {
    const char* entity;
    const char* query;
    const char* rewrite;
};

const std::vector<E2HRule>& e2h_rules()
{
    static const std::vector<E2HRule> rules{
        {"Lakeside Public Library", "lakeside library history", "library founded in 1911 by Mara Quill"},
        {"Mara Quill", "lakeside library founder", "a schoolteacher who became its first librarian"},
    };
    return rules;
}

clients::ChatResponse synthesis_reply(const clients::ChatRequest& request)
{
    const auto& prompt = request.messages.back().content;
    if (prompt.starts_with("You write challenging fact-seeking questions")) {
        const auto type = line_value(prompt, "Question type: ");
        const auto index = std::stoi(between(prompt, "This is question ", " of")) - 1;
        const auto it = canned_questions().find(type);
        if (it == canned_questions().end())
            return reply("{}");
        const auto& qa = it->second[static_cast<std::size_t>(index) % it->second.size()];
        return reply(json{{"question", qa.question}, {"answer", qa.answer}}.dump());
    }
    const auto question = line_value(prompt, "Question: ");
    if (prompt.starts_with("Pick one named entity")) {
        for (const auto& rule : e2h_rules()) {
            if (core::contains(question, rule.entity))
                return reply(json{{"entity", rule.entity}}.dump());
        }
        return reply(R"({"entity": ""})");
    }
    const auto entity = between(prompt, "the entity \"", "\"");
    for (const auto& rule : e2h_rules()) {
        if (entity != rule.entity)
            continue;
        if (prompt.starts_with("Write one web search query"))
            return reply(json{{"query", rule.query}}.dump());
        if (prompt.starts_with("Rewrite the entity"))
            return reply(json{{"rewrite", rule.rewrite}}.dump());
    }
    throw clients::BackendError("demo synthesis model got an unexpected prompt");
}

std::set<std::string> content_words(std::string_view text)
{
    std::set<std::string> words;
    const auto lowered = core::to_lower(text);
    for (auto word : core::split_whitespace(lowered)) {
        std::string clean;
        for (const char c : word) {
            if (std::isalnum(static_cast<unsigned char>(c)))
                clean += c;
        }
        if (clean.size() > 3)
            words.insert(clean);
    }
    return words;
}

clients::ChatResponse summarizer_reply(const clients::ChatRequest& request)
{
    const auto& prompt = request.messages.back().content;
    const auto goal = content_words(line_value(prompt, "Goal: "));
    const auto content = between(prompt, "Page content:\n", "\n\nReply with a single JSON object");

    std::vector<std::string> sentences;
    std::string current;
    for (std::size_t i = 0; i < content.size(); ++i) {
        current += content[i];
        if (content[i] == '.' && (i + 1 == content.size() || content[i + 1] == ' ')) {
            sentences.emplace_back(core::trim(current));
            current.clear();
        }
    }
    if (!core::trim(current).empty())
        sentences.emplace_back(core::trim(current));

    std::string best;
    std::size_t best_score = 0;
    for (const auto& sentence : sentences) {
        std::size_t score = 0;
        for (const auto& word : content_words(sentence))
            score += goal.contains(word) ? 1 : 0;
        if (score > best_score) {
            best_score = score;
            best = sentence;
        }
    }
    if (best.empty())
        return reply(json{{"evidence", ""}, {"summary", "The page says nothing about the goal."}}.dump());
    return reply(json{{"evidence", best}, {"summary", fmt::format("The page states: {}", best)}}.dump());
}

struct PlanStep {
    std::string thought;
    core::ActionCall action;
};

using Plan = std::vector<PlanStep>;

Plan plan_for(const std::string& question, int attempt)
{
    using core::ActionCall;
    const auto branches = ActionCall::visit("Find how many branch libraries Lakeside has", site("/branches"));
    if (core::contains(question, "branch libraries") && core::contains(question, "schoolteacher")) {
        return {
            {"The question describes the library through its founder, so I identify the founder first.",
             ActionCall::search("lakeside library founder")},
            {"The profile page should confirm which library she founded.",
             ActionCall::visit("Identify the library founded by the schoolteacher", site("/people/mara-quill"))},
            {"She founded the Lakeside Public Library. Next I look up its branches.",
             ActionCall::search("lakeside branch libraries")},
            {"The branches page lists them, so I read it.", branches},
            {"The branches page names North Pier, Old Mill and Cedar Hill, which makes three.", ActionCall::answer("3")},
        };
    }
    if (core::contains(question, "branch libraries")) {
        return {
            {"I need the number of branch libraries, so I search for the branch list.",
             ActionCall::search("lakeside branch libraries")},
            {"The first result is the branches page; I open it to count them.", branches},
            {"The page lists North Pier, Old Mill and Cedar Hill, so there are three.", ActionCall::answer("3")},
        };
    }
    if (core::contains(question, "Who founded")) {
        if (attempt == 1)
            return {{"The founder is probably Mara Quill.", ActionCall::answer("Mara Quill")}};
        return {
            {"First I find the branch that keeps a map archive.", ActionCall::search("old mill branch map archive")},
            {"The Old Mill page should say which library it belongs to.",
             ActionCall::visit("Find which library the Old Mill branch belongs to", site("/branches/old-mill"))},
            {"It belongs to the Lakeside Public Library; the history page names the founder.",
             ActionCall::visit("Find who founded the Lakeside Public Library", site("/history"))},
            {"The history page says the library was founded by Mara Quill.", ActionCall::answer("Mara Quill")},
        };
    }
    if (core::contains(question, "opened in 1964")) {
        if (attempt == 1) {
            return {
                {"I search for the list of branches.", ActionCall::search("lakeside branch libraries")},
                {"North Pier is listed first, so I will go with it.", ActionCall::answer("North Pier")},
            };
        }
        return {
            {"I search for the branch with the map archive.", ActionCall::search("old mill branch map archive")},
            {"The Old Mill page should give its opening year.",
             ActionCall::visit("Check when the Old Mill branch opened and whether it houses the map archive",
                               site("/branches/old-mill"))},
            {"The Old Mill branch opened in 1964 and houses the map archive.", ActionCall::answer("Old Mill")},
        };
    }
    const auto query = core::contains(question, "loans") ? std::string("north pier branch loans 2023")
                                                         : core::to_lower(question);
    return {
        {"I search for the figure directly.", ActionCall::search(query)},
        {"The search returned nothing useful, so I cannot confirm a number.", ActionCall::answer("unknown")},
    };
}

class DemoAgent : public clients::ChatBackend {
public:
    clients::ChatResponse complete(const clients::ChatRequest& request) override
    {
        if (request.messages.empty())
            throw clients::BackendError("empty request");
        const auto question = after_last(request.messages.front().content, "\nQuestion: ");
        std::size_t round = 0;
        for (const auto& message : request.messages)
            round += message.role == "assistant" ? 1 : 0;

        int attempt = 0;
        {
            std::lock_guard lock(mutex_);
            auto& counter = attempts_[question];
            if (round == 0)
                ++counter;
            attempt = counter;
        }
        const auto plan = plan_for(question, attempt);
        const auto& step = plan[std::min(round, plan.size() - 1)];
        return reply(fmt::format("Thought: {}\n{}", step.thought,
                                 rollout::render_action(step.action, rollout::CompletionFormat::prompt)));
    }

private:
    std::mutex mutex_;
    std::map<std::string, int> attempts_;
};

template <class T>
std::vector<json> to_records(const std::vector<T>& items)
{
    return std::vector<json>(items.begin(), items.end());
}

} // namespace

clients::MockWorld demo_world()
{
    clients::MockWorld world;
    const auto page = [&](std::string_view path, std::string title, std::string content,
                          std::vector<std::string_view> links) {
        clients::MockPage p;
        p.url = site(path);
        p.title = std::move(title);
        p.content = std::move(content);
        for (auto link : links)
            p.out_links.push_back(site(link));
        world.add_page(std::move(p));
    };
    page("/", "Lakeside Public Library",
         "Welcome to the Lakeside Public Library. Read about our history, our branches and upcoming events.",
         {"/history", "/branches", "/events"});
    page("/history", "History of the library",
         "The Lakeside Public Library was founded in 1911 by Mara Quill. Its first building stood on Birch Street. "
         "The library moved to its present home on Harbor Road in 1958.",
         {"/", "/people/mara-quill"});
    page("/people/mara-quill", "Mara Quill",
         "Mara Quill was a schoolteacher who founded the Lakeside Public Library. She became its first librarian and "
         "served until 1925.",
         {"/history"});
    page("/branches", "Branches",
         "Lakeside has 3 branch libraries: North Pier, Old Mill and Cedar Hill. Each branch offers lending, study "
         "rooms and free internet access.",
         {"/branches/old-mill", "/"});
    page("/branches/old-mill", "Old Mill branch",
         "The Old Mill branch opened in 1964 in a restored grain mill. It houses the library's map archive of the "
         "lake region.",
         {"/branches"});
    page("/events", "Events",
         "Upcoming events include a poetry evening at Cedar Hill and a map workshop at the Old Mill branch.", {"/"});

    world.index("lakeside library founder", {site("/history"), site("/people/mara-quill")});
    world.index("lakeside library history", {site("/history"), site("/")});
    world.index("lakeside branch libraries", {site("/branches"), site("/branches/old-mill")});
    world.index("old mill branch map archive", {site("/branches/old-mill"), site("/events")});
    world.validate();
    return world;
}

void save_world(const clients::MockWorld& world, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir / "pages");
    std::size_t n = 0;
    for (const auto& [url, page] : world.pages()) {
        json record{{"url", page.url}, {"title", page.title}, {"content", page.content}, {"out_links", page.out_links}};
        if (page.year)
            record["year"] = *page.year;
        std::ofstream(dir / "pages" / fmt::format("{:03}.json", n++)) << record.dump(2) << '\n';
    }
    json index = json::object();
    for (const auto& [query, urls] : world.search_index())
        index[query] = urls;
    std::ofstream(dir / "index.json") << index.dump(2) << '\n';
}

std::unique_ptr<clients::ChatBackend> demo_agent()
{
    return std::make_unique<DemoAgent>();
}

std::unique_ptr<clients::ChatBackend> demo_summarizer()
{
    return std::make_unique<clients::FunctionChat>(summarizer_reply);
}

std::unique_ptr<clients::ChatBackend> demo_synthesis()
{
    return std::make_unique<clients::FunctionChat>(synthesis_reply);
}

DemoSummary run_demo(const std::filesystem::path& out_dir, std::uint64_t seed, PipelineConfig config)
{
    config.backends.world.reset();
    config.eval.judge = "reference";
    config.rollout.format = rollout::CompletionFormat::prompt;
    config.rollout.accept = "funnel";
    config.rl.seed = seed;
    validate(config);

    Backends backends(config, demo_world());
    backends.set_chat(Role::agent, demo_agent());
    backends.set_chat(Role::summarizer, demo_summarizer());
    backends.set_chat(Role::synthesis, demo_synthesis());

    DemoSummary summary;
    const auto artifact = [&](const char* name) {
        summary.artifacts.push_back(out_dir / name);
        return summary.artifacts.back();
    };

    // Stage 1: synthesis. Count questions are complicated with E2H and
    // replace their seeds (the id is kept).
    auto crawl = synthesize_crawl(std::string(kDemoRoot), config, backends);
    std::vector<core::QAPair> seeds;
    for (const auto& qa : crawl.qas) {
        if (qa.question_type == core::QuestionType::count)
            seeds.push_back(qa);
    }
    const auto harder = synthesize_e2h(seeds, config.synthesis.e2h_iterations, config, backends);
    std::map<std::string, core::QAPair> replaced;
    for (const auto& qa : harder.qas)
        replaced.emplace(qa.id, qa);
    std::vector<core::QAPair> qas;
    for (const auto& qa : crawl.qas) {
        const auto it = replaced.find(qa.id);
        qas.push_back(it == replaced.end() ? qa : it->second);
    }
    std::vector<json> pages;
    for (const auto& p : crawl.crawl.pages)
        pages.push_back(json{{"url", p.url}, {"title", p.title}, {"depth", p.depth}, {"out_links", p.out_links}});
    write_jsonl(artifact("pages.jsonl"), schema::page, pages);
    write_qas(artifact("qa.jsonl"), qas);
    summary.pages = crawl.crawl.pages.size();
    summary.qas = qas.size();

    // Stage 2: rollout with rejection sampling, then the full funnel over
    // every attempt.
    const auto rollout = rollout_stage(qas, config, backends);
    std::vector<json> attempts;
    for (const auto& attempt : rollout.attempts)
        attempts.push_back(rollout::attempt_to_json(attempt));
    write_jsonl(artifact("attempts.jsonl"), schema::rollout_attempt, attempts);
    summary.attempts = rollout.attempts.size();

    const auto funnel = filter_stage(qas, rollout.attempts, config, backends);
    write_trajectories(artifact("trajectories.jsonl"), funnel.sft_set);
    write_qas(artifact("rl_qa.jsonl"), funnel.rl_qa_set);
    write_jsonl(artifact("audit.jsonl"), schema::filter_audit, to_records(funnel.audit));
    summary.rl_questions = funnel.rl_qa_set.size();

    // Stage 3: SFT records.
    const auto records = sft_stage(funnel.sft_set, config);
    write_jsonl(artifact("sft.jsonl"), schema::sft, to_records(records));
    summary.sft_records = records.size();
    for (const auto& record : records)
        summary.masked_spans += record.mask_spans.size();

    // Stage 4: RL on the toy environment built from the RL question set
    // (all questions when every one produced an SFT trajectory).
    const auto& rl_qas = funnel.rl_qa_set.empty() ? qas : funnel.rl_qa_set;
    const auto env = rl::ToyEnvironment::from_qas(rl_qas, config.rl.depth, config.rl.branching, seed);
    const auto rl = rl_stage(env, config);
    write_jsonl(artifact("rl_report.jsonl"), schema::rl_step, to_records(rl.report.steps));
    summary.initial_expected_reward = rl.report.initial_expected_reward;
    summary.final_expected_reward = rl.final_expected_reward;

    // Evaluation with a fresh agent.
    backends.set_chat(Role::agent, demo_agent());
    auto runs = collect_runs(qas, config.eval.attempts, config, backends);
    summary.eval = eval_stage(runs, config.eval.metrics, config, backends);
    write_jsonl(artifact("runs.jsonl"), schema::run_outcome, to_records(runs));
    write_json(artifact("eval.json"), summary.eval);

    spdlog::info("demo: {} QAs, {} attempts, {} SFT records, {} RL questions", summary.qas, summary.attempts,
                 summary.sft_records, summary.rl_questions);
    return summary;
}

} // namespace infoseek::cli
