#include "infoseek/clients/mock.hpp"
#include "infoseek/core/json.hpp"
#include "infoseek/synthesis/crawl.hpp"
#include "infoseek/synthesis/e2h.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

namespace infoseek::synthesis {
namespace {

using clients::MockFetch;
using clients::MockPage;
using clients::MockSearch;
using clients::MockWorld;
using clients::ScriptedChat;

core::Url url(std::string_view text)
{
    return *core::Url::parse(text);
}

clients::RetryPolicy no_sleep()
{
    clients::RetryPolicy policy;
    policy.sleep = [](std::chrono::milliseconds) {};
    return policy;
}

MockWorld three_page_site()
{
    MockWorld world;
    world.add_page({"https://lab.example/", "Lab", "Root page", {"/b", "/a", "https://other.example/x"}, 2020});
    world.add_page({"https://lab.example/a", "A", "Page A body", {"/"}, 2020});
    world.add_page({"https://lab.example/b", "B", "Page B body", {"/c"}, 2021});
    world.add_page({"https://lab.example/c", "C", "Page C body", {}, 2021});
    return world;
}

TEST(CrawlSite, DepthOneFixture)
{
    const auto world = three_page_site();
    MockFetch fetch(world);
    const auto result = crawl_site(url("https://lab.example/"), 1, 10, fetch);
    ASSERT_EQ(result.pages.size(), 3u);
    EXPECT_EQ(result.pages[0].url, "https://lab.example/");
    EXPECT_EQ(result.pages[1].url, "https://lab.example/a");
    EXPECT_EQ(result.pages[2].url, "https://lab.example/b");
    EXPECT_EQ(result.pages[0].depth, 0);
    EXPECT_EQ(result.pages[1].depth, 1);
    EXPECT_EQ(result.pages[2].depth, 1);
    // Off-site link dropped, document order kept.
    EXPECT_EQ(result.pages[0].out_links,
              (std::vector<std::string>{"https://lab.example/b", "https://lab.example/a"}));
    EXPECT_TRUE(result.failures.empty());
}

TEST(CrawlSite, DepthZeroIsRootOnly)
{
    const auto world = three_page_site();
    MockFetch fetch(world);
    const auto result = crawl_site(url("https://lab.example/"), 0, 10, fetch);
    ASSERT_EQ(result.pages.size(), 1u);
    EXPECT_EQ(result.pages[0].depth, 0);
}

TEST(CrawlSite, CycleIsDeduplicated)
{
    MockWorld world;
    world.add_page({"https://c.example/", "root", "r", {"https://c.example/a"}, std::nullopt});
    world.add_page({"https://c.example/a", "A", "a", {"https://c.example/"}, std::nullopt});
    MockFetch fetch(world);
    const auto result = crawl_site(url("https://c.example/"), 5, 10, fetch);
    ASSERT_EQ(result.pages.size(), 2u);
    EXPECT_EQ(result.pages[1].url, "https://c.example/a");
}

TEST(CrawlSite, RootFailureIsCrawlError)
{
    MockWorld world;
    MockFetch fetch(world);
    EXPECT_THROW(crawl_site(url("https://missing.example/"), 1, 5, fetch), CrawlError);
    EXPECT_THROW(crawl_site(url("https://missing.example/"), -1, 5, fetch), std::invalid_argument);
    EXPECT_THROW(crawl_site(url("https://missing.example/"), 1, 0, fetch), std::invalid_argument);
}

TEST(CrawlSite, PageFailuresRecordedNotFatal)
{
    MockWorld world;
    world.add_page({"https://f.example/", "root", "r", {"/gone", "/ok"}, std::nullopt});
    world.add_page({"https://f.example/ok", "ok", "fine", {}, std::nullopt});
    MockFetch fetch(world);
    const auto result = crawl_site(url("https://f.example/"), 1, 10, fetch);
    ASSERT_EQ(result.pages.size(), 2u);
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0], (CrawlFailure{"https://f.example/gone", "HTTP 404"}));
}

TEST(CrawlSite, AllowlistAndRobots)
{
    MockWorld world;
    world.add_page({"https://r.example/", "root", "r", {"/private/x", "/pub", "https://docs.partner.example/d"},
                    std::nullopt});
    world.add_page({"https://r.example/robots.txt", "", "User-agent: *\nDisallow: /private\n", {}, std::nullopt});
    world.add_page({"https://r.example/private/x", "p", "secret", {}, std::nullopt});
    world.add_page({"https://r.example/pub", "pub", "public", {}, std::nullopt});
    world.add_page({"https://docs.partner.example/d", "d", "docs", {}, std::nullopt});
    MockFetch fetch(world);

    CrawlOptions options;
    options.allowed_domains = {"partner.example"};
    const auto result = crawl_site(url("https://r.example/"), 1, 10, fetch, options);
    std::vector<std::string> urls;
    for (const auto& page : result.pages)
        urls.push_back(page.url);
    EXPECT_EQ(urls, (std::vector<std::string>{"https://r.example/", "https://docs.partner.example/d",
                                              "https://r.example/pub"}));
    ASSERT_EQ(result.failures.size(), 1u);
    EXPECT_EQ(result.failures[0].url, "https://r.example/private/x");

    options.respect_robots = false;
    options.allowed_domains.clear();
    EXPECT_EQ(crawl_site(url("https://r.example/"), 1, 10, fetch, options).pages.size(), 3u);
}

TEST(WithinSite, RegistrableDomainAndAllowlist)
{
    const auto root = url("https://www.uni.ac.uk/");
    EXPECT_TRUE(within_site(url("https://cs.uni.ac.uk/x"), root, {}));
    EXPECT_FALSE(within_site(url("https://other.ac.uk/x"), root, {}));
    EXPECT_TRUE(within_site(url("https://a.b.partner.org/"), root, {"partner.org"}));
    EXPECT_FALSE(within_site(url("https://notpartner.org/"), root, {"partner.org"}));
}

MockWorld random_site(std::mt19937_64& rng, int pages)
{
    MockWorld world;
    std::uniform_int_distribution<int> pick(0, pages - 1);
    std::uniform_int_distribution<int> degree(0, 4);
    for (int i = 0; i < pages; ++i) {
        std::vector<std::string> links;
        for (int d = degree(rng); d > 0; --d)
            links.push_back("/p" + std::to_string(pick(rng)));
        world.add_page({"https://g.example/p" + std::to_string(i), "P", "body", links, std::nullopt});
    }
    return world;
}

TEST(CrawlSite, BudgetDepthAndUniquenessProperty)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const auto world = random_site(rng, 25);
        const int depth = static_cast<int>(rng() % 5);
        const int budget = 1 + static_cast<int>(rng() % 12);
        MockFetch fetch(world);
        const auto result = crawl_site(url("https://g.example/p0"), depth, budget, fetch);
        EXPECT_LE(result.pages.size(), static_cast<std::size_t>(budget));
        std::set<std::string> seen;
        int last_depth = 0;
        for (const auto& page : result.pages) {
            EXPECT_LE(page.depth, depth);
            EXPECT_GE(page.depth, last_depth);
            last_depth = page.depth;
            EXPECT_TRUE(seen.insert(page.url).second) << page.url;
        }
        EXPECT_EQ(result.pages.front().depth, 0);
    }
}

TEST(CrawlSite, DeterministicAcrossRunsAndParallelism)
{
    std::mt19937_64 rng(11);
    const auto world = random_site(rng, 40);
    auto dump = [&](int workers) {
        MockFetch fetch(world);
        CrawlOptions options;
        options.parallelism = workers;
        std::string out;
        for (const auto& page : crawl_site(url("https://g.example/p0"), 3, 30, fetch, options).pages) {
            out += page.url + "|" + std::to_string(page.depth) + "|";
            for (const auto& link : page.out_links)
                out += link + ",";
            out += "\n";
        }
        return out;
    };
    const auto first = dump(1);
    EXPECT_EQ(first, dump(1));
    EXPECT_EQ(first, dump(4));
}

std::vector<PageNode> fixture_pages()
{
    const auto world = three_page_site();
    MockFetch fetch(world);
    return crawl_site(url("https://lab.example/"), 1, 10, fetch).pages;
}

TEST(GenerateCrawlQa, MultiHopCoversSeveralPages)
{
    const auto pages = fixture_pages();
    auto llm = ScriptedChat::of({R"({"question": "Which page links to the page that mentions B?", "answer": "Lab"})",
                                 "Sure! ```json\n{\"question\": \"Q two?\", \"answer\": \"A\"}\n```"});
    const auto pairs = generate_crawl_qa(pages, core::QuestionType::multi_hop, 2, *llm);
    ASSERT_EQ(pairs.size(), 2u);
    std::set<std::string> crawled;
    for (const auto& page : pages)
        crawled.insert(page.url);
    for (const auto& qa : pairs) {
        EXPECT_EQ(qa.source, core::QaSource::crawl);
        EXPECT_EQ(qa.question_type, core::QuestionType::multi_hop);
        EXPECT_FALSE(qa.answer.empty());
        EXPECT_FALSE(validate(qa).has_value());
        std::set<std::string> distinct(qa.provenance_urls.begin(), qa.provenance_urls.end());
        EXPECT_GE(distinct.size(), 2u);
        for (const auto& u : qa.provenance_urls)
            EXPECT_TRUE(crawled.contains(u)) << u;
    }
    EXPECT_NE(pairs[0].id, pairs[1].id);
    const auto prompt = llm->requests()[0].messages[0].content;
    EXPECT_NE(prompt.find("MULTI_HOP"), std::string::npos);
    EXPECT_NE(prompt.find("Page A body"), std::string::npos);
}

TEST(GenerateCrawlQa, DegenerateGenerationsDropped)
{
    const auto pages = fixture_pages();
    auto llm = ScriptedChat::of({R"({"question": "", "answer": "x"})", "no json at all",
                                 R"({"question": "Q?", "answer": "  "})", R"({"question": "Fine?", "answer": 3})"});
    const auto pairs = generate_crawl_qa(pages, core::QuestionType::count, 4, *llm);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].answer, "3");
}

TEST(GenerateCrawlQa, RootOnlyProvenance)
{
    const std::vector<PageNode> pages{{"https://lab.example/", "Lab", "Three projects.", {}, 0}};
    auto llm = ScriptedChat::of({R"({"question": "How many projects?", "answer": "3"})"});
    const auto pairs = generate_crawl_qa(pages, core::QuestionType::count, 1, *llm);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_EQ(pairs[0].provenance_urls, std::vector<std::string>{"https://lab.example/"});
}

TEST(GenerateCrawlQa, BackendErrorPropagates)
{
    const auto pages = fixture_pages();
    auto llm = ScriptedChat::of({});
    auto options = CrawlQaOptions{};
    options.retry = no_sleep();
    EXPECT_THROW(generate_crawl_qa(pages, core::QuestionType::other, 1, *llm, options), clients::TransportError);
    EXPECT_THROW(generate_crawl_qa({}, core::QuestionType::other, 1, *llm, options), std::invalid_argument);
}

MockWorld e2h_world()
{
    MockWorld world;
    world.add_page({"https://news.example/acq", "X-Corp acquires Y", "In 1999 X-Corp acquired Y.", {}, 1999});
    world.add_page({"https://news.example/alice", "Alice profile", "Alice founded X-Corp.", {}, 2005});
    world.add_page({"https://news.example/y", "Y history", "Y was founded in Springfield.", {}, 1980});
    world.index("X-Corp history", {"https://news.example/acq", "https://news.example/alice"});
    world.index("Y origin", {"https://news.example/y"});
    return world;
}

TEST(E2HStep, RewritesSelectedEntity)
{
    const auto world = e2h_world();
    MockSearch search(world);
    auto llm = ScriptedChat::of({R"({"entity": "X-Corp"})", R"({"query": "X-Corp history"})",
                                 R"({"rewrite": "the company that acquired Y in 1999"})"});
    const E2HState seed{"Who founded X-Corp?", "Alice", 0, {}, {}};
    const auto next = e2h_step(seed, *llm, search);
    EXPECT_EQ(next.iteration, 1);
    EXPECT_EQ(next.question, "Who founded the company that acquired Y in 1999?");
    EXPECT_EQ(next.answer, "Alice");
    ASSERT_EQ(next.entity_history.size(), 1u);
    EXPECT_EQ(next.entity_history[0].entity, "X-Corp");
    EXPECT_EQ(next.entity_history[0].search_query, "X-Corp history");
    // Retrieved context may mention the answer; the answer field is untouched.
    EXPECT_NE(next.entity_history[0].context.find("Alice"), std::string::npos);
    EXPECT_EQ(next.source_urls.size(), 2u);
}

TEST(E2HStep, ErrorsLeaveStateUnchanged)
{
    const auto world = e2h_world();
    MockSearch search(world);
    const E2HState seed{"Who founded X-Corp?", "Alice", 0, {}, {}};
    const auto expect_kind = [&](std::vector<std::string> script, E2HErrorKind kind) {
        auto llm = ScriptedChat::of(std::move(script));
        E2HOptions options;
        options.retry = no_sleep();
        try {
            e2h_step(seed, *llm, search, options);
            ADD_FAILURE() << "expected " << to_string(kind);
        }
        catch (const E2HError& e) {
            EXPECT_EQ(e.kind(), kind) << e.what();
            EXPECT_EQ(e.state(), seed);
        }
    };
    expect_kind({R"({"entity": ""})"}, E2HErrorKind::no_entity);
    expect_kind({R"({"entity": "Zed"})"}, E2HErrorKind::no_entity);
    expect_kind({R"({"entity": "X-Corp"})", R"({"query": "unindexed"})"}, E2HErrorKind::no_context);
    expect_kind({R"({"entity": "X-Corp"})", R"({"query": "X-Corp history"})", R"({"rewrite": "X-Corp's parent"})"},
                E2HErrorKind::bad_rewrite);
    expect_kind({R"({"entity": "X-Corp"})", R"({"query": "X-Corp history"})", R"({"rewrite": "Alice's company"})"},
                E2HErrorKind::bad_rewrite);
    expect_kind({R"({"entity": "X-Corp"})"}, E2HErrorKind::backend);
}

class OutageSearch : public clients::SearchBackend {
public:
    core::SearchObservation search(std::string_view, std::optional<int>) override
    {
        throw clients::TransientError("search down");
    }
};

TEST(E2HStep, SearchOutageIsErrorWithStateUnchanged)
{
    OutageSearch search;
    auto llm = ScriptedChat::of({R"({"entity": "X-Corp"})", R"({"query": "q"})"});
    E2HOptions options;
    options.retry = no_sleep();
    const E2HState seed{"Who founded X-Corp?", "Alice", 0, {}, {}};
    try {
        e2h_step(seed, *llm, search, options);
        FAIL();
    }
    catch (const E2HError& e) {
        EXPECT_EQ(e.kind(), E2HErrorKind::backend);
        EXPECT_EQ(e.state(), seed);
    }
}

core::QAPair seed_pair()
{
    core::QAPair qa;
    qa.id = "seed-1";
    qa.question = "Who founded X-Corp?";
    qa.answer = "Alice";
    qa.source = core::QaSource::open;
    return qa;
}

std::vector<std::string> two_round_script()
{
    return {R"({"entity": "X-Corp"})", R"({"query": "X-Corp history"})",
            R"({"rewrite": "the company that acquired Y in 1999"})", R"({"entity": "Y"})", R"({"query": "Y origin"})",
            R"({"rewrite": "a firm founded in Springfield"})"};
}

TEST(E2HSynthesize, ZeroIterationsRelabelsSeed)
{
    const auto world = e2h_world();
    MockSearch search(world);
    auto llm = ScriptedChat::of({});
    const auto result = e2h_synthesize(seed_pair(), 0, *llm, search);
    EXPECT_EQ(result.qa.question, seed_pair().question);
    EXPECT_EQ(result.qa.source, core::QaSource::e2h);
    EXPECT_EQ(result.qa.e2h_iterations, 0);
    EXPECT_EQ(llm->consumed(), 0u);
}

TEST(E2HSynthesize, TwoIterations)
{
    const auto world = e2h_world();
    MockSearch search(world);
    auto llm = ScriptedChat::of(two_round_script());
    const auto result = e2h_synthesize(seed_pair(), 2, *llm, search);
    EXPECT_EQ(result.qa.question, "Who founded the company that acquired a firm founded in Springfield in 1999?");
    EXPECT_EQ(result.qa.answer, "Alice");
    EXPECT_EQ(result.qa.e2h_iterations, 2);
    EXPECT_EQ(result.state.entity_history.size(), 2u);
    EXPECT_FALSE(validate(result.qa).has_value());
    EXPECT_EQ(result.qa.provenance_urls.size(), 3u);
}

TEST(E2HSynthesize, FailureCarriesLastGoodState)
{
    const auto world = e2h_world();
    MockSearch search(world);
    auto script = two_round_script();
    script.back() = R"({"rewrite": ""})";
    auto llm = ScriptedChat::of(script);
    try {
        e2h_synthesize(seed_pair(), 2, *llm, search);
        FAIL();
    }
    catch (const E2HError& e) {
        EXPECT_EQ(e.state().iteration, 1);
        EXPECT_EQ(e.state().question, "Who founded the company that acquired Y in 1999?");
    }

    auto first_round_fails = ScriptedChat::of({R"({"entity": "X-Corp"})", R"({"query": "X-Corp history"})", "{}"});
    try {
        e2h_synthesize(seed_pair(), 1, *first_round_fails, search);
        FAIL();
    }
    catch (const E2HError& e) {
        EXPECT_EQ(e.state().iteration, 0);
        EXPECT_EQ(e.state().question, seed_pair().question);
    }
    EXPECT_THROW(e2h_synthesize(seed_pair(), -1, *first_round_fails, search), std::invalid_argument);
}

// Rule-based backends so any number of rounds can be run.
clients::ChatResponse rule_llm(const clients::ChatRequest& request)
{
    const auto& prompt = request.messages.at(0).content;
    const auto question_at = prompt.find("Question: ");
    if (prompt.starts_with("Pick one named entity")) {
        const auto hash = prompt.find("#", question_at);
        const auto end = prompt.find_first_of(" ?", hash);
        return {nlohmann::json{{"entity", prompt.substr(hash, end - hash)}}.dump(), std::nullopt, "stop"};
    }
    if (prompt.starts_with("Write one web search query"))
        return {R"({"query": "anything"})", std::nullopt, "stop"};
    const auto quote = prompt.find('"');
    const auto entity = prompt.substr(quote + 1, prompt.find('"', quote + 1) - quote - 1);
    const auto n = std::stoi(entity.substr(1));
    return {nlohmann::json{{"rewrite", "the thing after #" + std::to_string(n + 1)}}.dump(), std::nullopt, "stop"};
}

TEST(E2HSynthesize, AnswerInvarianceProperty)
{
    MockWorld world;
    world.add_page({"https://k.example/", "K", "knowledge", {}, std::nullopt});
    world.index("anything", {"https://k.example/"});
    MockSearch search(world);
    clients::FunctionChat llm(rule_llm);
    for (int n = 0; n <= 6; ++n) {
        core::QAPair seed = seed_pair();
        seed.question = "What is #1?";
        seed.answer = "forty-two";
        const auto result = e2h_synthesize(seed, n, llm, search);
        EXPECT_EQ(result.qa.answer, seed.answer);
        EXPECT_EQ(result.qa.e2h_iterations, n);
        EXPECT_EQ(result.state.entity_history.size(), static_cast<std::size_t>(n));
        for (const auto& hop : result.state.entity_history)
            EXPECT_EQ(hop.context, "- K: knowledge");
    }
}

} // namespace
} // namespace infoseek::synthesis
