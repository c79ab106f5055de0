#include "infoseek/cli/commands.hpp"
#include "infoseek/cli/config.hpp"
#include "infoseek/cli/demo.hpp"
#include "infoseek/cli/jsonl.hpp"
#include "infoseek/core/json.hpp"
#include "infoseek/sft/sft.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace infoseek::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class TempDir {
public:
    TempDir()
    {
        std::random_device device;
        path_ = fs::temp_directory_path() / ("infoseek-cli-" + std::to_string(device()) + std::to_string(device()));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream(path, std::ios::binary) << text;
}

int cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "infoseek");
    args.insert(args.begin() + 1, {"--log-level", "off"});
    return run_cli(args);
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value) : name_(name)
    {
        if (const char* old = std::getenv(name))
            old_ = old;
        if (value)
            ::setenv(name, value, 1);
        else
            ::unsetenv(name);
    }
    ~ScopedEnv()
    {
        if (old_)
            ::setenv(name_, old_->c_str(), 1);
        else
            ::unsetenv(name_);
    }

private:
    const char* name_;
    std::optional<std::string> old_;
};

TEST(Config, DefaultsFollowTheRecipe)
{
    const auto config = parse_config("");
    EXPECT_EQ(config.rollout.rejection_budget, 5);
    EXPECT_EQ(config.rl.group_size, 16);
    EXPECT_DOUBLE_EQ(config.rollout.temperature, 0.6);
    EXPECT_DOUBLE_EQ(config.rollout.top_p, 0.95);
    EXPECT_DOUBLE_EQ(config.repetition_penalty(), 1.0);
    auto long_mode = parse_config("[rollout]\ncot_mode = \"long\"\n");
    EXPECT_DOUBLE_EQ(long_mode.repetition_penalty(), 1.1);
    auto pinned = parse_config("[rollout]\ncot_mode = \"long\"\nrepetition_penalty = 1.0\n");
    EXPECT_DOUBLE_EQ(pinned.repetition_penalty(), 1.0);
    EXPECT_EQ(config.filter.min_actions, 2);
    EXPECT_EQ(config.filter.ngram_n, 10);
    EXPECT_EQ(config.filter.ngram_threshold, 4);
}

TEST(Config, ParsesEverySection)
{
    const auto config = parse_config(R"(
parallelism = 3

[backends]
agent_model = "qwq"
per_host_delay_ms = 50

[synthesis]
max_depth = 1
question_types = ["COUNT"]

[rollout]
rejection_budget = 2
format = "tagged"

[filter]
max_actions = 12
use_judge = false

[sft]
mask_tags = false

[rl]
eps_high = 0.3
seed = 7
aggregation = "decision"

[eval]
judge = "reference"
metrics = ["pass@1"]
)");
    EXPECT_EQ(config.parallelism, 3);
    EXPECT_EQ(config.backends.agent_model, "qwq");
    EXPECT_EQ(config.backends.per_host_delay_ms, 50);
    EXPECT_EQ(config.synthesis.max_depth, 1);
    EXPECT_EQ(config.synthesis.question_types, std::vector{core::QuestionType::count});
    EXPECT_EQ(config.rollout.rejection_budget, 2);
    EXPECT_EQ(config.rollout.format, rollout::CompletionFormat::tagged);
    EXPECT_EQ(config.filter.max_actions, 12);
    EXPECT_FALSE(config.filter.use_judge);
    EXPECT_FALSE(config.sft.mask_tags);
    EXPECT_DOUBLE_EQ(config.rl.eps_high, 0.3);
    EXPECT_EQ(config.rl.seed, 7u);
    EXPECT_EQ(config.rl.aggregation, rl::RatioAggregation::decision);
    EXPECT_EQ(config.eval.judge, "reference");
}

TEST(Config, RejectsBadInput)
{
    const auto message = [](const std::string& text) {
        try {
            parse_config(text);
        }
        catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    EXPECT_NE(message("[rl]\ngroup = 16\n").find("rl.group"), std::string::npos);
    EXPECT_NE(message("[nope]\n").find("nope"), std::string::npos);
    EXPECT_NE(message("[rl]\ngroup_size = \"16\"\n").find("rl.group_size"), std::string::npos);
    EXPECT_NE(message("[rl]\ngroup_size = 1\n").find("rl.group_size"), std::string::npos);
    EXPECT_NE(message("[rollout]\ntop_p = 1.5\n").find("rollout"), std::string::npos);
    EXPECT_NE(message("[rollout]\ncot_mode = \"medium\"\n").find("rollout.cot_mode"), std::string::npos);
    EXPECT_NE(message("[eval]\nmetrics = [\"pass@4\"]\n").find("eval.metrics"), std::string::npos);
    EXPECT_NE(message("[backends]\nworld = \"/definitely/missing\"\n").find("backends.world"), std::string::npos);
    EXPECT_NE(message("[rl\n").find("<config>"), std::string::npos);
}

TEST(Config, InterpolatesEnvironment)
{
    ScopedEnv key("INFOSEEK_TEST_KEY", "sk-123");
    ScopedEnv missing("INFOSEEK_TEST_MISSING", nullptr);
    std::vector<std::string> unset;
    EXPECT_EQ(interpolate_env("Bearer ${INFOSEEK_TEST_KEY}!", &unset), "Bearer sk-123!");
    EXPECT_TRUE(unset.empty());
    EXPECT_EQ(interpolate_env("${INFOSEEK_TEST_MISSING}", &unset), "");
    EXPECT_EQ(unset, std::vector<std::string>{"INFOSEEK_TEST_MISSING"});
    EXPECT_THROW(interpolate_env("${OPEN"), ConfigError);

    const auto config = parse_config("[backends]\nllm_api_key = \"${INFOSEEK_TEST_KEY}\"\n"
                                     "search_api_key = \"${INFOSEEK_TEST_MISSING}\"\n");
    EXPECT_EQ(require_setting(config, "backends.llm_api_key"), "sk-123");
    try {
        require_setting(config, "backends.search_api_key");
        FAIL() << "expected a ConfigError";
    }
    catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("backends.search_api_key"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("INFOSEEK_TEST_MISSING"), std::string::npos);
    }
}

TEST(Jsonl, HeaderAndLineNumbers)
{
    TempDir dir;
    core::QAPair qa;
    qa.id = "q1";
    qa.question = "Who?";
    qa.answer = "Me";
    write_qas(dir / "qa.jsonl", {qa});
    EXPECT_EQ(slurp(dir / "qa.jsonl").substr(0, 29), "{\"schema\":\"qa\",\"version\":1}\n{");
    EXPECT_EQ(read_qas(dir / "qa.jsonl"), std::vector{qa});

    EXPECT_THROW(read_trajectories(dir / "qa.jsonl"), core::SchemaError);
    write_file(dir / "bare.jsonl", json(qa).dump() + "\n");
    EXPECT_THROW(read_qas(dir / "bare.jsonl"), core::SchemaError);
    write_file(dir / "bad.jsonl", "{\"schema\":\"qa\",\"version\":1}\n" + json(qa).dump() + "\n{\"id\":\"x\"}\n");
    try {
        read_qas(dir / "bad.jsonl");
        FAIL() << "expected a SchemaError";
    }
    catch (const core::SchemaError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.jsonl:3"), std::string::npos) << e.what();
    }
}

TEST(Cli, UsageErrorsExitTwo)
{
    EXPECT_EQ(cli({}), kExitUsage);
    EXPECT_EQ(cli({"no-such-command"}), kExitUsage);
    EXPECT_EQ(cli({"rollout", "--out", "x.jsonl"}), kExitUsage);
    EXPECT_EQ(cli({"--config", "/no/such/config.toml", "demo-offline"}), kExitUsage);
    EXPECT_EQ(cli({"--help"}), kExitOk);

    TempDir dir;
    write_file(dir / "bad.toml", "[rl]\ngroup_size = 0\n");
    EXPECT_EQ(cli({"--config", (dir / "bad.toml").string(), "demo-offline", "--out", dir.path().string()}),
              kExitUsage);
    EXPECT_FALSE(fs::exists(dir / "qa.jsonl"));
}

TEST(Cli, MissingKeyNamesTheSetting)
{
    ScopedEnv key("INFOSEEK_LLM_API_KEY", nullptr);
    TempDir dir;
    core::QAPair qa;
    qa.id = "q1";
    qa.question = "Who?";
    qa.answer = "Me";
    write_qas(dir / "qa.jsonl", {qa});

    ::testing::internal::CaptureStderr();
    const int code = cli({"rollout", "--qa", (dir / "qa.jsonl").string(), "--out", (dir / "t.jsonl").string()});
    const auto err = ::testing::internal::GetCapturedStderr();
    EXPECT_EQ(code, kExitUsage);
    EXPECT_NE(err.find("backends.llm_api_key"), std::string::npos) << err;
    EXPECT_NE(err.find("INFOSEEK_LLM_API_KEY"), std::string::npos) << err;
    EXPECT_FALSE(fs::exists(dir / "t.jsonl"));
}

TEST(Cli, StageFailureExitsOne)
{
    TempDir dir;
    write_file(dir / "runs.jsonl", "{\"schema\":\"qa\",\"version\":1}\n");
    write_file(dir / "offline.toml", "[eval]\njudge = \"reference\"\n");
    EXPECT_EQ(cli({"--config", (dir / "offline.toml").string(), "eval", "--runs", (dir / "runs.jsonl").string(), "--out", (dir / "eval.json").string()}),
              kExitStageFailure);
}

class Demo : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        dir_ = new TempDir();
        first_ = run_demo(*dir_ / "a", 0, default_config());
        second_ = run_demo(*dir_ / "b", 0, default_config());
    }
    static void TearDownTestSuite() { delete dir_; }

    static TempDir* dir_;
    static DemoSummary first_;
    static DemoSummary second_;
};

TempDir* Demo::dir_ = nullptr;
DemoSummary Demo::first_;
DemoSummary Demo::second_;

TEST_F(Demo, RerunsAreByteIdentical)
{
    ASSERT_EQ(first_.artifacts.size(), second_.artifacts.size());
    for (std::size_t i = 0; i < first_.artifacts.size(); ++i) {
        EXPECT_EQ(first_.artifacts[i].filename(), second_.artifacts[i].filename());
        EXPECT_EQ(slurp(first_.artifacts[i]), slurp(second_.artifacts[i])) << first_.artifacts[i];
    }
}

TEST_F(Demo, EveryStageProducesOutput)
{
    EXPECT_GE(first_.qas, 3u);
    EXPECT_GT(first_.sft_records, 0u);
    EXPECT_GT(first_.masked_spans, 0u);
    EXPECT_GT(first_.rl_questions, 0u);
    EXPECT_GT(first_.attempts, first_.qas);

    const auto sft = read_jsonl(*dir_ / "a/sft.jsonl", schema::sft);
    for (const auto& record : sft)
        EXPECT_NO_THROW(record.get<sft::SFTRecord>());
    const auto steps = read_jsonl(*dir_ / "a/rl_report.jsonl", schema::rl_step);
    EXPECT_EQ(steps.size(), 200u);
    for (const auto& step : steps) {
        EXPECT_TRUE(step.contains("mean_reward") && step.contains("groups_kept") && step.contains("J"));
        EXPECT_TRUE(std::isfinite(step["J"].get<double>()));
    }
    const auto audit = read_jsonl(*dir_ / "a/audit.jsonl", schema::filter_audit);
    EXPECT_EQ(audit.size(), first_.attempts);
    const auto report = json::parse(slurp(*dir_ / "a/eval.json"));
    EXPECT_LE(report["metrics"]["cons@3"].get<double>(), report["metrics"]["pass@3"].get<double>());
}

TEST_F(Demo, SubcommandsReproduceTheDemoStages)
{
    const auto in = [&](const char* name) { return (*dir_ / "a" / name).string(); };
    TempDir out;
    write_file(out / "offline.toml", "[eval]\njudge = \"reference\"\n");
    const auto config = (out / "offline.toml").string();

    ASSERT_EQ(cli({"--config", config, "filter", "--in", in("attempts.jsonl"), "--qa", in("qa.jsonl"), "--out-sft",
                   (out / "trajectories.jsonl").string(), "--out-rl", (out / "rl_qa.jsonl").string(), "--audit",
                   (out / "audit.jsonl").string()}),
              kExitOk);
    EXPECT_EQ(slurp(out / "trajectories.jsonl"), slurp(in("trajectories.jsonl")));
    EXPECT_EQ(slurp(out / "rl_qa.jsonl"), slurp(in("rl_qa.jsonl")));
    EXPECT_EQ(slurp(out / "audit.jsonl"), slurp(in("audit.jsonl")));

    ASSERT_EQ(cli({"emit-sft", "--in", in("trajectories.jsonl"), "--out", (out / "sft.jsonl").string()}), kExitOk);
    EXPECT_EQ(slurp(out / "sft.jsonl"), slurp(in("sft.jsonl")));

    ASSERT_EQ(cli({"rl-sim", "--tasks", in("rl_qa.jsonl"), "--g", "16", "--steps", "200", "--seed", "0", "--report",
                   (out / "rl_report.jsonl").string()}),
              kExitOk);
    EXPECT_EQ(slurp(out / "rl_report.jsonl"), slurp(in("rl_report.jsonl")));

    ASSERT_EQ(cli({"--config", config, "eval", "--runs", in("runs.jsonl"), "--metrics", "pass@1,pass@3,cons@3",
                   "--out", (out / "eval.json").string()}),
              kExitOk);
    EXPECT_EQ(json::parse(slurp(out / "eval.json")), json::parse(slurp(in("eval.json"))));
}

TEST(Cli, CrawlAgainstAWorldDirectory)
{
    TempDir dir;
    save_world(demo_world(), dir / "world");
    const auto loaded = clients::MockWorld::load(dir / "world");
    EXPECT_EQ(loaded.pages().size(), demo_world().pages().size());
    EXPECT_EQ(loaded.search_index(), demo_world().search_index());

    json scripts{{"synthesis", json::array()}};
    for (int i = 0; i < 2; ++i)
        scripts["synthesis"].push_back(json{{"question", "How many branches?"}, {"answer", "3"}}.dump());
    write_file(dir / "world/scripts.json", scripts.dump());
    write_file(dir / "c.toml", "[synthesis]\nquestion_types = [\"COUNT\"]\n");

    ASSERT_EQ(cli({"--config", (dir / "c.toml").string(), "--world", (dir / "world").string(), "synthesize-crawl",
                   "--root", std::string(kDemoRoot), "--out", (dir / "qa.jsonl").string()}),
              kExitOk);
    const auto qas = read_qas(dir / "qa.jsonl");
    ASSERT_EQ(qas.size(), 1u);
    EXPECT_EQ(qas[0].answer, "3");
    EXPECT_FALSE(qas[0].provenance_urls.empty());
}

} // namespace
} // namespace infoseek::cli
