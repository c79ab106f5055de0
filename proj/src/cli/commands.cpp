#include "infoseek/cli/commands.hpp"

#include "infoseek/cli/backends.hpp"
#include "infoseek/cli/config.hpp"
#include "infoseek/cli/demo.hpp"
#include "infoseek/cli/jsonl.hpp"
#include "infoseek/cli/pipeline.hpp"
#include "infoseek/core/json.hpp"
#include "infoseek/core/text.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

namespace infoseek::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
    std::string config_path;
    std::string world;
    std::optional<int> parallelism;
    std::string log_level = "info";
};

void print_summary(const json& summary)
{
    std::cout << summary.dump() << '\n';
}

template <class T>
std::vector<json> to_records(const std::vector<T>& items)
{
    return std::vector<json>(items.begin(), items.end());
}

std::vector<rollout::RolloutAttempt> read_attempt_input(const fs::path& path, bool* from_trajectories)
{
    auto file = read_jsonl_any(path);
    if (file.kind == schema::rollout_attempt) {
        *from_trajectories = false;
        return decode_records<rollout::RolloutAttempt>(path, file.records, rollout::attempt_from_json);
    }
    if (file.kind == schema::trajectory) {
        *from_trajectories = true;
        return attempts_from_trajectories(decode_records<core::Trajectory>(
            path, file.records, [](const json& j) { return j.get<core::Trajectory>(); }));
    }
    throw core::SchemaError(
        fmt::format("{}: holds '{}' records, expected rollout_attempt or trajectory", path.string(), file.kind));
}

fs::path sibling_attempts_path(const fs::path& out)
{
    auto stem = out.stem().string();
    return out.parent_path() / (stem + ".attempts.jsonl");
}

rl::ToyEnvironment read_tasks(const fs::path& path, const PipelineConfig& config)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw core::SchemaError(fmt::format("cannot read {}", path.string()));
    std::string first;
    std::getline(in, first);
    const auto header = json::parse(first, nullptr, false);
    if (!header.is_discarded() && header.is_object() && header.contains("schema")) {
        const auto qas = read_qas(path);
        if (qas.empty())
            throw core::SchemaError(fmt::format("{}: no QA records", path.string()));
        return rl::ToyEnvironment::from_qas(qas, config.rl.depth, config.rl.branching, config.rl.seed);
    }
    in.clear();
    in.seekg(0);
    const auto doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw core::SchemaError(fmt::format("{}: neither QA JSONL nor a toy environment JSON document", path.string()));
    try {
        return rl::toy_environment_from_json(doc);
    }
    catch (const std::exception& e) {
        throw core::SchemaError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

std::vector<std::string> split_metrics(const std::string& text)
{
    std::vector<std::string> out;
    std::size_t at = 0;
    while (at <= text.size()) {
        const auto comma = text.find(',', at);
        const auto item = core::trim(std::string_view(text).substr(at, comma == std::string::npos ? comma : comma - at));
        if (!item.empty())
            out.emplace_back(item);
        if (comma == std::string::npos)
            break;
        at = comma + 1;
    }
    return out;
}

void setup_logging(const std::string& level)
{
    auto logger = spdlog::get("infoseek");
    if (!logger)
        logger = spdlog::stderr_color_mt("infoseek");
    spdlog::set_default_logger(logger);
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && level != "off")
        throw ConfigError(fmt::format("--log-level: unknown level '{}'", level));
    spdlog::set_level(parsed);
}

} // namespace

int run_cli(const std::vector<std::string>& args)
{
    CLI::App app{"Pipeline for building information-seeking web agents", args.empty() ? "infoseek" : args[0]};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    Globals globals;
    app.add_option("--config", globals.config_path, "TOML config file")->check(CLI::ExistingFile);
    app.add_option("--world", globals.world, "MockWorld directory; serves every backend offline")
        ->check(CLI::ExistingDirectory);
    app.add_option("--parallelism", globals.parallelism, "Worker threads per stage")->check(CLI::PositiveNumber);
    app.add_option("--log-level", globals.log_level, "trace, debug, info, warn, error or off");

    PipelineConfig config;
    std::function<int()> action;

    // synthesize-crawl
    auto* crawl = app.add_subcommand("synthesize-crawl", "Crawl a site and generate QA pairs from its pages");
    std::string crawl_root;
    std::string crawl_out;
    std::string crawl_pages;
    crawl->add_option("--root", crawl_root, "Root URL")->required();
    crawl->add_option("--out", crawl_out, "QA JSONL output")->required();
    crawl->add_option("--pages-out", crawl_pages, "Crawled page JSONL output");
    crawl->callback([&] {
        action = [&] {
            Backends backends(config);
            backends.fetch();
            backends.chat(Role::synthesis);
            const auto result = synthesize_crawl(crawl_root, config, backends);
            write_qas(crawl_out, result.qas);
            if (!crawl_pages.empty()) {
                std::vector<json> pages;
                for (const auto& p : result.crawl.pages)
                    pages.push_back(json{{"url", p.url}, {"title", p.title}, {"depth", p.depth},
                                         {"out_links", p.out_links}, {"content", p.content}});
                write_jsonl(crawl_pages, schema::page, pages);
            }
            print_summary({{"pages", result.crawl.pages.size()},
                           {"failures", result.crawl.failures.size()},
                           {"qas", result.qas.size()}});
            return kExitOk;
        };
    });

    // synthesize-e2h
    auto* e2h = app.add_subcommand("synthesize-e2h", "Make seed questions harder by entity rewriting");
    std::string e2h_seeds;
    std::string e2h_out;
    std::optional<int> e2h_iterations;
    e2h->add_option("--seeds", e2h_seeds, "Seed QA JSONL")->required()->check(CLI::ExistingFile);
    e2h->add_option("--iterations", e2h_iterations, "Complication rounds per seed")->check(CLI::NonNegativeNumber);
    e2h->add_option("--out", e2h_out, "QA JSONL output")->required();
    e2h->callback([&] {
        action = [&] {
            Backends backends(config);
            backends.chat(Role::synthesis);
            backends.search();
            const auto seeds = read_qas(e2h_seeds);
            const auto result =
                synthesize_e2h(seeds, e2h_iterations.value_or(config.synthesis.e2h_iterations), config, backends);
            write_qas(e2h_out, result.qas);
            print_summary({{"seeds", seeds.size()}, {"qas", result.qas.size()}, {"failures", result.failures}});
            return result.qas.empty() && !seeds.empty() ? kExitStageFailure : kExitOk;
        };
    });

    // rollout
    auto* roll = app.add_subcommand("rollout", "Sample ReAct trajectories with rejection sampling");
    std::string roll_qa;
    std::string roll_out;
    std::string roll_log;
    std::string roll_mode;
    std::string roll_format;
    std::optional<int> roll_attempts;
    roll->add_option("--qa", roll_qa, "QA JSONL")->required()->check(CLI::ExistingFile);
    roll->add_option("--mode", roll_mode, "short or long chain of thought")->check(CLI::IsMember({"short", "long"}));
    roll->add_option("--format", roll_format, "prompt or tagged completions")
        ->check(CLI::IsMember({"prompt", "tagged"}));
    roll->add_option("--out", roll_out, "Accepted trajectory JSONL")->required();
    roll->add_option("--attempts", roll_attempts, "Rejection budget per question")->check(CLI::PositiveNumber);
    roll->add_option("--attempts-log", roll_log, "Attempt log JSONL (default <out>.attempts.jsonl)");
    roll->callback([&] {
        if (!roll_mode.empty())
            config.rollout.cot_mode = roll_mode == "long" ? core::CotMode::long_cot : core::CotMode::short_cot;
        if (!roll_format.empty())
            config.rollout.format = rollout::completion_format_from_string(roll_format);
        if (roll_attempts)
            config.rollout.rejection_budget = *roll_attempts;
        action = [&] {
            Backends backends(config);
            backends.chat(Role::agent);
            if (config.rollout.accept == "funnel")
                backends.chat(Role::judge);
            const auto qas = read_qas(roll_qa);
            const auto result = rollout_stage(qas, config, backends);
            write_trajectories(roll_out, result.accepted);
            std::vector<json> attempts;
            for (const auto& attempt : result.attempts)
                attempts.push_back(rollout::attempt_to_json(attempt));
            const fs::path log = roll_log.empty() ? sibling_attempts_path(roll_out) : fs::path(roll_log);
            write_jsonl(log, schema::rollout_attempt, attempts);
            print_summary({{"questions", qas.size()},
                           {"accepted", result.accepted.size()},
                           {"attempts", result.attempts.size()},
                           {"attempts_log", log.string()}});
            return kExitOk;
        };
    });

    // filter
    auto* filt = app.add_subcommand("filter", "Run the validity, correctness and quality funnel");
    std::string filt_in;
    std::string filt_qa;
    std::string filt_sft;
    std::string filt_rl;
    std::string filt_audit;
    filt->add_option("--in", filt_in, "Attempt log or trajectory JSONL")->required()->check(CLI::ExistingFile);
    filt->add_option("--qa", filt_qa, "QA JSONL")->required()->check(CLI::ExistingFile);
    filt->add_option("--out-sft", filt_sft, "Surviving trajectories JSONL")->required();
    filt->add_option("--out-rl", filt_rl, "QA JSONL for questions without a survivor")->required();
    filt->add_option("--audit", filt_audit, "Per-attempt verdict JSONL")->required();
    filt->callback([&] {
        action = [&] {
            Backends backends(config);
            backends.chat(Role::judge);
            bool from_trajectories = false;
            const auto attempts = read_attempt_input(filt_in, &from_trajectories);
            if (from_trajectories)
                config.filter.format = rollout::CompletionFormat::tagged;
            const auto qas = read_qas(filt_qa);
            const auto result = filter_stage(qas, attempts, config, backends);
            write_trajectories(filt_sft, result.sft_set);
            write_qas(filt_rl, result.rl_qa_set);
            write_jsonl(filt_audit, schema::filter_audit, to_records(result.audit));
            print_summary({{"attempts", attempts.size()},
                           {"sft", result.sft_set.size()},
                           {"rl", result.rl_qa_set.size()}});
            return kExitOk;
        };
    });

    // emit-sft
    auto* sft_cmd = app.add_subcommand("emit-sft", "Serialize trajectories into masked SFT records");
    std::string sft_in;
    std::string sft_out;
    sft_cmd->add_option("--in", sft_in, "Trajectory JSONL")->required()->check(CLI::ExistingFile);
    sft_cmd->add_option("--out", sft_out, "SFT JSONL")->required();
    sft_cmd->callback([&] {
        action = [&] {
            const auto records = sft_stage(read_trajectories(sft_in), config);
            write_jsonl(sft_out, schema::sft, to_records(records));
            std::size_t masked = 0;
            for (const auto& record : records)
                masked += record.mask_spans.size();
            print_summary({{"records", records.size()}, {"mask_spans", masked}});
            return kExitOk;
        };
    });

    // rl-sim
    auto* rl_cmd = app.add_subcommand("rl-sim", "Run the RL loop on the toy environment");
    std::string rl_tasks;
    std::string rl_report;
    std::optional<int> rl_g;
    std::optional<int> rl_steps;
    std::optional<std::uint64_t> rl_seed;
    std::optional<double> rl_lr;
    rl_cmd->add_option("--tasks", rl_tasks, "QA JSONL or toy environment JSON")->required()->check(CLI::ExistingFile);
    rl_cmd->add_option("--g", rl_g, "Group size");
    rl_cmd->add_option("--steps", rl_steps, "Training steps");
    rl_cmd->add_option("--seed", rl_seed, "Sampling seed (also labels QA-derived tasks)");
    rl_cmd->add_option("--lr", rl_lr, "Learning rate");
    rl_cmd->add_option("--report", rl_report, "Per-step JSONL report")->required();
    rl_cmd->callback([&] {
        if (rl_g)
            config.rl.group_size = *rl_g;
        if (rl_steps)
            config.rl.steps = *rl_steps;
        if (rl_seed)
            config.rl.seed = *rl_seed;
        if (rl_lr)
            config.rl.lr = *rl_lr;
        action = [&] {
            const auto env = read_tasks(rl_tasks, config);
            const auto result = rl_stage(env, config);
            write_jsonl(rl_report, schema::rl_step, to_records(result.report.steps));
            int skipped = 0;
            for (const auto& step : result.report.steps)
                skipped += step.skipped ? 1 : 0;
            print_summary({{"tasks", env.tasks().size()},
                           {"steps", result.report.steps.size()},
                           {"skipped_steps", skipped},
                           {"initial_expected_reward", result.report.initial_expected_reward},
                           {"final_expected_reward", result.final_expected_reward}});
            return kExitOk;
        };
    });

    // eval
    auto* ev = app.add_subcommand("eval", "Judge run outcomes and compute metrics");
    std::string ev_runs;
    std::string ev_metrics;
    std::string ev_out;
    std::string ev_qa;
    std::optional<int> ev_attempts;
    ev->add_option("--runs", ev_runs, "Run outcome JSONL (written first when --qa is given)")->required();
    ev->add_option("--metrics", ev_metrics, "Comma-separated, e.g. pass@1,pass@3,cons@3");
    ev->add_option("--out", ev_out, "Report JSON")->required();
    ev->add_option("--qa", ev_qa, "Run the agent on these questions to produce --runs")->check(CLI::ExistingFile);
    ev->add_option("--attempts", ev_attempts, "Attempts per question with --qa")->check(CLI::PositiveNumber);
    ev->callback([&] {
        if (!ev_metrics.empty())
            config.eval.metrics = split_metrics(ev_metrics);
        if (ev_attempts)
            config.eval.attempts = *ev_attempts;
        action = [&] {
            Backends backends(config);
            backends.chat(Role::judge);
            std::vector<eval::RunOutcome> runs;
            if (!ev_qa.empty()) {
                backends.chat(Role::agent);
                runs = collect_runs(read_qas(ev_qa), config.eval.attempts, config, backends);
                write_jsonl(ev_runs, schema::run_outcome, to_records(runs));
            }
            else {
                runs = decode_records<eval::RunOutcome>(ev_runs, read_jsonl(ev_runs, schema::run_outcome),
                                                        [](const json& j) { return j.get<eval::RunOutcome>(); });
            }
            auto report = eval_stage(runs, config.eval.metrics, config, backends);
            write_json(ev_out, report);
            print_summary(report);
            return kExitOk;
        };
    });

    // demo-offline
    auto* demo = app.add_subcommand("demo-offline", "Run every stage against the built-in offline world");
    std::uint64_t demo_seed = 0;
    std::string demo_out = "demo_out";
    std::string demo_export;
    demo->add_option("--seed", demo_seed, "RL seed");
    demo->add_option("--out", demo_out, "Artifact directory");
    demo->add_option("--export-world", demo_export, "Also write the demo world as a MockWorld directory");
    demo->callback([&] {
        action = [&] {
            const auto summary = run_demo(demo_out, demo_seed, config);
            if (!demo_export.empty())
                save_world(demo_world(), demo_export);
            json artifacts = json::array();
            for (const auto& path : summary.artifacts)
                artifacts.push_back(path.string());
            print_summary({{"pages", summary.pages},
                           {"qas", summary.qas},
                           {"attempts", summary.attempts},
                           {"sft_records", summary.sft_records},
                           {"mask_spans", summary.masked_spans},
                           {"rl_questions", summary.rl_questions},
                           {"initial_expected_reward", summary.initial_expected_reward},
                           {"final_expected_reward", summary.final_expected_reward},
                           {"eval", summary.eval},
                           {"artifacts", artifacts}});
            return kExitOk;
        };
    });

    // Config is loaded after the global options are parsed and before any
    // subcommand callback applies its overrides.
    app.parse_complete_callback([&] {
        setup_logging(globals.log_level);
        config = globals.config_path.empty() ? default_config() : load_config(globals.config_path);
        if (!globals.world.empty())
            config.backends.world = fs::path(globals.world);
        if (globals.parallelism)
            config.parallelism = *globals.parallelism;
    });

    try {
        std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
        std::reverse(rest.begin(), rest.end());
        app.parse(rest);
        validate(config);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }
    catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        return action();
    }
    catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kExitUsage;
    }
    catch (const std::exception& e) {
        std::cerr << "stage failed: " << e.what() << '\n';
        return kExitStageFailure;
    }
}

int run_cli(int argc, char** argv)
{
    return run_cli(std::vector<std::string>(argv, argv + argc));
}

} // namespace infoseek::cli
