#include "infoseek/cli/jsonl.hpp"

#include "infoseek/core/json.hpp"

#include <fmt/format.h>

#include <fstream>
#include <set>

namespace infoseek::cli {

namespace {

const std::set<std::string, std::less<>>& known_kinds()
{
    static const std::set<std::string, std::less<>> kinds{
        std::string(schema::qa),     std::string(schema::page),         std::string(schema::trajectory),
        std::string(schema::rollout_attempt), std::string(schema::filter_audit), std::string(schema::sft),
        std::string(schema::rl_step), std::string(schema::run_outcome)};
    return kinds;
}

std::ofstream open_for_write(const std::filesystem::path& path)
{
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    return out;
}

std::string dump(const nlohmann::json& value)
{
    return value.dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
}

} // namespace

void write_jsonl(const std::filesystem::path& path, std::string_view kind, const std::vector<nlohmann::json>& records)
{
    auto out = open_for_write(path);
    out << dump(nlohmann::json{{"schema", kind}, {"version", kSchemaVersion}}) << '\n';
    for (const auto& record : records)
        out << dump(record) << '\n';
    if (!out.flush())
        throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

JsonlFile read_jsonl_any(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw core::SchemaError(fmt::format("cannot read {}", path.string()));
    const auto where = [&](std::size_t line) { return fmt::format("{}:{}", path.string(), line); };

    JsonlFile file;
    std::string line;
    std::size_t number = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            throw core::SchemaError(fmt::format("{}: blank line", where(number)));
        auto value = nlohmann::json::parse(line, nullptr, false);
        if (value.is_discarded())
            throw core::SchemaError(fmt::format("{}: invalid JSON", where(number)));
        if (!header) {
            if (!value.is_object() || value.size() != 2 || !value.contains("schema") || !value["schema"].is_string() ||
                value.value("version", 0) != kSchemaVersion)
                throw core::SchemaError(fmt::format(
                    "{}: expected a header {{\"schema\": <kind>, \"version\": {}}}", where(number), kSchemaVersion));
            file.kind = value["schema"].get<std::string>();
            if (!known_kinds().contains(file.kind))
                throw core::SchemaError(fmt::format("{}: unknown schema '{}'", where(number), file.kind));
            header = true;
            continue;
        }
        file.records.push_back(std::move(value));
    }
    if (!header)
        throw core::SchemaError(fmt::format("{}: empty file (no schema header)", path.string()));
    return file;
}

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path, std::string_view kind)
{
    auto file = read_jsonl_any(path);
    if (file.kind != kind)
        throw core::SchemaError(fmt::format("{}: holds '{}' records, expected '{}'", path.string(), file.kind, kind));
    return std::move(file.records);
}

std::vector<core::QAPair> read_qas(const std::filesystem::path& path)
{
    return decode_records<core::QAPair>(path, read_jsonl(path, schema::qa),
                                        [](const nlohmann::json& j) { return j.get<core::QAPair>(); });
}

void write_qas(const std::filesystem::path& path, const std::vector<core::QAPair>& qas)
{
    std::vector<nlohmann::json> records(qas.begin(), qas.end());
    write_jsonl(path, schema::qa, records);
}

std::vector<core::Trajectory> read_trajectories(const std::filesystem::path& path)
{
    return decode_records<core::Trajectory>(path, read_jsonl(path, schema::trajectory),
                                            [](const nlohmann::json& j) { return j.get<core::Trajectory>(); });
}

void write_trajectories(const std::filesystem::path& path, const std::vector<core::Trajectory>& trajectories)
{
    std::vector<nlohmann::json> records(trajectories.begin(), trajectories.end());
    write_jsonl(path, schema::trajectory, records);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& value)
{
    auto out = open_for_write(path);
    out << value.dump(2) << '\n';
    if (!out.flush())
        throw std::runtime_error(fmt::format("write failed: {}", path.string()));
}

} // namespace infoseek::cli
