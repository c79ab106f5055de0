#pragma once

#include "infoseek/core/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace infoseek::cli {

inline constexpr int kSchemaVersion = 1;

// Record kinds written by the pipeline.
namespace schema {
inline constexpr std::string_view qa = "qa";
inline constexpr std::string_view page = "page";
inline constexpr std::string_view trajectory = "trajectory";
inline constexpr std::string_view rollout_attempt = "rollout_attempt";
inline constexpr std::string_view filter_audit = "filter_audit";
inline constexpr std::string_view sft = "sft";
inline constexpr std::string_view rl_step = "rl_step";
inline constexpr std::string_view run_outcome = "run_outcome";
} // namespace schema

struct JsonlFile {
    std::string kind;
    std::vector<nlohmann::json> records;
};

// First line {"schema": kind, "version": 1}, then one compact record per line.
void write_jsonl(const std::filesystem::path& path, std::string_view kind, const std::vector<nlohmann::json>& records);

// Throws core::SchemaError with the file and line number for a missing or
// unknown header, bad JSON or a blank line.
JsonlFile read_jsonl_any(const std::filesystem::path& path);
std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path, std::string_view kind);

// Decodes every record with `decode`, prefixing failures with file:line.
template <class T, class Decode>
std::vector<T> decode_records(const std::filesystem::path& path, const std::vector<nlohmann::json>& records,
                              Decode decode);

std::vector<core::QAPair> read_qas(const std::filesystem::path& path);
void write_qas(const std::filesystem::path& path, const std::vector<core::QAPair>& qas);

std::vector<core::Trajectory> read_trajectories(const std::filesystem::path& path);
void write_trajectories(const std::filesystem::path& path, const std::vector<core::Trajectory>& trajectories);

void write_json(const std::filesystem::path& path, const nlohmann::json& value);

// Record line (1-based, header = line 1) for error messages.
inline std::size_t record_line(std::size_t index) { return index + 2; }

template <class T, class Decode>
std::vector<T> decode_records(const std::filesystem::path& path, const std::vector<nlohmann::json>& records,
                              Decode decode)
{
    std::vector<T> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            out.push_back(decode(records[i]));
        }
        catch (const std::exception& e) {
            throw core::SchemaError(path.string() + ":" + std::to_string(record_line(i)) + ": " + e.what());
        }
    }
    return out;
}

} // namespace infoseek::cli
