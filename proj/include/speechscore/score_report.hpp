#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace speechscore {

using Json = nlohmann::ordered_json;

// Per-utterance metric values plus the configuration that produced them.
// Scores keep insertion (manifest) order so serialization is byte-stable.
struct ScoreReport {
    std::string metric_name;
    Json config = Json::object();
    std::vector<std::pair<std::string, double>> scores;
    // Optional per-utterance extras (e.g. raw edit distance); omitted when empty.
    Json details = Json::object();

    Json to_json() const;
    static ScoreReport from_json(const Json& j);
};

// Serialized form is `dump(2)` plus a trailing newline.
std::string serialize(const Json& j);

void write_json_file(const Json& j, const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

void write_report(const ScoreReport& r, const std::filesystem::path& path);
ScoreReport read_report(const std::filesystem::path& path);

} // namespace speechscore
