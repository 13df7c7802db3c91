#include "speechscore/score_report.hpp"

#include <cmath>
#include <unordered_set>

#include "speechscore/core_model.hpp"
#include "speechscore/errors.hpp"

namespace speechscore {

Json ScoreReport::to_json() const {
    Json j;
    j["metric"] = metric_name;
    j["config"] = config;
    Json s = Json::object();
    for (const auto& [utt, v] : scores) {
        if (!std::isfinite(v)) throw DataError("score for '" + utt + "' is not finite");
        s[utt] = v;
    }
    j["scores"] = std::move(s);
    if (!details.empty()) j["details"] = details;
    return j;
}

ScoreReport ScoreReport::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("metric") || !j.contains("config") || !j.contains("scores")) {
        throw FormatError("score report must be an object with keys metric, config, scores");
    }
    ScoreReport r;
    try {
        r.metric_name = j.at("metric").get<std::string>();
        r.config = j.at("config");
        for (const auto& [utt, v] : j.at("scores").items()) {
            if (!v.is_number()) throw FormatError("score for '" + utt + "' is not a number");
            r.scores.emplace_back(utt, v.get<double>());
        }
        if (j.contains("details")) r.details = j.at("details");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("score report: ") + e.what());
    }
    return r;
}

std::string serialize(const Json& j) { return j.dump(2) + "\n"; }

void write_json_file(const Json& j, const std::filesystem::path& path) {
    const std::string text = serialize(j);
    detail::write_all_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

Json read_json_file(const std::filesystem::path& path) {
    const auto bytes = detail::read_all_bytes(path);
    try {
        return Json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("'" + path.string() + "': " + e.what());
    }
}

void write_report(const ScoreReport& r, const std::filesystem::path& path) { write_json_file(r.to_json(), path); }

ScoreReport read_report(const std::filesystem::path& path) { return ScoreReport::from_json(read_json_file(path)); }

} // namespace speechscore
