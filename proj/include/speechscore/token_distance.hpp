#pragma once

#include <cstddef>
#include <string>

#include "speechscore/core_model.hpp"
#include "speechscore/score_report.hpp"

namespace speechscore {

enum class DistanceMeasure { levenshtein, jaro_winkler };

std::string to_string(DistanceMeasure m);

struct DistanceConfig {
    DistanceMeasure measure = DistanceMeasure::levenshtein;
    bool dedup = false;
    double winkler_prefix_scale = 0.1;
    std::size_t winkler_max_prefix = 4;

    // Throws DataError unless 0 < p <= 0.25 and p * max_prefix <= 1.
    void validate() const;
    Json to_json() const;
};

// Minimum single-token insertions, deletions and substitutions.
std::size_t levenshtein_distance(const TokenSequence& a, const TokenSequence& b);

// 1 - d / max(len(a), len(b)).
double levenshtein_similarity(const TokenSequence& gen, const TokenSequence& ref);

double jaro(const TokenSequence& gen, const TokenSequence& ref);

// J + l * p * (1 - J), l the common prefix length capped at the configured maximum.
double jaro_winkler(const TokenSequence& gen, const TokenSequence& ref, const DistanceConfig& cfg);

struct TokenDistanceResult {
    double similarity = 0.0;
    std::size_t edit_distance = 0;  // Levenshtein only
};

// Applies dedup and the configured measure.
TokenDistanceResult speech_token_distance(const TokenSequence& gen, const TokenSequence& ref,
                                          const DistanceConfig& cfg);

} // namespace speechscore
