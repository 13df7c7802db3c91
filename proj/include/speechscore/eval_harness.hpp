#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "speechscore/core_model.hpp"
#include "speechscore/score_report.hpp"

namespace speechscore {

enum class CorrelationLevel { utterance, system };

std::string to_string(CorrelationLevel l);
CorrelationLevel parse_level(const std::string& s);

struct CorrelationResult {
    CorrelationLevel level = CorrelationLevel::utterance;
    double lcc = 0.0;   // signed
    double srcc = 0.0;  // signed
    double lcc_abs = 0.0;
    double srcc_abs = 0.0;
    std::size_t n = 0;
};

// Sample Pearson correlation. Needs equal lengths >= 3 and non-constant inputs.
double pearson(std::span<const double> x, std::span<const double> y);

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct SystemMeans {
    std::vector<std::string> systems;  // sorted by system_id
    std::vector<double> scores;
    std::vector<double> ratings;
};

// Per-system mean score and mean rating over the scored utterances.
SystemMeans aggregate_system(const ScoreReport& report, std::span<const EvalPair> manifest);

CorrelationResult correlate(const ScoreReport& report, std::span<const EvalPair> manifest, CorrelationLevel level);

// Signed and absolute coefficients, n, level and the report's metric config.
Json correlation_summary(const CorrelationResult& result, const ScoreReport& report);

enum class PoolMode {
    single,    // one reference drawn once and shared by every pair
    per_pair,  // an independent draw for every pair
};

std::string to_string(PoolMode m);

// Replaces each pair's reference with a draw from `pool`; deterministic in `seed`.
std::vector<EvalPair> make_unaligned_manifest(std::span<const EvalPair> manifest,
                                              std::span<const std::filesystem::path> pool, std::uint64_t seed,
                                              PoolMode mode = PoolMode::single);

} // namespace speechscore
