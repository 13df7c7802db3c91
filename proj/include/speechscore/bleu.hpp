#pragma once

#include <cstddef>
#include <string>

#include "speechscore/core_model.hpp"
#include "speechscore/score_report.hpp"

namespace speechscore {

enum class BleuSmoothing {
    none,
    add_one_higher_order,  // add 1 to matches and total for n >= 2
};

std::string to_string(BleuSmoothing s);

struct BleuConfig {
    std::size_t max_order = 2;  // G
    bool dedup = true;
    BleuSmoothing smoothing = BleuSmoothing::add_one_higher_order;
    bool brevity_penalty = true;

    Json to_json() const;
};

struct NgramPrecision {
    std::size_t matches = 0;
    std::size_t total = 0;

    bool operator==(const NgramPrecision&) const = default;
};

// Clipped n-gram matches of gen against ref, and the number of gen n-grams.
NgramPrecision modified_precision(const TokenSequence& gen, const TokenSequence& ref, std::size_t n);

// BP * exp(mean_n ln p_n) over n = 1..G. Without smoothing, any order with no
// match (or no n-gram at all) makes the score exactly 0.
double speech_bleu(const TokenSequence& gen, const TokenSequence& ref, const BleuConfig& cfg);

} // namespace speechscore
