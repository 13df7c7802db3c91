#include "speechscore/token_distance.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "speechscore/errors.hpp"
#include "speechscore/quantizer.hpp"

namespace speechscore {

std::string to_string(DistanceMeasure m) {
    return m == DistanceMeasure::levenshtein ? "levenshtein" : "jaro_winkler";
}

void DistanceConfig::validate() const {
    if (!(winkler_prefix_scale > 0.0 && winkler_prefix_scale <= 0.25)) {
        throw DataError("Winkler prefix scale must lie in (0, 0.25]");
    }
    if (winkler_prefix_scale * static_cast<double>(winkler_max_prefix) > 1.0) {
        throw DataError("Winkler prefix scale times max prefix must not exceed 1");
    }
}

Json DistanceConfig::to_json() const {
    Json j;
    j["measure"] = to_string(measure);
    j["dedup"] = dedup;
    j["winkler_prefix_scale"] = winkler_prefix_scale;
    j["winkler_max_prefix"] = winkler_max_prefix;
    j["normalization"] = measure == DistanceMeasure::levenshtein ? "1 - d / max(len_gen, len_ref)" : "jaro_winkler";
    return j;
}

namespace {

void require_non_empty(const TokenSequence& a, const TokenSequence& b) {
    if (a.tokens.empty() || b.tokens.empty()) throw DataError("token distance needs non-empty sequences");
}

} // namespace

std::size_t levenshtein_distance(const TokenSequence& a_in, const TokenSequence& b_in) {
    require_non_empty(a_in, b_in);
    // One row sized by the shorter sequence.
    const auto& a = a_in.tokens.size() >= b_in.tokens.size() ? a_in.tokens : b_in.tokens;
    const auto& b = a_in.tokens.size() >= b_in.tokens.size() ? b_in.tokens : a_in.tokens;
    std::vector<std::size_t> row(b.size() + 1);
    std::iota(row.begin(), row.end(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i + 1;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const std::size_t up = row[j + 1];
            row[j + 1] = a[i] == b[j] ? diag : 1 + std::min({diag, up, row[j]});
            diag = up;
        }
    }
    return row[b.size()];
}

double levenshtein_similarity(const TokenSequence& gen, const TokenSequence& ref) {
    const double d = static_cast<double>(levenshtein_distance(gen, ref));
    const double longest = static_cast<double>(std::max(gen.tokens.size(), ref.tokens.size()));
    return 1.0 - d / longest;
}

double jaro(const TokenSequence& gen, const TokenSequence& ref) {
    require_non_empty(gen, ref);
    const auto& a = gen.tokens;
    const auto& b = ref.tokens;
    const std::size_t longest = std::max(a.size(), b.size());
    const std::size_t window = longest / 2 >= 1 ? longest / 2 - 1 : 0;

    std::vector<char> a_hit(a.size(), 0), b_hit(b.size(), 0);
    std::size_t m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t lo = i > window ? i - window : 0;
        const std::size_t hi = std::min(b.size(), i + window + 1);
        for (std::size_t j = lo; j < hi; ++j) {
            if (!b_hit[j] && a[i] == b[j]) {
                a_hit[i] = b_hit[j] = 1;
                ++m;
                break;
            }
        }
    }
    if (m == 0) return 0.0;

    std::size_t out_of_order = 0, j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a_hit[i]) continue;
        while (!b_hit[j]) ++j;
        if (a[i] != b[j]) ++out_of_order;
        ++j;
    }
    const double md = static_cast<double>(m);
    const double t = static_cast<double>(out_of_order) / 2.0;
    return (md / static_cast<double>(a.size()) + md / static_cast<double>(b.size()) + (md - t) / md) / 3.0;
}

double jaro_winkler(const TokenSequence& gen, const TokenSequence& ref, const DistanceConfig& cfg) {
    cfg.validate();
    const double j = jaro(gen, ref);
    const std::size_t cap = std::min({cfg.winkler_max_prefix, gen.tokens.size(), ref.tokens.size()});
    std::size_t prefix = 0;
    while (prefix < cap && gen.tokens[prefix] == ref.tokens[prefix]) ++prefix;
    return j + static_cast<double>(prefix) * cfg.winkler_prefix_scale * (1.0 - j);
}

TokenDistanceResult speech_token_distance(const TokenSequence& gen_in, const TokenSequence& ref_in,
                                          const DistanceConfig& cfg) {
    cfg.validate();
    require_non_empty(gen_in, ref_in);
    const TokenSequence gen = cfg.dedup ? collapse_repeats(gen_in) : gen_in;
    const TokenSequence ref = cfg.dedup ? collapse_repeats(ref_in) : ref_in;
    TokenDistanceResult r;
    if (cfg.measure == DistanceMeasure::levenshtein) {
        r.edit_distance = levenshtein_distance(gen, ref);
        const double longest = static_cast<double>(std::max(gen.tokens.size(), ref.tokens.size()));
        r.similarity = 1.0 - static_cast<double>(r.edit_distance) / longest;
    } else {
        r.similarity = jaro_winkler(gen, ref, cfg);
    }
    return r;
}

} // namespace speechscore
