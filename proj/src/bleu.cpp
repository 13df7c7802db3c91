#include "speechscore/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "speechscore/errors.hpp"
#include "speechscore/quantizer.hpp"

namespace speechscore {

std::string to_string(BleuSmoothing s) {
    return s == BleuSmoothing::none ? "none" : "add_one_higher_order";
}

Json BleuConfig::to_json() const {
    Json j;
    j["max_order"] = max_order;
    j["weights"] = "uniform";
    j["dedup"] = dedup;
    j["smoothing"] = to_string(smoothing);
    j["brevity_penalty"] = brevity_penalty;
    return j;
}

namespace {

// Start offsets of all n-grams, sorted lexicographically by content.
std::vector<std::size_t> sorted_ngrams(std::span<const Token> s, std::size_t n) {
    std::vector<std::size_t> starts(s.size() - n + 1);
    std::iota(starts.begin(), starts.end(), 0);
    std::sort(starts.begin(), starts.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(s.begin() + a, s.begin() + a + n, s.begin() + b, s.begin() + b + n);
    });
    return starts;
}

// -1 / 0 / +1 comparison of two n-grams.
int compare(std::span<const Token> a, std::size_t ia, std::span<const Token> b, std::size_t ib, std::size_t n) {
    for (std::size_t d = 0; d < n; ++d) {
        if (a[ia + d] != b[ib + d]) return a[ia + d] < b[ib + d] ? -1 : 1;
    }
    return 0;
}

void require_non_empty(const TokenSequence& s, const char* side) {
    if (s.tokens.empty()) throw DataError(std::string(side) + " token sequence '" + s.utt_id + "' is empty");
}

} // namespace

NgramPrecision modified_precision(const TokenSequence& gen, const TokenSequence& ref, std::size_t n) {
    require_non_empty(gen, "generated");
    require_non_empty(ref, "reference");
    if (n == 0) throw DataError("n-gram order must be >= 1");
    NgramPrecision out;
    if (gen.tokens.size() < n) return out;
    out.total = gen.tokens.size() - n + 1;
    if (ref.tokens.size() < n) return out;

    const std::span<const Token> g(gen.tokens), r(ref.tokens);
    const auto gs = sorted_ngrams(g, n);
    const auto rs = sorted_ngrams(r, n);
    // Walk both sorted runs; each distinct n-gram contributes min(count_gen, count_ref).
    std::size_t i = 0, j = 0;
    while (i < gs.size() && j < rs.size()) {
        const int c = compare(g, gs[i], r, rs[j], n);
        if (c < 0) {
            ++i;
        } else if (c > 0) {
            ++j;
        } else {
            std::size_t ci = 1, cj = 1;
            while (i + ci < gs.size() && compare(g, gs[i], g, gs[i + ci], n) == 0) ++ci;
            while (j + cj < rs.size() && compare(r, rs[j], r, rs[j + cj], n) == 0) ++cj;
            out.matches += std::min(ci, cj);
            i += ci;
            j += cj;
        }
    }
    return out;
}

double speech_bleu(const TokenSequence& gen_in, const TokenSequence& ref_in, const BleuConfig& cfg) {
    if (cfg.max_order == 0) throw DataError("BLEU max order must be >= 1");
    require_non_empty(gen_in, "generated");
    require_non_empty(ref_in, "reference");
    const TokenSequence gen = cfg.dedup ? collapse_repeats(gen_in) : gen_in;
    const TokenSequence ref = cfg.dedup ? collapse_repeats(ref_in) : ref_in;

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= cfg.max_order; ++n) {
        const auto p = modified_precision(gen, ref, n);
        double matches = static_cast<double>(p.matches);
        double total = static_cast<double>(p.total);
        if (cfg.smoothing == BleuSmoothing::add_one_higher_order && n >= 2) {
            matches += 1.0;
            total += 1.0;
        }
        if (matches == 0.0) return 0.0;
        log_sum += std::log(matches / total);
    }
    double bp = 1.0;
    if (cfg.brevity_penalty) {
        const double c = static_cast<double>(gen.tokens.size());
        const double r = static_cast<double>(ref.tokens.size());
        bp = std::min(1.0, std::exp(1.0 - r / c));
    }
    return bp * std::exp(log_sum / static_cast<double>(cfg.max_order));
}

} // namespace speechscore
