#include "speechscore/bertscore.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <vector>

#include "speechscore/errors.hpp"

namespace speechscore {

std::string to_string(BertVariant v) {
    switch (v) {
        case BertVariant::precision: return "precision";
        case BertVariant::recall: return "recall";
        case BertVariant::f1: return "f1";
    }
    return "?";
}

std::string to_string(Weighting w) {
    switch (w) {
        case Weighting::none: return "none";
        case Weighting::df: return "df";
        case Weighting::idf: return "idf";
    }
    return "?";
}

BertVariant parse_bert_variant(const std::string& s) {
    if (s == "precision") return BertVariant::precision;
    if (s == "recall") return BertVariant::recall;
    if (s == "f1") return BertVariant::f1;
    throw DataError("unknown BERTScore variant '" + s + "'");
}

Weighting parse_weighting(const std::string& s) {
    if (s == "none") return Weighting::none;
    if (s == "df") return Weighting::df;
    if (s == "idf") return Weighting::idf;
    throw DataError("unknown weighting '" + s + "'");
}

WeightTable::WeightTable(Weighting mode, std::size_t n_docs, std::unordered_map<Token, std::size_t> df)
    : mode_(mode), n_docs_(n_docs), df_(std::move(df)) {
    if (mode_ == Weighting::none) throw DataError("weight table needs mode df or idf");
    if (n_docs_ == 0) throw DataError("weight table needs a non-empty corpus");
}

std::size_t WeightTable::df(Token t) const {
    auto it = df_.find(t);
    return it == df_.end() ? 0 : it->second;
}

double WeightTable::weight(Token t) const {
    const auto count = df(t);
    if (mode_ == Weighting::df) return static_cast<double>(count);
    return std::log(static_cast<double>(n_docs_) / static_cast<double>(count + 1));
}

WeightTable df_idf_weights(std::span<const TokenSequence> corpus, Weighting mode) {
    if (corpus.empty()) throw DataError("df/idf weights need a non-empty corpus");
    std::unordered_map<Token, std::size_t> df;
    for (const auto& seq : corpus) {
        std::unordered_set<Token> present(seq.tokens.begin(), seq.tokens.end());
        for (Token t : present) ++df[t];
    }
    return WeightTable(mode, corpus.size(), std::move(df));
}

Json BertScoreConfig::to_json() const {
    Json j;
    j["variant"] = to_string(variant);
    j["weighting"] = to_string(weighting);
    j["zero_norm_policy"] = strict_zero_norm ? "error" : "similarity 0";
    if (weights) j["weight_corpus_docs"] = weights->n_docs();
    return j;
}

kernels::Matrix similarity_matrix(const FeatureMatrix& gen, const FeatureMatrix& ref) {
    if (gen.dim() != ref.dim()) {
        throw DimensionError("feature dimension mismatch: gen " + std::to_string(gen.dim()) + " vs ref " +
                             std::to_string(ref.dim()));
    }
    return kernels::cosine_matrix(kernels::unit_rows(gen), kernels::unit_rows(ref));
}

namespace {

std::vector<double> frame_weights(const WeightTable& table, const TokenSequence* tokens, std::size_t n_frames,
                                  const char* side) {
    if (tokens == nullptr) throw DataError(std::string("weighting requires frame-aligned ") + side + " tokens");
    if (tokens->tokens.size() != n_frames) {
        throw DimensionError(std::string(side) + " tokens (" + std::to_string(tokens->tokens.size()) +
                             ") are not frame-aligned with " + std::to_string(n_frames) + " frames");
    }
    std::vector<double> w(n_frames);
    for (std::size_t i = 0; i < n_frames; ++i) w[i] = table.weight(tokens->tokens[i]);
    return w;
}

double weighted_mean(const std::vector<double>& best, const std::vector<double>* w) {
    if (w == nullptr) {
        double s = 0.0;
        for (double v : best) s += v;
        return s / static_cast<double>(best.size());
    }
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < best.size(); ++i) {
        num += (*w)[i] * best[i];
        den += (*w)[i];
    }
    if (den == 0.0) throw DegenerateWeightError("importance weights sum to exactly zero");
    return num / den;
}

} // namespace

double speech_bert_score(const FeatureMatrix& gen, const FeatureMatrix& ref, const BertScoreConfig& cfg,
                         const TokenSequence* gen_tokens, const TokenSequence* ref_tokens) {
    if (gen.dim() != ref.dim()) {
        throw DimensionError("feature dimension mismatch: gen " + std::to_string(gen.dim()) + " vs ref " +
                             std::to_string(ref.dim()));
    }
    if ((cfg.weighting == Weighting::none) != !cfg.weights.has_value()) {
        throw DataError("a weight table must be supplied exactly when weighting is enabled");
    }
    const bool need_p = cfg.variant != BertVariant::recall;
    const bool need_r = cfg.variant != BertVariant::precision;

    std::vector<double> gen_w, ref_w;
    if (cfg.weights) {
        if (need_p) gen_w = frame_weights(*cfg.weights, gen_tokens, gen.n_frames(), "generated");
        if (need_r) ref_w = frame_weights(*cfg.weights, ref_tokens, ref.n_frames(), "reference");
    }

    std::vector<std::size_t> zero_gen, zero_ref;
    const auto g = kernels::unit_rows(gen, &zero_gen);
    const auto r = kernels::unit_rows(ref, &zero_ref);
    if (cfg.strict_zero_norm && (!zero_gen.empty() || !zero_ref.empty())) {
        throw DataError("zero-norm frame in " + std::string(zero_gen.empty() ? "reference" : "generated") +
                        " features (strict zero-norm mode)");
    }
    const auto sim = kernels::cosine_matrix(g, r);

    double precision = 0.0, recall = 0.0;
    if (need_p) {
        std::vector<double> best(sim.rows);
        for (std::size_t i = 0; i < sim.rows; ++i) {
            const auto row = sim.row(i);
            best[i] = *std::max_element(row.begin(), row.end());
        }
        precision = weighted_mean(best, cfg.weights ? &gen_w : nullptr);
    }
    if (need_r) {
        std::vector<double> best(sim.cols, -2.0);
        for (std::size_t i = 0; i < sim.rows; ++i)
            for (std::size_t j = 0; j < sim.cols; ++j) best[j] = std::max(best[j], sim(i, j));
        recall = weighted_mean(best, cfg.weights ? &ref_w : nullptr);
    }

    switch (cfg.variant) {
        case BertVariant::precision: return precision;
        case BertVariant::recall: return recall;
        case BertVariant::f1: {
            const double denom = precision + recall;
            // Undefined at P + R = 0; report 0. Mixed signs can leave [-1, 1].
            if (denom == 0.0) return 0.0;
            return std::clamp(2.0 * precision * recall / denom, -1.0, 1.0);
        }
    }
    return 0.0;
}

} // namespace speechscore
