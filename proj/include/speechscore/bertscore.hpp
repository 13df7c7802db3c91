#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>

#include "speechscore/core_model.hpp"
#include "speechscore/kernels.hpp"
#include "speechscore/score_report.hpp"

namespace speechscore {

enum class BertVariant { precision, recall, f1 };
enum class Weighting { none, df, idf };

std::string to_string(BertVariant v);
std::string to_string(Weighting w);
BertVariant parse_bert_variant(const std::string& s);
Weighting parse_weighting(const std::string& s);

// Document-frequency statistics of a token corpus. Tokens that never occur get
// df 0 and idf ln(N).
class WeightTable {
public:
    WeightTable(Weighting mode, std::size_t n_docs, std::unordered_map<Token, std::size_t> df);

    Weighting mode() const noexcept { return mode_; }
    std::size_t n_docs() const noexcept { return n_docs_; }
    std::size_t df(Token t) const;
    double weight(Token t) const;

private:
    Weighting mode_;
    std::size_t n_docs_;
    std::unordered_map<Token, std::size_t> df_;
};

// df(u) = number of sequences containing u; idf(u) = ln(N / (df(u) + 1)).
WeightTable df_idf_weights(std::span<const TokenSequence> corpus, Weighting mode);

struct BertScoreConfig {
    BertVariant variant = BertVariant::precision;
    Weighting weighting = Weighting::none;
    std::optional<WeightTable> weights;  // required iff weighting != none
    bool strict_zero_norm = false;       // throw instead of scoring zero-norm frames as cosine 0

    Json to_json() const;
};

// Cosine similarity of every (gen frame, ref frame) pair; zero-norm frames score 0.
kernels::Matrix similarity_matrix(const FeatureMatrix& gen, const FeatureMatrix& ref);

// Precision averages each generated frame's best match, recall each reference
// frame's best match, F1 is their harmonic mean. With df/idf weighting the
// averages become weight-normalized sums, weights looked up per frame from the
// frame-aligned token sequences.
double speech_bert_score(const FeatureMatrix& gen, const FeatureMatrix& ref, const BertScoreConfig& cfg,
                         const TokenSequence* gen_tokens = nullptr, const TokenSequence* ref_tokens = nullptr);

} // namespace speechscore
