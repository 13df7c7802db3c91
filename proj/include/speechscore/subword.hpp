#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "speechscore/core_model.hpp"

namespace speechscore {

// Byte-pair merges over speech tokens. Merge i creates symbol base_vocab + i.
struct BPEModel {
    std::size_t base_vocab = 0;
    std::vector<std::pair<Token, Token>> merges;  // training order

    std::size_t vocab_size() const noexcept { return base_vocab + merges.size(); }
    bool operator==(const BPEModel&) const = default;
};

// Repeatedly merges the most frequent adjacent pair (ties: lower left, then
// lower right symbol) until vocab_size is reached or no pair occurs twice.
BPEModel train_bpe(std::span<const TokenSequence> corpus, std::size_t base_vocab, std::size_t vocab_size);

// Applies the merges in training order, each as one left-to-right pass.
TokenSequence bpe_encode(const BPEModel& model, const TokenSequence& seq);

// Expands merged symbols back to base tokens.
TokenSequence bpe_decode(const BPEModel& model, const TokenSequence& seq);

// {"base_vocab": K, "merges": [[l, r], ...]}
void write_bpe_model(const BPEModel& model, const std::filesystem::path& path);
BPEModel read_bpe_model(const std::filesystem::path& path);

} // namespace speechscore
