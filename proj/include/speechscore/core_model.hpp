#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace speechscore {

using Token = std::uint32_t;

// N x D frame features of one utterance, row-major float32.
class FeatureMatrix {
public:
    // Throws DataError on zero extents, size mismatch or non-finite entries.
    FeatureMatrix(std::string utt_id, std::size_t n_frames, std::size_t dim, std::vector<float> data);

    const std::string& utt_id() const noexcept { return utt_id_; }
    std::size_t n_frames() const noexcept { return n_frames_; }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<const float> row(std::size_t i) const noexcept {
        return std::span<const float>(data_).subspan(i * dim_, dim_);
    }

    bool operator==(const FeatureMatrix&) const = default;

private:
    std::string utt_id_;
    std::size_t n_frames_;
    std::size_t dim_;
    std::vector<float> data_;
};

struct TokenSequence {
    std::string utt_id;
    std::vector<Token> tokens;

    bool operator==(const TokenSequence&) const = default;
};

struct EvalPair {
    std::string utt_id;
    std::string system_id;
    std::filesystem::path gen_path;
    std::filesystem::path ref_path;
    double rating = 0.0;

    bool operator==(const EvalPair&) const = default;
};

// Feature file: "SPFT", u32 version=1, u32 n_frames, u32 dim, u32 reserved=0,
// then n_frames*dim little-endian float32, row-major.
inline constexpr std::size_t kFeatureHeaderBytes = 20;

void write_feature_file(const FeatureMatrix& m, const std::filesystem::path& path);

// utt_id of the result is the file stem.
FeatureMatrix read_feature_file(const std::filesystem::path& path);

// One `<utt_id>\t<tok> <tok> ...` line per sequence.
void write_token_file(std::span<const TokenSequence> seqs, const std::filesystem::path& path);
std::vector<TokenSequence> read_token_file(const std::filesystem::path& path);

// CSV with header utt_id,system_id,gen_path,ref_path,rating (columns in any order).
std::vector<EvalPair> parse_manifest(const std::filesystem::path& path);
void write_manifest(std::span<const EvalPair> pairs, const std::filesystem::path& path);

// Relative manifest paths resolve against `root` when given, else the manifest's directory.
std::filesystem::path resolve_path(const std::filesystem::path& p,
                                   const std::filesystem::path& manifest_path,
                                   const std::filesystem::path& root = {});

// Byte-level helpers shared by the binary formats.
namespace detail {
void put_u32(std::vector<unsigned char>& out, std::uint32_t v);
void put_u64(std::vector<unsigned char>& out, std::uint64_t v);
void put_f32(std::vector<unsigned char>& out, float v);
std::uint32_t get_u32(std::span<const unsigned char> in, std::size_t off);
std::uint64_t get_u64(std::span<const unsigned char> in, std::size_t off);
float get_f32(std::span<const unsigned char> in, std::size_t off);
std::vector<unsigned char> read_all_bytes(const std::filesystem::path& path);
void write_all_bytes(const std::filesystem::path& path, std::span<const unsigned char> bytes);
} // namespace detail

} // namespace speechscore
