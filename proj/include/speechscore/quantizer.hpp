#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "speechscore/core_model.hpp"

namespace speechscore {

// k x dim codebook. Training statistics are not persisted.
struct KMeansModel {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<float> centroids;  // row-major k x dim
    std::int64_t seed = 0;
    std::size_t iters_run = 0;
    double final_sse = 0.0;
    std::vector<double> sse_history;  // SSE after the initial assignment and after every Lloyd update

    std::span<const float> centroid(std::size_t c) const {
        return std::span<const float>(centroids).subspan(c * dim, dim);
    }
};

struct KMeansOptions {
    std::size_t k = 0;
    std::int64_t seed = 0;
    std::size_t max_iters = 100;
    double rel_tol = 1e-6;
    std::optional<std::size_t> max_train_frames;
};

// Lloyd's algorithm from a seeded k-means++ start. Stops when the relative SSE
// improvement drops below rel_tol, SSE reaches 0, or after max_iters updates.
// A cluster left empty is re-seeded with the point farthest from its assigned
// centroid.
KMeansModel train_kmeans(std::span<const FeatureMatrix> frames, const KMeansOptions& opts);

// Nearest centroid per frame by squared Euclidean distance, ties to the lower index.
TokenSequence assign_tokens(const KMeansModel& model, const FeatureMatrix& m);

// Replaces every run of equal adjacent tokens by one token.
TokenSequence collapse_repeats(const TokenSequence& seq);

// "SPKM", u32 version=1, u32 k, u32 dim, i64 seed, k*dim float32; little-endian.
void write_kmeans_model(const KMeansModel& model, const std::filesystem::path& path);
KMeansModel read_kmeans_model(const std::filesystem::path& path);

// FNV-1a 64 of the serialized model, as 16 hex digits.
std::string model_fingerprint(const KMeansModel& model);

} // namespace speechscore
