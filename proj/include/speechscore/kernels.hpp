#pragma once

// Data-parallel inner loops shared by the metrics and the quantizer.
//
// Every kernel has a tiled OpenMP version and a naive serial version in
// `reference`. Both accumulate each output entry over the feature dimension in
// increasing index order, so the tiled kernel's result does not depend on the
// thread count, and it agrees with the reference up to FMA contraction.

#include <cstddef>
#include <span>
#include <vector>

#include "speechscore/core_model.hpp"

namespace speechscore::kernels {

// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    std::span<const double> row(std::size_t i) const { return std::span(data).subspan(i * cols, cols); }
};

// Widens to double.
Matrix to_double(const FeatureMatrix& m);

// Scales each row to unit L2 norm. Zero-norm rows stay all-zero; their indices
// are appended to `zero_rows` when it is non-null.
Matrix unit_rows(const FeatureMatrix& m, std::vector<std::size_t>* zero_rows = nullptr);

// out(i, j) = <a_i, b_j> for unit rows, clamped to [-1, 1].
Matrix cosine_matrix(const Matrix& gen_unit, const Matrix& ref_unit);

// Index of the nearest centroid by squared Euclidean distance (lowest index on
// exact ties) and that distance, for every point.
void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<Token> labels,
                      std::span<double> dist2);

// Thread count used by the kernels; 0 restores the OpenMP default.
void set_num_threads(int n);
int num_threads();

namespace reference {

Matrix cosine_matrix(const Matrix& gen_unit, const Matrix& ref_unit);

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<Token> labels,
                      std::span<double> dist2);

} // namespace reference

} // namespace speechscore::kernels
