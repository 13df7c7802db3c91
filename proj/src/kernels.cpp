#include "speechscore/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "speechscore/errors.hpp"

namespace speechscore::kernels {

namespace {

constexpr std::size_t kRowTile = 4;   // gen rows (or points) per micro-tile
constexpr std::size_t kColTile = 16;  // ref rows (or centroids) per packed panel
constexpr std::size_t kRowChunk = 64; // rows per parallel work item
constexpr std::size_t kBlockBytes = std::size_t{1} << 20;  // packed panels kept hot in L2

// Eight doubles; GCC/Clang lower this to whatever vector width the target has.
using V8 = double __attribute__((vector_size(64)));
constexpr std::size_t kLanes = 8;
static_assert(kColTile == 2 * kLanes);

inline V8 load8(const double* p) {
    V8 v;
    std::memcpy(&v, p, sizeof v);
    return v;
}

inline void store8(double* p, V8 v) { std::memcpy(p, &v, sizeof v); }

int g_threads = 0;

int thread_count() {
#ifdef _OPENMP
    return g_threads > 0 ? g_threads : omp_get_max_threads();
#else
    return 1;
#endif
}

// Packs `m` transposed into panels of kColTile rows: panel p stores
// m(p*T + b, d) at [p][d][b]. Rows past the end are zero.
std::vector<double> pack_panels(const Matrix& m) {
    const std::size_t panels = (m.rows + kColTile - 1) / kColTile;
    std::vector<double> packed(panels * m.cols * kColTile, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const std::size_t p = r / kColTile, b = r % kColTile;
        double* dst = packed.data() + p * m.cols * kColTile + b;
        for (std::size_t d = 0; d < m.cols; ++d) dst[d * kColTile] = m(r, d);
    }
    return packed;
}

// Panels per cache block, at least one.
std::size_t panels_per_block(std::size_t dim) {
    return std::max<std::size_t>(1, kBlockBytes / (std::max<std::size_t>(dim, 1) * kColTile * sizeof(double)));
}

inline double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

// Work items are (panel block, row chunk) pairs. Every output entry is produced
// by exactly one item with a sum over d in increasing order, so results do not
// depend on the thread count.
template <class Tile>
void for_each_tile(std::size_t n_rows, std::size_t n_panels, std::size_t dim, Tile&& tile) {
    const std::size_t per_block = panels_per_block(dim);
    const std::size_t n_blocks = (n_panels + per_block - 1) / per_block;
    const std::size_t n_chunks = (n_rows + kRowChunk - 1) / kRowChunk;
    const auto items = static_cast<std::ptrdiff_t>(n_blocks * n_chunks);
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t w = 0; w < items; ++w) {
        const std::size_t blk = static_cast<std::size_t>(w) / n_chunks, chunk = static_cast<std::size_t>(w) % n_chunks;
        const std::size_t p0 = blk * per_block, p1 = std::min(n_panels, p0 + per_block);
        const std::size_t r0 = chunk * kRowChunk, r1 = std::min(n_rows, r0 + kRowChunk);
        for (std::size_t i0 = r0; i0 < r1; i0 += kRowTile)
            for (std::size_t p = p0; p < p1; ++p) tile(i0, std::min(kRowTile, r1 - i0), p);
    }
}

} // namespace

void set_num_threads(int n) { g_threads = n; }
int num_threads() { return thread_count(); }

Matrix to_double(const FeatureMatrix& m) {
    Matrix out(m.n_frames(), m.dim());
    std::copy(m.data().begin(), m.data().end(), out.data.begin());
    return out;
}

Matrix unit_rows(const FeatureMatrix& m, std::vector<std::size_t>* zero_rows) {
    Matrix out = to_double(m);
    for (std::size_t i = 0; i < out.rows; ++i) {
        double ss = 0.0;
        for (double v : out.row(i)) ss += v * v;
        if (ss == 0.0) {
            if (zero_rows) zero_rows->push_back(i);
            continue;
        }
        const double inv = 1.0 / std::sqrt(ss);
        double* r = out.data.data() + i * out.cols;
        for (std::size_t d = 0; d < out.cols; ++d) r[d] *= inv;
    }
    return out;
}

Matrix cosine_matrix(const Matrix& gen, const Matrix& ref) {
    if (gen.cols != ref.cols) throw DimensionError("cosine_matrix: dimension mismatch");
    const std::size_t n = gen.rows, m = ref.rows, dim = gen.cols;
    Matrix out(n, m);
    const std::vector<double> panels = pack_panels(ref);
    const std::size_t n_panels = (m + kColTile - 1) / kColTile;

    for_each_tile(n, n_panels, dim, [&](std::size_t i0, std::size_t in, std::size_t p) {
        const double* panel = panels.data() + p * dim * kColTile;
        const double* g[kRowTile];
        for (std::size_t a = 0; a < kRowTile; ++a) g[a] = gen.data.data() + (i0 + std::min(a, in - 1)) * dim;
        V8 acc[kRowTile][2] = {};
        for (std::size_t d = 0; d < dim; ++d) {
            const V8 c0 = load8(panel + d * kColTile), c1 = load8(panel + d * kColTile + kLanes);
#pragma GCC unroll 4
            for (std::size_t a = 0; a < kRowTile; ++a) {
                const double gv = g[a][d];
                acc[a][0] += gv * c0;
                acc[a][1] += gv * c1;
            }
        }
        const std::size_t j0 = p * kColTile, jn = std::min(kColTile, m - j0);
        for (std::size_t a = 0; a < in; ++a) {
            double tmp[kColTile];
            store8(tmp, acc[a][0]);
            store8(tmp + kLanes, acc[a][1]);
            for (std::size_t b = 0; b < jn; ++b) out(i0 + a, j0 + b) = clamp_unit(tmp[b]);
        }
    });
    return out;
}

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<Token> labels,
                      std::span<double> dist2) {
    if (points.cols != centroids.cols) throw DimensionError("nearest_centroid: dimension mismatch");
    if (labels.size() != points.rows || dist2.size() != points.rows) {
        throw DimensionError("nearest_centroid: output size mismatch");
    }
    const std::size_t n = points.rows, k = centroids.rows, dim = points.cols;
    const std::vector<double> panels = pack_panels(centroids);
    const std::size_t n_panels = (k + kColTile - 1) / kColTile;
    std::fill(dist2.begin(), dist2.end(), std::numeric_limits<double>::infinity());
    std::fill(labels.begin(), labels.end(), Token{0});

    // Panels of one row chunk are visited in increasing order across blocks, and
    // only a strictly smaller distance replaces the best, so ties keep the lowest index.
    for_each_tile(n, n_panels, dim, [&](std::size_t i0, std::size_t in, std::size_t p) {
        const double* panel = panels.data() + p * dim * kColTile;
        const double* x[kRowTile];
        for (std::size_t a = 0; a < kRowTile; ++a) x[a] = points.data.data() + (i0 + std::min(a, in - 1)) * dim;
        V8 acc[kRowTile][2] = {};
        for (std::size_t d = 0; d < dim; ++d) {
            const V8 c0 = load8(panel + d * kColTile), c1 = load8(panel + d * kColTile + kLanes);
#pragma GCC unroll 4
            for (std::size_t a = 0; a < kRowTile; ++a) {
                const double xv = x[a][d];
                const V8 e0 = xv - c0, e1 = xv - c1;
                acc[a][0] += e0 * e0;
                acc[a][1] += e1 * e1;
            }
        }
        const std::size_t c0 = p * kColTile, cn = std::min(kColTile, k - c0);
        for (std::size_t a = 0; a < in; ++a) {
            double tmp[kColTile];
            store8(tmp, acc[a][0]);
            store8(tmp + kLanes, acc[a][1]);
            double& best = dist2[i0 + a];
            Token& best_c = labels[i0 + a];
            for (std::size_t b = 0; b < cn; ++b) {
                if (tmp[b] < best) {
                    best = tmp[b];
                    best_c = static_cast<Token>(c0 + b);
                }
            }
        }
    });
}

namespace reference {

Matrix cosine_matrix(const Matrix& gen, const Matrix& ref) {
    if (gen.cols != ref.cols) throw DimensionError("cosine_matrix: dimension mismatch");
    Matrix out(gen.rows, ref.rows);
    for (std::size_t i = 0; i < gen.rows; ++i) {
        for (std::size_t j = 0; j < ref.rows; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < gen.cols; ++d) s += gen(i, d) * ref(j, d);
            out(i, j) = clamp_unit(s);
        }
    }
    return out;
}

void nearest_centroid(const Matrix& points, const Matrix& centroids, std::span<Token> labels,
                      std::span<double> dist2) {
    if (points.cols != centroids.cols) throw DimensionError("nearest_centroid: dimension mismatch");
    for (std::size_t i = 0; i < points.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        Token best_c = 0;
        for (std::size_t c = 0; c < centroids.rows; ++c) {
            double s = 0.0;
            for (std::size_t d = 0; d < points.cols; ++d) {
                const double diff = points(i, d) - centroids(c, d);
                s += diff * diff;
            }
            if (s < best) {
                best = s;
                best_c = static_cast<Token>(c);
            }
        }
        labels[i] = best_c;
        dist2[i] = best;
    }
}

} // namespace reference

} // namespace speechscore::kernels
