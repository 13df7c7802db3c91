#include "speechscore/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "speechscore/errors.hpp"
#include "speechscore/kernels.hpp"

namespace speechscore {

namespace {

using kernels::Matrix;

constexpr unsigned char kModelMagic[4] = {'S', 'P', 'K', 'M'};
constexpr std::uint32_t kModelVersion = 1;

// mt19937_64 output is fixed by the standard; the distributions are not, so
// the mappings to ranges are done here.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }
double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

Matrix gather_frames(std::span<const FeatureMatrix> frames, const KMeansOptions& opts) {
    const std::size_t dim = frames.front().dim();
    std::size_t total = 0;
    for (const auto& m : frames) {
        if (m.dim() != dim) throw DimensionError("training features have mixed dimensions");
        total += m.n_frames();
    }
    if (total < opts.k) {
        throw DataError("k-means needs at least k=" + std::to_string(opts.k) + " frames, got " + std::to_string(total));
    }

    std::vector<std::size_t> keep;
    if (opts.max_train_frames && *opts.max_train_frames < total) {
        if (*opts.max_train_frames < opts.k) throw DataError("max_train_frames is smaller than k");
        // Partial Fisher-Yates, then restore corpus order.
        std::vector<std::size_t> idx(total);
        std::iota(idx.begin(), idx.end(), 0);
        std::mt19937_64 rng(static_cast<std::uint64_t>(opts.seed) ^ 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = 0; i < *opts.max_train_frames; ++i) {
            std::swap(idx[i], idx[i + uniform_index(rng, total - i)]);
        }
        keep.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(*opts.max_train_frames));
        std::sort(keep.begin(), keep.end());
    }

    Matrix out(keep.empty() ? total : keep.size(), dim);
    std::size_t row = 0, flat = 0, next = 0;
    for (const auto& m : frames) {
        for (std::size_t i = 0; i < m.n_frames(); ++i, ++flat) {
            if (!keep.empty()) {
                if (next == keep.size() || keep[next] != flat) continue;
                ++next;
            }
            const auto src = m.row(i);
            std::copy(src.begin(), src.end(), out.data.begin() + static_cast<std::ptrdiff_t>(row * dim));
            ++row;
        }
    }
    return out;
}

Matrix kmeanspp_init(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = x.rows, dim = x.cols;
    Matrix c(k, dim);
    auto set_center = [&](std::size_t ci, std::size_t pi) {
        std::copy(x.row(pi).begin(), x.row(pi).end(), c.data.begin() + static_cast<std::ptrdiff_t>(ci * dim));
    };
    set_center(0, uniform_index(rng, n));
    std::vector<double> nearest(n);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = sq_dist(x.row(i), c.row(0));

    for (std::size_t ci = 1; ci < k; ++ci) {
        double total = 0.0;
        for (double v : nearest) total += v;
        std::size_t pick = n - 1;
        if (total > 0.0) {
            const double target = uniform_unit(rng) * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += nearest[i];
                if (cum > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = uniform_index(rng, n);
        }
        set_center(ci, pick);
        const auto newc = c.row(ci);
#pragma omp parallel for schedule(static) num_threads(kernels::num_threads())
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            const auto ui = static_cast<std::size_t>(i);
            nearest[ui] = std::min(nearest[ui], sq_dist(x.row(ui), newc));
        }
    }
    return c;
}

void recompute_mean(const Matrix& x, std::span<const Token> labels, std::size_t cluster, Matrix& c) {
    const std::size_t dim = x.cols;
    std::vector<double> sum(dim, 0.0);
    std::size_t count = 0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        if (labels[i] != cluster) continue;
        for (std::size_t d = 0; d < dim; ++d) sum[d] += x(i, d);
        ++count;
    }
    for (std::size_t d = 0; d < dim; ++d) c(cluster, d) = sum[d] / static_cast<double>(count);
}

// Centroid update in point order, then empty-cluster repair.
void update_centroids(const Matrix& x, std::vector<Token>& labels, Matrix& c) {
    const std::size_t n = x.rows, k = c.rows, dim = x.cols;
    Matrix sum(k, dim);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double* s = sum.data.data() + labels[i] * dim;
        const double* xi = x.data.data() + i * dim;
        for (std::size_t d = 0; d < dim; ++d) s[d] += xi[d];
        ++count[labels[i]];
    }
    bool any_empty = false;
    for (std::size_t ci = 0; ci < k; ++ci) {
        if (count[ci] == 0) {
            any_empty = true;
            continue;
        }
        for (std::size_t d = 0; d < dim; ++d) c(ci, d) = sum(ci, d) / static_cast<double>(count[ci]);
    }
    if (!any_empty) return;

    std::vector<double> dist(n);
    for (std::size_t i = 0; i < n; ++i) dist[i] = sq_dist(x.row(i), c.row(labels[i]));
    for (std::size_t ci = 0; ci < k; ++ci) {
        if (count[ci] != 0) continue;
        std::size_t far = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (count[labels[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
        }
        if (far == n) break;  // unreachable while n >= k
        const Token donor = labels[far];
        labels[far] = static_cast<Token>(ci);
        --count[donor];
        count[ci] = 1;
        std::copy(x.row(far).begin(), x.row(far).end(), c.data.begin() + static_cast<std::ptrdiff_t>(ci * dim));
        dist[far] = 0.0;
        recompute_mean(x, labels, donor, c);
        for (std::size_t i = 0; i < n; ++i) {
            if (labels[i] == donor) dist[i] = sq_dist(x.row(i), c.row(donor));
        }
    }
}

double assign_all(const Matrix& x, const Matrix& c, std::vector<Token>& labels, std::vector<double>& d2) {
    kernels::nearest_centroid(x, c, labels, d2);
    double sse = 0.0;
    for (double v : d2) sse += v;
    return sse;
}

} // namespace

KMeansModel train_kmeans(std::span<const FeatureMatrix> frames, const KMeansOptions& opts) {
    if (opts.k == 0) throw DataError("k must be >= 1");
    if (frames.empty()) throw DataError("k-means needs at least one feature matrix");
    if (opts.max_iters == 0) throw DataError("max_iters must be >= 1");
    if (!(opts.rel_tol >= 0.0)) throw DataError("rel_tol must be >= 0");

    const Matrix x = gather_frames(frames, opts);
    std::mt19937_64 rng(static_cast<std::uint64_t>(opts.seed));
    Matrix c = kmeanspp_init(x, opts.k, rng);

    std::vector<Token> labels(x.rows);
    std::vector<double> d2(x.rows);
    KMeansModel model;
    double sse = assign_all(x, c, labels, d2);
    model.sse_history.push_back(sse);

    for (std::size_t it = 1; it <= opts.max_iters && sse > 0.0; ++it) {
        update_centroids(x, labels, c);
        const double prev = sse;
        sse = assign_all(x, c, labels, d2);
        model.sse_history.push_back(sse);
        model.iters_run = it;
        if (prev - sse < opts.rel_tol * prev) break;
    }

    model.k = opts.k;
    model.dim = x.cols;
    model.seed = opts.seed;
    model.final_sse = sse;
    model.centroids.resize(c.data.size());
    std::transform(c.data.begin(), c.data.end(), model.centroids.begin(), [](double v) { return static_cast<float>(v); });
    return model;
}

TokenSequence assign_tokens(const KMeansModel& model, const FeatureMatrix& m) {
    if (m.dim() != model.dim) {
        throw DimensionError("features '" + m.utt_id() + "' have dim " + std::to_string(m.dim()) +
                             ", codebook expects " + std::to_string(model.dim));
    }
    Matrix c(model.k, model.dim);
    std::copy(model.centroids.begin(), model.centroids.end(), c.data.begin());
    const Matrix x = kernels::to_double(m);
    TokenSequence out{m.utt_id(), std::vector<Token>(m.n_frames())};
    std::vector<double> d2(m.n_frames());
    kernels::nearest_centroid(x, c, out.tokens, d2);
    return out;
}

TokenSequence collapse_repeats(const TokenSequence& seq) {
    if (seq.tokens.empty()) throw DataError("cannot collapse an empty token sequence '" + seq.utt_id + "'");
    TokenSequence out{seq.utt_id, {}};
    out.tokens.reserve(seq.tokens.size());
    for (Token t : seq.tokens) {
        if (out.tokens.empty() || out.tokens.back() != t) out.tokens.push_back(t);
    }
    return out;
}

namespace {

std::vector<unsigned char> serialize_model(const KMeansModel& model) {
    if (model.k == 0 || model.dim == 0 || model.centroids.size() != model.k * model.dim) {
        throw DataError("k-means model has inconsistent shape");
    }
    for (float v : model.centroids) {
        if (!std::isfinite(v)) throw DataError("k-means model has a non-finite centroid");
    }
    std::vector<unsigned char> bytes(std::begin(kModelMagic), std::end(kModelMagic));
    detail::put_u32(bytes, kModelVersion);
    detail::put_u32(bytes, static_cast<std::uint32_t>(model.k));
    detail::put_u32(bytes, static_cast<std::uint32_t>(model.dim));
    detail::put_u64(bytes, static_cast<std::uint64_t>(model.seed));
    for (float v : model.centroids) detail::put_f32(bytes, v);
    return bytes;
}

} // namespace

void write_kmeans_model(const KMeansModel& model, const std::filesystem::path& path) {
    detail::write_all_bytes(path, serialize_model(model));
}

KMeansModel read_kmeans_model(const std::filesystem::path& path) {
    const auto bytes = detail::read_all_bytes(path);
    const std::string where = "k-means model '" + path.string() + "'";
    constexpr std::size_t header = 24;
    if (bytes.size() < header) throw FormatError(where + ": shorter than the 24-byte header");
    if (!std::equal(std::begin(kModelMagic), std::end(kModelMagic), bytes.begin())) {
        throw FormatError(where + ": bad magic (expected SPKM)");
    }
    const std::span<const unsigned char> in(bytes);
    if (detail::get_u32(in, 4) != kModelVersion) throw FormatError(where + ": unsupported version");
    KMeansModel m;
    m.k = detail::get_u32(in, 8);
    m.dim = detail::get_u32(in, 12);
    m.seed = static_cast<std::int64_t>(detail::get_u64(in, 16));
    if (m.k == 0 || m.dim == 0) throw FormatError(where + ": zero k or dim");
    if (bytes.size() != header + m.k * m.dim * 4) throw FormatError(where + ": payload size does not match k x dim");
    m.centroids.resize(m.k * m.dim);
    for (std::size_t i = 0; i < m.centroids.size(); ++i) {
        m.centroids[i] = detail::get_f32(in, header + 4 * i);
        if (!std::isfinite(m.centroids[i])) throw DataError(where + ": non-finite centroid value");
    }
    return m;
}

std::string model_fingerprint(const KMeansModel& model) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : serialize_model(model)) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace speechscore
