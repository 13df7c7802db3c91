#include "speechscore/eval_harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <unordered_map>

#include "speechscore/errors.hpp"

namespace speechscore {

std::string to_string(CorrelationLevel l) { return l == CorrelationLevel::utterance ? "utterance" : "system"; }

CorrelationLevel parse_level(const std::string& s) {
    if (s == "utterance") return CorrelationLevel::utterance;
    if (s == "system") return CorrelationLevel::system;
    throw DataError("unknown correlation level '" + s + "'");
}

std::string to_string(PoolMode m) { return m == PoolMode::single ? "single" : "per_pair"; }

namespace {

void check_inputs(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw DimensionError("correlation inputs differ in length (" + std::to_string(x.size()) + " vs " +
                             std::to_string(y.size()) + ")");
    }
    if (x.size() < 3) {
        throw DegenerateInputError("correlation needs at least 3 points, got " + std::to_string(x.size()));
    }
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite)) {
        throw DataError("correlation inputs must be finite");
    }
}

} // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateInputError("correlation of a constant input is undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
        const double r = (static_cast<double>(i + j) + 2.0) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = r;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    check_inputs(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

namespace {

std::unordered_map<std::string, const EvalPair*> index_manifest(std::span<const EvalPair> manifest) {
    std::unordered_map<std::string, const EvalPair*> idx;
    for (const auto& p : manifest) idx.emplace(p.utt_id, &p);
    return idx;
}

const EvalPair& join(const std::unordered_map<std::string, const EvalPair*>& idx, const std::string& utt) {
    auto it = idx.find(utt);
    if (it == idx.end()) throw JoinError("scored utterance '" + utt + "' is not in the manifest");
    return *it->second;
}

} // namespace

SystemMeans aggregate_system(const ScoreReport& report, std::span<const EvalPair> manifest) {
    const auto idx = index_manifest(manifest);
    struct Acc {
        double score = 0.0, rating = 0.0;
        std::size_t n = 0;
    };
    std::map<std::string, Acc> groups;
    for (const auto& [utt, score] : report.scores) {
        const auto& pair = join(idx, utt);
        auto& g = groups[pair.system_id];
        g.score += score;
        g.rating += pair.rating;
        ++g.n;
    }
    SystemMeans out;
    for (const auto& [sys, g] : groups) {
        out.systems.push_back(sys);
        out.scores.push_back(g.score / static_cast<double>(g.n));
        out.ratings.push_back(g.rating / static_cast<double>(g.n));
    }
    return out;
}

CorrelationResult correlate(const ScoreReport& report, std::span<const EvalPair> manifest, CorrelationLevel level) {
    std::vector<double> scores, ratings;
    if (level == CorrelationLevel::utterance) {
        const auto idx = index_manifest(manifest);
        for (const auto& [utt, score] : report.scores) {
            scores.push_back(score);
            ratings.push_back(join(idx, utt).rating);
        }
    } else {
        auto means = aggregate_system(report, manifest);
        scores = std::move(means.scores);
        ratings = std::move(means.ratings);
    }
    if (scores.size() < 3) {
        throw DegenerateInputError(to_string(level) + "-level correlation needs at least 3 points, got " +
                                   std::to_string(scores.size()));
    }
    CorrelationResult r;
    r.level = level;
    r.n = scores.size();
    r.lcc = pearson(scores, ratings);
    r.srcc = spearman(scores, ratings);
    r.lcc_abs = std::abs(r.lcc);
    r.srcc_abs = std::abs(r.srcc);
    return r;
}

Json correlation_summary(const CorrelationResult& result, const ScoreReport& report) {
    Json j;
    j["metric"] = report.metric_name;
    j["level"] = to_string(result.level);
    j["n"] = result.n;
    j["lcc"] = result.lcc;
    j["srcc"] = result.srcc;
    j["lcc_abs"] = result.lcc_abs;
    j["srcc_abs"] = result.srcc_abs;
    j["config"] = report.config;
    return j;
}

std::vector<EvalPair> make_unaligned_manifest(std::span<const EvalPair> manifest,
                                              std::span<const std::filesystem::path> pool, std::uint64_t seed,
                                              PoolMode mode) {
    if (pool.empty()) throw DataError("reference pool is empty");
    std::mt19937_64 rng(seed);
    auto draw = [&] { return pool[static_cast<std::size_t>(rng() % pool.size())]; };
    std::vector<EvalPair> out(manifest.begin(), manifest.end());
    const std::filesystem::path shared = draw();
    for (auto& p : out) p.ref_path = mode == PoolMode::single ? shared : draw();
    return out;
}

} // namespace speechscore
