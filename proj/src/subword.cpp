#include "speechscore/subword.hpp"

#include <cstdint>
#include <set>
#include <tuple>
#include <unordered_map>

#include "speechscore/errors.hpp"
#include "speechscore/score_report.hpp"

namespace speechscore {

namespace {

using PairKey = std::uint64_t;

PairKey key(Token l, Token r) { return (static_cast<PairKey>(l) << 32) | r; }
Token left(PairKey k) { return static_cast<Token>(k >> 32); }
Token right(PairKey k) { return static_cast<Token>(k & 0xffffffffu); }

// Replaces non-overlapping (l, r) occurrences left to right.
void merge_pass(std::vector<Token>& s, Token l, Token r, Token merged) {
    std::size_t w = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i] == l && s[i + 1] == r) {
            s[w++] = merged;
            ++i;
        } else {
            s[w++] = s[i];
        }
    }
    s.resize(w);
}

// Pair counts with an ordered index for "most frequent, then smallest pair".
class PairStats {
public:
    void add(PairKey k, std::int64_t delta) {
        auto& c = counts_[k];
        if (c > 0) order_.erase({-c, left(k), right(k)});
        c += delta;
        if (c > 0) order_.insert({-c, left(k), right(k)});
    }

    // (count, pair) of the best pair, count 0 when empty.
    std::pair<std::int64_t, PairKey> best() const {
        if (order_.empty()) return {0, 0};
        const auto& [neg, l, r] = *order_.begin();
        return {-neg, key(l, r)};
    }

private:
    std::unordered_map<PairKey, std::int64_t> counts_;
    std::set<std::tuple<std::int64_t, Token, Token>> order_;
};

void check_base(const TokenSequence& s, std::size_t base_vocab) {
    for (Token t : s.tokens) {
        if (t >= base_vocab) {
            throw DataError("token " + std::to_string(t) + " in '" + s.utt_id + "' is outside the base vocabulary of " +
                            std::to_string(base_vocab));
        }
    }
}

} // namespace

BPEModel train_bpe(std::span<const TokenSequence> corpus, std::size_t base_vocab, std::size_t vocab_size) {
    if (corpus.empty()) throw DataError("BPE training needs a non-empty corpus");
    if (vocab_size < base_vocab) throw DataError("vocab_size must be >= base vocabulary size");
    if (vocab_size > UINT32_MAX) throw DataError("vocab_size does not fit a 32-bit token");

    std::vector<std::vector<Token>> seqs;
    seqs.reserve(corpus.size());
    for (const auto& s : corpus) {
        check_base(s, base_vocab);
        seqs.push_back(s.tokens);
    }

    PairStats stats;
    std::unordered_map<PairKey, std::vector<std::size_t>> where;
    auto account = [&](std::size_t si, std::int64_t sign) {
        const auto& s = seqs[si];
        for (std::size_t i = 0; i + 1 < s.size(); ++i) {
            const PairKey k = key(s[i], s[i + 1]);
            stats.add(k, sign);
            if (sign > 0) {
                auto& list = where[k];
                if (list.empty() || list.back() != si) list.push_back(si);
            }
        }
    };
    for (std::size_t si = 0; si < seqs.size(); ++si) account(si, +1);

    BPEModel model;
    model.base_vocab = base_vocab;
    std::vector<std::size_t> visited(seqs.size(), SIZE_MAX);
    while (model.vocab_size() < vocab_size) {
        const auto [count, best] = stats.best();
        if (count < 2) break;
        const Token merged = static_cast<Token>(model.vocab_size());
        const std::size_t stamp = model.merges.size();
        model.merges.emplace_back(left(best), right(best));

        auto touched = std::move(where[best]);
        where.erase(best);
        for (std::size_t si : touched) {
            if (visited[si] == stamp) continue;
            visited[si] = stamp;
            account(si, -1);
            merge_pass(seqs[si], left(best), right(best), merged);
            account(si, +1);
        }
    }
    return model;
}

TokenSequence bpe_encode(const BPEModel& model, const TokenSequence& seq) {
    check_base(seq, model.base_vocab);
    TokenSequence out = seq;
    for (std::size_t i = 0; i < model.merges.size() && out.tokens.size() > 1; ++i) {
        const auto [l, r] = model.merges[i];
        merge_pass(out.tokens, l, r, static_cast<Token>(model.base_vocab + i));
    }
    return out;
}

TokenSequence bpe_decode(const BPEModel& model, const TokenSequence& seq) {
    TokenSequence out{seq.utt_id, {}};
    std::vector<Token> stack;
    for (Token t : seq.tokens) {
        stack.push_back(t);
        while (!stack.empty()) {
            const Token s = stack.back();
            stack.pop_back();
            if (s < model.base_vocab) {
                out.tokens.push_back(s);
            } else if (s < model.vocab_size()) {
                const auto [l, r] = model.merges[s - model.base_vocab];
                stack.push_back(r);
                stack.push_back(l);
            } else {
                throw DataError("symbol " + std::to_string(s) + " is outside the BPE vocabulary");
            }
        }
    }
    return out;
}

void write_bpe_model(const BPEModel& model, const std::filesystem::path& path) {
    Json j;
    j["base_vocab"] = model.base_vocab;
    Json merges = Json::array();
    for (const auto& [l, r] : model.merges) merges.push_back({l, r});
    j["merges"] = std::move(merges);
    write_json_file(j, path);
}

BPEModel read_bpe_model(const std::filesystem::path& path) {
    const Json j = read_json_file(path);
    BPEModel m;
    try {
        m.base_vocab = j.at("base_vocab").get<std::size_t>();
        for (const auto& pr : j.at("merges")) {
            if (!pr.is_array() || pr.size() != 2) throw FormatError("BPE merge entries must be [left, right] pairs");
            const auto l = pr[0].get<Token>(), r = pr[1].get<Token>();
            const std::size_t next = m.vocab_size();
            if (l >= next || r >= next) {
                throw FormatError("BPE merge [" + std::to_string(l) + ", " + std::to_string(r) +
                                  "] refers to a symbol not yet defined");
            }
            m.merges.emplace_back(l, r);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("BPE model '" + path.string() + "': " + e.what());
    }
    return m;
}

} // namespace speechscore
