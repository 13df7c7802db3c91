#include "speechscore/core_model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <system_error>
#include <unordered_set>

#include "speechscore/errors.hpp"

namespace speechscore {

namespace fs = std::filesystem;

FeatureMatrix::FeatureMatrix(std::string utt_id, std::size_t n_frames, std::size_t dim,
                             std::vector<float> data)
    : utt_id_(std::move(utt_id)), n_frames_(n_frames), dim_(dim), data_(std::move(data)) {
    if (n_frames_ == 0 || dim_ == 0) {
        throw DataError("feature matrix '" + utt_id_ + "' must have n_frames >= 1 and dim >= 1");
    }
    if (data_.size() != n_frames_ * dim_) {
        throw DataError("feature matrix '" + utt_id_ + "': payload size " + std::to_string(data_.size()) +
                        " != " + std::to_string(n_frames_) + " x " + std::to_string(dim_));
    }
    auto bad = std::find_if(data_.begin(), data_.end(), [](float v) { return !std::isfinite(v); });
    if (bad != data_.end()) {
        auto idx = static_cast<std::size_t>(bad - data_.begin());
        throw DataError("feature matrix '" + utt_id_ + "': non-finite entry at frame " +
                        std::to_string(idx / dim_) + ", column " + std::to_string(idx % dim_));
    }
}

namespace detail {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

void put_f32(std::vector<unsigned char>& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

std::uint32_t get_u32(std::span<const unsigned char> in, std::size_t off) {
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(in[off + b]) << (8 * b);
    return v;
}

std::uint64_t get_u64(std::span<const unsigned char> in, std::size_t off) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[off + b]) << (8 * b);
    return v;
}

float get_f32(std::span<const unsigned char> in, std::size_t off) {
    return std::bit_cast<float>(get_u32(in, off));
}

std::vector<unsigned char> read_all_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all_bytes(const fs::path& path, std::span<const unsigned char> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

} // namespace detail

namespace {

constexpr unsigned char kFeatureMagic[4] = {'S', 'P', 'F', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_text(const fs::path& path, const std::string& text) {
    detail::write_all_bytes(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
    auto bytes = detail::read_all_bytes(path);
    return {bytes.begin(), bytes.end()};
}

// Splits on '\n', tolerating a trailing newline and CRLF.
std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = end + 1;
    }
    return lines;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(s.substr(start));
            return out;
        }
        out.push_back(s.substr(start, pos - start));
        start = pos + 1;
    }
}

std::string format_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

void write_feature_file(const FeatureMatrix& m, const fs::path& path) {
    if (m.n_frames() > UINT32_MAX || m.dim() > UINT32_MAX) {
        throw DataError("feature matrix '" + m.utt_id() + "' too large for the feature format");
    }
    for (float v : m.data()) {
        if (!std::isfinite(v)) throw DataError("feature matrix '" + m.utt_id() + "' has a non-finite entry");
    }
    std::vector<unsigned char> bytes;
    bytes.reserve(kFeatureHeaderBytes + m.data().size() * 4);
    bytes.insert(bytes.end(), std::begin(kFeatureMagic), std::end(kFeatureMagic));
    detail::put_u32(bytes, kFeatureVersion);
    detail::put_u32(bytes, static_cast<std::uint32_t>(m.n_frames()));
    detail::put_u32(bytes, static_cast<std::uint32_t>(m.dim()));
    detail::put_u32(bytes, 0);
    for (float v : m.data()) detail::put_f32(bytes, v);
    detail::write_all_bytes(path, bytes);
}

FeatureMatrix read_feature_file(const fs::path& path) {
    const auto bytes = detail::read_all_bytes(path);
    const std::string where = "feature file '" + path.string() + "'";
    if (bytes.size() < kFeatureHeaderBytes) throw FormatError(where + ": shorter than the 20-byte header");
    if (!std::equal(std::begin(kFeatureMagic), std::end(kFeatureMagic), bytes.begin())) {
        throw FormatError(where + ": bad magic (expected SPFT)");
    }
    const std::span<const unsigned char> in(bytes);
    if (auto version = detail::get_u32(in, 4); version != kFeatureVersion) {
        throw FormatError(where + ": unsupported version " + std::to_string(version));
    }
    const std::size_t n_frames = detail::get_u32(in, 8);
    const std::size_t dim = detail::get_u32(in, 12);
    if (detail::get_u32(in, 16) != 0) throw FormatError(where + ": reserved header field is not zero");
    if (n_frames == 0 || dim == 0) throw FormatError(where + ": zero frames or zero dimension");
    const std::size_t expected = kFeatureHeaderBytes + n_frames * dim * 4;
    if (bytes.size() < expected) {
        throw FormatError(where + ": truncated payload (" + std::to_string(bytes.size()) + " bytes, expected " +
                          std::to_string(expected) + ")");
    }
    if (bytes.size() > expected) throw FormatError(where + ": trailing bytes after payload");

    std::vector<float> data(n_frames * dim);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = detail::get_f32(in, kFeatureHeaderBytes + 4 * i);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (!std::isfinite(data[i])) {
            throw DataError(where + ": non-finite entry at frame " + std::to_string(i / dim));
        }
    }
    return FeatureMatrix(path.stem().string(), n_frames, dim, std::move(data));
}

void write_token_file(std::span<const TokenSequence> seqs, const fs::path& path) {
    std::string text;
    for (const auto& s : seqs) {
        if (s.tokens.empty()) throw DataError("token sequence '" + s.utt_id + "' is empty");
        if (s.utt_id.empty() || s.utt_id.find_first_of("\t\n") != std::string::npos) {
            throw DataError("token sequence id '" + s.utt_id + "' is empty or contains a tab/newline");
        }
        text += s.utt_id;
        text += '\t';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            if (i) text += ' ';
            text += std::to_string(s.tokens[i]);
        }
        text += '\n';
    }
    write_text(path, text);
}

std::vector<TokenSequence> read_token_file(const fs::path& path) {
    const auto lines = split_lines(read_text(path));
    std::vector<TokenSequence> out;
    for (std::size_t ln = 0; ln < lines.size(); ++ln) {
        const auto& line = lines[ln];
        const std::size_t lineno = ln + 1;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw FormatError("missing tab separator", lineno);
        TokenSequence seq;
        seq.utt_id = line.substr(0, tab);
        if (seq.utt_id.empty()) throw FormatError("empty utterance id", lineno);
        const char* p = line.data() + tab + 1;
        const char* end = line.data() + line.size();
        while (p < end) {
            if (*p == ' ') {
                ++p;
                continue;
            }
            if (*p == '-') throw FormatError("negative token", lineno);
            Token tok = 0;
            auto [next, ec] = std::from_chars(p, end, tok);
            if (ec != std::errc() || (next != end && *next != ' ')) {
                throw FormatError("token is not a non-negative integer", lineno);
            }
            seq.tokens.push_back(tok);
            p = next;
        }
        if (seq.tokens.empty()) throw FormatError("no tokens for '" + seq.utt_id + "'", lineno);
        out.push_back(std::move(seq));
    }
    return out;
}

std::vector<EvalPair> parse_manifest(const fs::path& path) {
    const auto lines = split_lines(read_text(path));
    if (lines.empty()) throw FormatError("manifest '" + path.string() + "' has no header row");

    static const char* const kColumns[] = {"utt_id", "system_id", "gen_path", "ref_path", "rating"};
    const auto header = split(lines[0], ',');
    std::size_t col[5];
    for (int c = 0; c < 5; ++c) {
        auto it = std::find_if(header.begin(), header.end(), [&](const std::string& h) { return trim(h) == kColumns[c]; });
        if (it == header.end()) throw FormatError(std::string("manifest missing column '") + kColumns[c] + "'", 1);
        col[c] = static_cast<std::size_t>(it - header.begin());
    }

    std::vector<EvalPair> out;
    std::unordered_set<std::string> seen;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        const std::size_t lineno = ln + 1;
        if (trim(lines[ln]).empty()) continue;
        const auto fields = split(lines[ln], ',');
        if (fields.size() != header.size()) {
            throw FormatError("expected " + std::to_string(header.size()) + " fields, got " +
                              std::to_string(fields.size()), lineno);
        }
        EvalPair p;
        p.utt_id = trim(fields[col[0]]);
        p.system_id = trim(fields[col[1]]);
        p.gen_path = trim(fields[col[2]]);
        p.ref_path = trim(fields[col[3]]);
        if (p.utt_id.empty() || p.gen_path.empty() || p.ref_path.empty()) {
            throw FormatError("empty utt_id or path", lineno);
        }
        const std::string rating = trim(fields[col[4]]);
        const char* b = rating.data();
        const char* e = b + rating.size();
        auto [next, ec] = std::from_chars(b, e, p.rating);
        if (ec != std::errc() || next != e) throw FormatError("rating '" + rating + "' is not a number", lineno);
        if (!std::isfinite(p.rating)) throw DataError("line " + std::to_string(lineno) + ": non-finite rating");
        if (!seen.insert(p.utt_id).second) {
            throw DataError("line " + std::to_string(lineno) + ": duplicate utt_id '" + p.utt_id + "'");
        }
        out.push_back(std::move(p));
    }
    return out;
}

void write_manifest(std::span<const EvalPair> pairs, const fs::path& path) {
    std::ostringstream os;
    os << "utt_id,system_id,gen_path,ref_path,rating\n";
    for (const auto& p : pairs) {
        os << p.utt_id << ',' << p.system_id << ',' << p.gen_path.generic_string() << ','
           << p.ref_path.generic_string() << ',' << format_double(p.rating) << '\n';
    }
    write_text(path, os.str());
}

fs::path resolve_path(const fs::path& p, const fs::path& manifest_path, const fs::path& root) {
    if (p.is_absolute()) return p;
    if (!root.empty()) return root / p;
    return manifest_path.parent_path() / p;
}

} // namespace speechscore
