#include "speechscore/cli.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>

#include <CLI11.hpp>

#include "speechscore/core_model.hpp"
#include "speechscore/errors.hpp"
#include "speechscore/eval_harness.hpp"
#include "speechscore/parallel.hpp"
#include "speechscore/quantizer.hpp"
#include "speechscore/subword.hpp"

namespace speechscore::cli {

namespace fs = std::filesystem;

namespace {

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::bertscore: return "speech_bert_score";
        case Metric::bleu: return "speech_bleu";
        case Metric::tokdist: return "speech_token_distance";
    }
    return "?";
}

std::map<std::string, TokenSequence> index_tokens(const fs::path& path) {
    std::map<std::string, TokenSequence> out;
    for (auto& s : read_token_file(path)) {
        const std::string id = s.utt_id;
        if (!out.emplace(id, std::move(s)).second) {
            throw DataError("token file '" + path.string() + "' lists '" + id + "' twice");
        }
    }
    return out;
}

const TokenSequence& lookup(const std::map<std::string, TokenSequence>& tokens, const std::string& utt,
                            const char* side) {
    auto it = tokens.find(utt);
    if (it == tokens.end()) throw DataError(std::string(side) + " token file has no entry for '" + utt + "'");
    return it->second;
}

// Where token sequences come from for one scoring run.
struct TokenSource {
    std::optional<KMeansModel> kmeans;
    std::map<std::string, TokenSequence> gen;
    std::map<std::string, TokenSequence> ref;
    bool from_files = false;

    bool available() const { return kmeans.has_value() || from_files; }

    std::string describe() const {
        if (from_files) return "token_files";
        if (kmeans) return "kmeans";
        return "none";
    }
};

TokenSource make_token_source(const ScoreRequest& req) {
    TokenSource src;
    const bool have_files = !req.tokens_gen.empty() || !req.tokens_ref.empty();
    if (have_files && (req.tokens_gen.empty() || req.tokens_ref.empty())) {
        throw UsageError("--tokens-gen and --tokens-ref must be given together");
    }
    if (have_files && !req.kmeans.empty()) throw UsageError("give either --kmeans or --tokens-gen/--tokens-ref, not both");
    if (have_files) {
        src.from_files = true;
        src.gen = index_tokens(req.tokens_gen);
        src.ref = index_tokens(req.tokens_ref);
    } else if (!req.kmeans.empty()) {
        src.kmeans = read_kmeans_model(req.kmeans);
    }
    return src;
}

struct PairResult {
    double score = 0.0;
    std::size_t edit_distance = 0;
};

} // namespace

ScoreReport score_manifest(const ScoreRequest& req) {
    if (req.metric == Metric::bertscore && req.bert.weighting != Weighting::none && req.weight_corpus.empty()) {
        throw UsageError("--weighting df|idf requires --weight-corpus <txt>");
    }
    const auto manifest = parse_manifest(req.manifest);
    const TokenSource tokens = make_token_source(req);
    const bool needs_tokens = req.metric != Metric::bertscore || req.bert.weighting != Weighting::none;
    if (needs_tokens && !tokens.available()) {
        throw UsageError("this metric needs tokens: pass --kmeans <spkm> or --tokens-gen/--tokens-ref");
    }

    BertScoreConfig bert = req.bert;
    if (req.metric == Metric::bertscore && bert.weighting != Weighting::none) {
        const auto corpus = read_token_file(req.weight_corpus);
        bert.weights = df_idf_weights(corpus, bert.weighting);
    }
    if (req.metric == Metric::tokdist) req.dist.validate();

    auto gen_path = [&](const EvalPair& p) { return resolve_path(p.gen_path, req.manifest, req.gen_root); };
    auto ref_path = [&](const EvalPair& p) { return resolve_path(p.ref_path, req.manifest, req.ref_root); };

    auto get_tokens = [&](const EvalPair& p, const FeatureMatrix* gen, const FeatureMatrix* ref) {
        if (tokens.from_files) {
            return std::pair{lookup(tokens.gen, p.utt_id, "generated"), lookup(tokens.ref, p.utt_id, "reference")};
        }
        const FeatureMatrix g = gen ? *gen : read_feature_file(gen_path(p));
        const FeatureMatrix r = ref ? *ref : read_feature_file(ref_path(p));
        return std::pair{assign_tokens(*tokens.kmeans, g), assign_tokens(*tokens.kmeans, r)};
    };

    const auto results = parallel_map(manifest.size(), req.jobs, [&](std::size_t i) {
        const EvalPair& p = manifest[i];
        PairResult out;
        switch (req.metric) {
            case Metric::bertscore: {
                const auto gen = read_feature_file(gen_path(p));
                const auto ref = read_feature_file(ref_path(p));
                if (bert.weighting == Weighting::none) {
                    out.score = speech_bert_score(gen, ref, bert);
                } else {
                    const auto [gt, rt] = get_tokens(p, &gen, &ref);
                    out.score = speech_bert_score(gen, ref, bert, &gt, &rt);
                }
                break;
            }
            case Metric::bleu: {
                const auto [gt, rt] = get_tokens(p, nullptr, nullptr);
                out.score = speech_bleu(gt, rt, req.bleu);
                break;
            }
            case Metric::tokdist: {
                const auto [gt, rt] = get_tokens(p, nullptr, nullptr);
                const auto r = speech_token_distance(gt, rt, req.dist);
                out.score = r.similarity;
                out.edit_distance = r.edit_distance;
                break;
            }
        }
        return out;
    });

    ScoreReport report;
    report.metric_name = metric_name(req.metric);
    switch (req.metric) {
        case Metric::bertscore: report.config = bert.to_json(); break;
        case Metric::bleu: report.config = req.bleu.to_json(); break;
        case Metric::tokdist: report.config = req.dist.to_json(); break;
    }
    report.config["manifest"] = req.manifest.generic_string();
    report.config["token_source"] = needs_tokens ? tokens.describe() : "none";
    if (needs_tokens && tokens.kmeans) {
        report.config["kmeans_model"] = req.kmeans.generic_string();
        report.config["kmeans_k"] = tokens.kmeans->k;
        report.config["kmeans_fingerprint"] = model_fingerprint(*tokens.kmeans);
    }
    if (needs_tokens && tokens.from_files) {
        report.config["tokens_gen"] = req.tokens_gen.generic_string();
        report.config["tokens_ref"] = req.tokens_ref.generic_string();
    }
    if (req.metric == Metric::bertscore && bert.weighting != Weighting::none) {
        report.config["weight_corpus"] = req.weight_corpus.generic_string();
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        report.scores.emplace_back(manifest[i].utt_id, results[i].score);
        if (req.metric == Metric::tokdist && req.dist.measure == DistanceMeasure::levenshtein) {
            report.details[manifest[i].utt_id] = Json{{"edit_distance", results[i].edit_distance}};
        }
    }
    return report;
}

std::vector<fs::path> list_feature_files(const fs::path& spec) {
    std::vector<fs::path> out;
    if (fs::is_directory(spec)) {
        for (const auto& e : fs::directory_iterator(spec)) {
            if (e.is_regular_file() && e.path().extension() == ".feat") out.push_back(e.path());
        }
        std::sort(out.begin(), out.end());
    } else {
        const auto bytes = detail::read_all_bytes(spec);
        std::string line;
        auto flush = [&] {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (!line.empty()) {
                fs::path p(line);
                out.push_back(p.is_absolute() ? p : spec.parent_path() / p);
            }
            line.clear();
        };
        for (unsigned char c : bytes) {
            if (c == '\n') flush();
            else line.push_back(static_cast<char>(c));
        }
        flush();
    }
    if (out.empty()) throw DataError("no feature files found in '" + spec.string() + "'");
    return out;
}

namespace {

std::vector<FeatureMatrix> load_features(const fs::path& spec) {
    std::vector<FeatureMatrix> out;
    for (const auto& p : list_feature_files(spec)) out.push_back(read_feature_file(p));
    return out;
}

void add_score_flags(CLI::App* cmd, ScoreRequest& req, std::string& out) {
    cmd->add_option("--manifest", req.manifest, "CSV manifest of pairs and ratings")->required();
    cmd->add_option("--gen-root", req.gen_root, "Directory relative gen_path entries resolve against");
    cmd->add_option("--ref-root", req.ref_root, "Directory relative ref_path entries resolve against");
    cmd->add_option("--kmeans", req.kmeans, "k-means model (.spkm) for in-pipeline tokens");
    cmd->add_option("--tokens-gen", req.tokens_gen, "Precomputed generated-side token file");
    cmd->add_option("--tokens-ref", req.tokens_ref, "Precomputed reference-side token file");
    cmd->add_option("--jobs", req.jobs, "Pairs scored in parallel")->check(CLI::PositiveNumber);
    cmd->add_option("--out", out, "Output report (JSON)")->required();
}

} // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Reference-aware evaluation of generated speech", "speechscore"};
    app.require_subcommand(1);

    // score
    auto* score = app.add_subcommand("score", "Score every manifest pair with one metric");
    score->require_subcommand(1);
    ScoreRequest req;
    std::string score_out;

    auto* bert_cmd = score->add_subcommand("bertscore", "SpeechBERTScore over feature files");
    add_score_flags(bert_cmd, req, score_out);
    std::string variant = "precision", weighting = "none";
    bert_cmd->add_option("--variant", variant)->check(CLI::IsMember({"precision", "recall", "f1"}));
    bert_cmd->add_option("--weighting", weighting)->check(CLI::IsMember({"none", "df", "idf"}));
    bert_cmd->add_option("--weight-corpus", req.weight_corpus, "Token file the df/idf statistics come from");
    bert_cmd->add_flag("--strict-zero-norm", req.bert.strict_zero_norm, "Fail on zero-norm frames");

    auto* bleu_cmd = score->add_subcommand("bleu", "SpeechBLEU over token sequences");
    add_score_flags(bleu_cmd, req, score_out);
    bool bleu_dedup = true, brevity = true;
    std::string smoothing = "add1";
    bleu_cmd->add_option("--max-ngram", req.bleu.max_order, "Highest n-gram order G")->check(CLI::PositiveNumber);
    bleu_cmd->add_flag("--dedup,!--no-dedup", bleu_dedup, "Collapse token repetitions (default on)");
    bleu_cmd->add_option("--smoothing", smoothing)->check(CLI::IsMember({"none", "add1"}));
    bleu_cmd->add_flag("--brevity-penalty,!--no-brevity-penalty", brevity, "Apply the brevity penalty (default on)");

    auto* dist_cmd = score->add_subcommand("tokdist", "SpeechTokenDistance over token sequences");
    add_score_flags(dist_cmd, req, score_out);
    bool dist_dedup = false;
    std::string measure = "levenshtein";
    dist_cmd->add_option("--measure", measure)->check(CLI::IsMember({"levenshtein", "jaro-winkler"}));
    dist_cmd->add_flag("--dedup,!--no-dedup", dist_dedup, "Collapse token repetitions (default off)");
    dist_cmd->add_option("--winkler-p", req.dist.winkler_prefix_scale, "Winkler prefix scale in (0, 0.25]");
    dist_cmd->add_option("--winkler-maxprefix", req.dist.winkler_max_prefix, "Longest prefix the Winkler bonus counts");

    // train-kmeans
    auto* tk = app.add_subcommand("train-kmeans", "Train a k-means codebook on feature files");
    std::string tk_features, tk_out;
    KMeansOptions km;
    std::size_t max_frames = 0;
    tk->add_option("--features", tk_features, "Directory of .feat files or a list file")->required();
    tk->add_option("--k", km.k, "Codebook size")->required()->check(CLI::PositiveNumber);
    tk->add_option("--seed", km.seed, "Seed for k-means++ and subsampling")->required();
    tk->add_option("--max-iters", km.max_iters)->check(CLI::PositiveNumber);
    tk->add_option("--tol", km.rel_tol, "Relative SSE improvement threshold")->check(CLI::NonNegativeNumber);
    tk->add_option("--max-frames", max_frames, "Uniform frame subsample size")->check(CLI::PositiveNumber);
    tk->add_option("--out", tk_out)->required();

    // quantize
    auto* qz = app.add_subcommand("quantize", "Map feature files to token sequences");
    std::string qz_features, qz_model, qz_out;
    bool qz_dedup = false;
    qz->add_option("--features", qz_features)->required();
    qz->add_option("--model", qz_model)->required();
    qz->add_flag("--dedup", qz_dedup, "Collapse token repetitions");
    qz->add_option("--out", qz_out)->required();

    // train-bpe / bpe-encode
    auto* tb = app.add_subcommand("train-bpe", "Train BPE merges over a token file");
    std::string tb_tokens, tb_out;
    std::size_t vocab_size = 0, base_vocab = 0;
    tb->add_option("--tokens", tb_tokens)->required();
    tb->add_option("--vocab-size", vocab_size)->required()->check(CLI::PositiveNumber);
    tb->add_option("--base-vocab", base_vocab, "Base vocabulary (default: largest token + 1)");
    tb->add_option("--out", tb_out)->required();

    auto* be = app.add_subcommand("bpe-encode", "Encode a token file with a BPE model");
    std::string be_tokens, be_model, be_out;
    be->add_option("--tokens", be_tokens)->required();
    be->add_option("--model", be_model)->required();
    be->add_option("--out", be_out)->required();

    // correlate
    auto* co = app.add_subcommand("correlate", "Correlate a score report with manifest ratings");
    std::string co_report, co_manifest, co_level = "utterance", co_out;
    co->add_option("--report", co_report)->required();
    co->add_option("--manifest", co_manifest)->required();
    co->add_option("--level", co_level)->required()->check(CLI::IsMember({"utterance", "system"}));
    co->add_option("--out", co_out)->required();

    // unalign
    auto* un = app.add_subcommand("unalign", "Replace references with draws from a pool of natural speech");
    std::string un_manifest, un_pool, un_out, un_mode = "single";
    std::uint64_t un_seed = 0;
    un->add_option("--manifest", un_manifest)->required();
    un->add_option("--ref-pool", un_pool, "Directory of reference feature files")->required();
    un->add_option("--seed", un_seed)->required();
    un->add_option("--pool-mode", un_mode)->check(CLI::IsMember({"single", "per-pair"}));
    un->add_option("--out", un_out)->required();

    std::vector<const char*> cargv;
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (score->parsed()) {
            if (bert_cmd->parsed()) {
                req.metric = Metric::bertscore;
                req.bert.variant = parse_bert_variant(variant);
                req.bert.weighting = parse_weighting(weighting);
            } else if (bleu_cmd->parsed()) {
                req.metric = Metric::bleu;
                req.bleu.dedup = bleu_dedup;
                req.bleu.brevity_penalty = brevity;
                req.bleu.smoothing = smoothing == "none" ? BleuSmoothing::none : BleuSmoothing::add_one_higher_order;
            } else {
                req.metric = Metric::tokdist;
                req.dist.measure = measure == "levenshtein" ? DistanceMeasure::levenshtein : DistanceMeasure::jaro_winkler;
                req.dist.dedup = dist_dedup;
                try {
                    req.dist.validate();
                } catch (const DataError& e) {
                    throw UsageError(std::string("--winkler-p/--winkler-maxprefix: ") + e.what());
                }
            }
            const auto report = score_manifest(req);
            write_report(report, score_out);
            out << report.metric_name << ": scored " << report.scores.size() << " pairs -> " << score_out << "\n";
        } else if (tk->parsed()) {
            if (max_frames > 0) km.max_train_frames = max_frames;
            const auto frames = load_features(tk_features);
            const auto model = train_kmeans(frames, km);
            write_kmeans_model(model, tk_out);
            out << "k-means: k=" << model.k << " dim=" << model.dim << " iters=" << model.iters_run
                << " sse=" << model.final_sse << " fingerprint=" << model_fingerprint(model) << "\n";
        } else if (qz->parsed()) {
            const auto model = read_kmeans_model(qz_model);
            std::vector<TokenSequence> seqs;
            for (const auto& p : list_feature_files(qz_features)) {
                auto s = assign_tokens(model, read_feature_file(p));
                seqs.push_back(qz_dedup ? collapse_repeats(s) : std::move(s));
            }
            write_token_file(seqs, qz_out);
            out << "quantized " << seqs.size() << " utterances -> " << qz_out << "\n";
        } else if (tb->parsed()) {
            const auto corpus = read_token_file(tb_tokens);
            if (base_vocab == 0) {
                for (const auto& s : corpus)
                    for (Token t : s.tokens) base_vocab = std::max<std::size_t>(base_vocab, std::size_t{t} + 1);
            }
            if (vocab_size < base_vocab) {
                throw UsageError("--vocab-size " + std::to_string(vocab_size) + " is below the base vocabulary " +
                                 std::to_string(base_vocab));
            }
            const auto model = train_bpe(corpus, base_vocab, vocab_size);
            write_bpe_model(model, tb_out);
            out << "bpe: base_vocab=" << model.base_vocab << " merges=" << model.merges.size() << "\n";
        } else if (be->parsed()) {
            const auto model = read_bpe_model(be_model);
            std::vector<TokenSequence> seqs;
            for (const auto& s : read_token_file(be_tokens)) seqs.push_back(bpe_encode(model, s));
            write_token_file(seqs, be_out);
            out << "encoded " << seqs.size() << " utterances -> " << be_out << "\n";
        } else if (co->parsed()) {
            const auto report = read_report(co_report);
            const auto manifest = parse_manifest(co_manifest);
            const auto result = correlate(report, manifest, parse_level(co_level));
            write_json_file(correlation_summary(result, report), co_out);
            out << co_level << " n=" << result.n << " |LCC|=" << result.lcc_abs << " |SRCC|=" << result.srcc_abs
                << "\n";
        } else if (un->parsed()) {
            const auto manifest = parse_manifest(un_manifest);
            std::vector<fs::path> pool;
            if (!fs::is_directory(un_pool)) throw DataError("--ref-pool '" + un_pool + "' is not a directory");
            for (const auto& e : fs::directory_iterator(un_pool)) {
                if (e.is_regular_file()) pool.push_back(fs::absolute(e.path()).lexically_normal());
            }
            std::sort(pool.begin(), pool.end());
            // Carry gen paths over as absolute so the new manifest can live anywhere.
            std::vector<EvalPair> abs_manifest = manifest;
            for (auto& p : abs_manifest) {
                p.gen_path = fs::absolute(resolve_path(p.gen_path, un_manifest)).lexically_normal();
            }
            const auto mode = un_mode == "single" ? PoolMode::single : PoolMode::per_pair;
            const auto unaligned = make_unaligned_manifest(abs_manifest, pool, un_seed, mode);
            write_manifest(unaligned, un_out);
            out << "unaligned " << unaligned.size() << " pairs -> " << un_out << "\n";
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace speechscore::cli
