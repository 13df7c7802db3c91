#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "speechscore/bertscore.hpp"
#include "speechscore/bleu.hpp"
#include "speechscore/score_report.hpp"
#include "speechscore/token_distance.hpp"

namespace speechscore::cli {

// Bad flag combination detected after parsing; exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Metric { bertscore, bleu, tokdist };

struct ScoreRequest {
    Metric metric = Metric::bertscore;
    std::filesystem::path manifest;
    std::filesystem::path gen_root;
    std::filesystem::path ref_root;
    std::filesystem::path kmeans;
    std::filesystem::path tokens_gen;
    std::filesystem::path tokens_ref;
    std::filesystem::path weight_corpus;
    BertScoreConfig bert;
    BleuConfig bleu;
    DistanceConfig dist;
    int jobs = 1;  // not echoed: reports must not depend on it
};

// Scores every manifest pair, in manifest order.
ScoreReport score_manifest(const ScoreRequest& req);

// Feature files named by a directory (*.feat, sorted) or a list file (one path per line).
std::vector<std::filesystem::path> list_feature_files(const std::filesystem::path& spec);

// Exit codes: 0 success, 1 data/runtime error, 2 usage error.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

} // namespace speechscore::cli
