#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "negadapt/adapter.hpp"

namespace negadapt {

/// STSB-style pair; the human score is rescaled to [0, 1].
struct ScoredPair {
    std::string pair_id;
    std::string sentence1;
    std::string sentence2;
    double score = 0.0;
    std::optional<std::string> neg_sentence1;

    friend bool operator==(const ScoredPair&, const ScoredPair&) = default;
};

struct RowReject {
    std::size_t line = 0;
    std::string reason;
};

struct ScoredPairFile {
    std::vector<ScoredPair> pairs;
    std::vector<RowReject> rejects;
    bool had_header = false;
};

/// Scores may overshoot [0, 1] by this much after scaling and are clamped.
inline constexpr double kScoreClampTolerance = 1e-6;

/// Reads `sentence1, sentence2, score[, neg_sentence1]` rows (tab separated,
/// or comma separated with RFC 4180 quoting when the extension is .csv).
/// A first row whose score field is not numeric is taken as a header.
/// Rows that cannot be parsed go to `rejects`; pair ids are line numbers.
ScoredPairFile load_scored_pairs(const std::filesystem::path& path, double score_scale = 5.0);

/// Writes the TSV layout load_scored_pairs reads (with a header row and
/// already-scaled scores, so reload with score_scale = 1).
void save_scored_pairs(const std::filesystem::path& path, std::span<const ScoredPair> pairs);

struct SimilarityGroup {
    int index = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<std::string> members;
};

/// 1..5 for [0,0.2), [0.2,0.4), [0.4,0.6), [0.6,0.8), [0.8,1].
int group_index(double score);
std::array<SimilarityGroup, 5> assign_groups(std::span<const ScoredPair> pairs);

/// Rule-based verbal negation of the first finite verb. Inserts "not" after
/// the first auxiliary/modal, removes an existing "not"/"n't" there, or
/// falls back to do-support ("Dogs bark." -> "Dogs do not bark.").
/// Throws CannotNegate when no rule applies.
std::string negate_sentence(const std::string& sentence);

/// SemAntoNeg-style item: pick the paraphrase of `anchor` among three.
struct ChoiceItem {
    std::string item_id;
    std::string anchor;
    std::array<std::string, 3> candidates;
    int correct_index = 0;
    std::optional<std::string> stratum;

    friend bool operator==(const ChoiceItem&, const ChoiceItem&) = default;
};

/// JSONL ({anchor, candidates, correct_index, stratum?, id?} per line) or
/// blank-line separated groups of four lines (anchor, correct, wrong, wrong);
/// the four-line candidates are shuffled with `shuffle_seed`.
std::vector<ChoiceItem> load_choice_items(const std::filesystem::path& path,
                                          std::uint64_t shuffle_seed = 0);
void save_choice_items(const std::filesystem::path& path, std::span<const ChoiceItem> items);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Index-level split. `strata[i]` labels item i (empty span = unstratified).
/// Per-stratum train quotas use largest-remainder rounding. Both outputs are
/// sorted ascending.
SplitIndices stratified_split_indices(std::span<const std::string> strata, std::size_t train_size,
                                      std::uint64_t seed);

struct ChoiceSplit {
    std::vector<ChoiceItem> train;
    std::vector<ChoiceItem> test;
};

ChoiceSplit stratified_split(std::span<const ChoiceItem> items, std::size_t train_size,
                             std::uint64_t seed);

struct TripletExtraction {
    std::vector<NegationTriplet> triplets;
    std::size_t skipped_missing_negation = 0;
    std::size_t skipped_invalid = 0;
};

/// (sentence1, sentence2, neg_sentence1) for every pair scoring >= min_score.
TripletExtraction pairs_to_triplets(std::span<const ScoredPair> pairs, double min_score = 0.8);

/// (anchor, correct, wrong) for both wrong candidates of each item.
std::vector<NegationTriplet> items_to_triplets(std::span<const ChoiceItem> items);

std::vector<NegationTriplet> load_triplets(const std::filesystem::path& path);
void save_triplets(const std::filesystem::path& path, std::span<const NegationTriplet> triplets);

/// Deterministic sampling on top of mt19937_64 (whose output is fixed by
/// the standard). std distributions are avoided: their output differs
/// between standard libraries.
class SplitRng {
public:
    explicit SplitRng(std::uint64_t seed);
    std::uint64_t next();
    /// Uniform in [0, bound).
    std::uint64_t below(std::uint64_t bound);
    /// Uniform in [0, 1).
    double unit();

    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace negadapt
