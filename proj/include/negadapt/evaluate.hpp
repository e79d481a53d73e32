#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "negadapt/datasets.hpp"
#include "negadapt/embedding_lookup.hpp"
#include "negadapt/run_matrix.hpp"
#include "negadapt/vector_core.hpp"

namespace negadapt {

/// Sample Pearson correlation, two-pass. Throws LengthMismatch, or
/// DegenerateInput for fewer than two points or a constant sequence.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct StsbOptions {
    /// Only pairs scoring at least this much count towards accuracy
    /// (0.8 selects the high-similarity paraphrase group).
    double accuracy_min_score = 0.0;
    std::string model_tag;
};

struct StsbEvalResult {
    std::string model_tag;
    /// Pairs that entered the accuracy.
    std::size_t n = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    /// Pairs with sim(s1, s2) == sim(s1, neg s1); counted as incorrect.
    std::size_t n_ties = 0;
    /// Absent when every similarity or every score is the same.
    std::optional<double> pearson;
    std::size_t n_correlation = 0;
    std::vector<std::string> excluded_missing_negation;
    bool weighted = false;
    std::optional<double> a;
};

/// Paraphrase-vs-negation accuracy (correct iff sim(s1, s2) > sim(s1, neg))
/// and Pearson of sim(s1, s2) against human scores over all pairs.
/// Throws DegenerateInput when no pair qualifies for the accuracy.
StsbEvalResult eval_stsb(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                         const WeightVector* w = nullptr, const StsbOptions& options = {});

struct ChoiceEvalResult {
    std::size_t n = 0;
    std::size_t n_correct = 0;
    double accuracy = 0.0;
    /// Items whose best similarity was shared; the lowest index was taken.
    std::vector<std::string> tied_items;
};

/// Picks argmax of sim(anchor, candidate) per item. Throws DegenerateInput
/// for an empty item list.
ChoiceEvalResult eval_choice(std::span<const ChoiceItem> items, const EmbeddingLookup& embeddings,
                             const WeightVector* w = nullptr);

struct ExperimentConfig {
    std::vector<std::size_t> train_sizes;
    std::size_t repeats = 10;
    std::uint64_t base_seed = 0;
    /// Empty means default_grid().
    std::vector<double> grid;
    std::string dataset;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::size_t n_items = 0;
    std::size_t n_test = 0;
    /// One per train size, in config order; methods "original", "weighted".
    std::vector<RunMatrix> matrices;
};

/// Run r uses seed base_seed + r: a stratified split with the largest
/// train size gives the train pool and the test set, and each smaller
/// train set is a stratified subsample of that pool. Weights are learned
/// from two triplets per train item and evaluated on the test set.
ExperimentResult run_experiment(std::span<const ChoiceItem> items, const EmbeddingLookup& embeddings,
                                const ExperimentConfig& config);

inline constexpr const char* kExperimentFormat = "negadapt-experiment/1";

nlohmann::ordered_json to_json(const ExperimentResult& result);
std::string to_csv(const ExperimentResult& result);

}  // namespace negadapt
