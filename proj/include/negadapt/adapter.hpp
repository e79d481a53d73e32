#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "negadapt/embedding_lookup.hpp"
#include "negadapt/vector_core.hpp"

namespace negadapt {

/// (anchor, paraphrase, negation): the unit the adapter learns from.
struct NegationTriplet {
    std::string anchor;
    std::string paraphrase;
    std::string negation;
    std::string triplet_id;

    friend bool operator==(const NegationTriplet&, const NegationTriplet&) = default;
};

/// Throws InvalidArgument when a text is blank or anchor == negation.
void validate(const NegationTriplet& triplet);

struct TripletVectors {
    std::reference_wrapper<const EmbeddingVector> anchor;
    std::reference_wrapper<const EmbeddingVector> paraphrase;
    std::reference_wrapper<const EmbeddingVector> negation;
};

/// Resolves every text of every triplet; throws MissingEmbedding.
std::vector<TripletVectors> resolve(std::span<const NegationTriplet> triplets,
                                    const EmbeddingLookup& embeddings);

/// Average of triplet_contribution over all triplets.
ContributionVector mean_contribution(std::span<const TripletVectors> triplets);

struct RescaleResult {
    ContributionVector contribution;
    /// max(v) was not positive, so the input came back unchanged.
    bool degenerate = false;
};

RescaleResult rescale_contribution(const ContributionVector& v);

/// w_k = exp(a v_k) / sum_i exp(a v_i), evaluated with the max subtracted
/// from the logits first.
WeightVector softmax_weights(const ContributionVector& v, double a);

WeightVector learn_weights(std::span<const NegationTriplet> triplets,
                           const EmbeddingLookup& embeddings, double a,
                           const std::string& dataset = {});

enum class GridObjective { TrainParaphraseAccuracy };

struct GridSearchResult {
    double best_a = 0.0;
    std::vector<double> candidate_grid;
    std::vector<std::pair<double, double>> train_accuracy_by_a;
    GridObjective objective = GridObjective::TrainParaphraseAccuracy;
    WeightVector best_weights = WeightVector::uniform(1);
};

/// {0, 0.25, ..., 5.0}.
std::vector<double> default_grid();

/// Fraction of triplets whose anchor is strictly closer to the paraphrase
/// than to the negation under the weighted cosine.
double triplet_accuracy(std::span<const TripletVectors> triplets, const WeightVector& w);

/// Scores every grid point by training accuracy and keeps the best one;
/// ties go to the smallest a.
GridSearchResult grid_search_a(std::span<const NegationTriplet> triplets,
                               const EmbeddingLookup& embeddings,
                               std::span<const double> grid = {},
                               const std::string& dataset = {});

// Persistence: {"format": "negadapt-weights/1", "dim", "a", "weights", "source"}.
inline constexpr const char* kWeightsFormat = "negadapt-weights/1";

nlohmann::json to_json(const WeightVector& w);
WeightVector weights_from_json(const nlohmann::json& doc);
void save_weights(const std::filesystem::path& path, const WeightVector& w);
WeightVector load_weights(const std::filesystem::path& path);

/// Current UTC time as ISO-8601, or SOURCE_DATE_EPOCH when that is set.
std::string utc_timestamp();

}  // namespace negadapt
