#include "negadapt/adapter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <ctime>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

constexpr double kRescaleFloor = 1e-12;

void require_nonblank(const std::string& text, const char* field, const std::string& id) {
    if (detail::trim(text).empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string("triplet '") + id + "' has an empty " + field);
    }
}

}  // namespace

void validate(const NegationTriplet& triplet) {
    require_nonblank(triplet.anchor, "anchor", triplet.triplet_id);
    require_nonblank(triplet.paraphrase, "paraphrase", triplet.triplet_id);
    require_nonblank(triplet.negation, "negation", triplet.triplet_id);
    if (triplet.anchor == triplet.negation) {
        throw Error(ErrorCode::InvalidArgument,
                    "triplet '" + triplet.triplet_id + "' has anchor == negation");
    }
}

std::vector<TripletVectors> resolve(std::span<const NegationTriplet> triplets,
                                    const EmbeddingLookup& embeddings) {
    std::vector<TripletVectors> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) {
        out.push_back(TripletVectors{std::cref(embeddings.at(t.anchor)),
                                     std::cref(embeddings.at(t.paraphrase)),
                                     std::cref(embeddings.at(t.negation))});
    }
    return out;
}

ContributionVector mean_contribution(std::span<const TripletVectors> triplets) {
    if (triplets.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no triplets to average");
    }
    const std::size_t dim = triplets.front().anchor.get().dim();
    ContributionVector total;
    total.values.assign(dim, 0.0);
    for (const auto& t : triplets) {
        const ContributionVector v = triplet_contribution(t.anchor, t.paraphrase, t.negation);
        if (v.dim() != dim) {
            throw Error(ErrorCode::DimensionMismatch,
                        "triplet dimension " + std::to_string(v.dim()) + " vs " + std::to_string(dim));
        }
        for (std::size_t k = 0; k < dim; ++k) {
            total.values[k] += v.values[k];
        }
    }
    const double n = static_cast<double>(triplets.size());
    for (double& value : total.values) {
        value /= n;
    }
    total.n_triplets = triplets.size();
    return total;
}

RescaleResult rescale_contribution(const ContributionVector& v) {
    if (v.values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "cannot rescale an empty contribution vector");
    }
    const double max_value = *std::max_element(v.values.begin(), v.values.end());
    if (!(max_value > kRescaleFloor)) {
        // Dividing by a non-positive max would flip or blow up the ordering.
        return RescaleResult{v, true};
    }
    RescaleResult out{v, false};
    for (double& value : out.contribution.values) {
        value /= max_value;
    }
    return out;
}

WeightVector softmax_weights(const ContributionVector& v, double a) {
    if (v.values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "cannot weight an empty contribution vector");
    }
    if (!std::isfinite(a) || a < 0.0) {
        throw Error(ErrorCode::InvalidArgument, "hyperparameter a must be finite and >= 0");
    }
    std::vector<double> logits(v.values.size());
    for (std::size_t k = 0; k < logits.size(); ++k) {
        if (!std::isfinite(v.values[k])) {
            throw Error(ErrorCode::NonFiniteInput, "contribution vector has a non-finite value");
        }
        logits[k] = a * v.values[k];
    }
    const double shift = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& logit : logits) {
        logit = std::exp(logit - shift);
        total += logit;
    }
    for (double& w : logits) {
        w /= total;
        // Far-negative logits underflow; keep the simplex strictly positive.
        w = std::max(w, std::numeric_limits<double>::min());
    }
    return WeightVector(std::move(logits), a);
}

WeightVector learn_weights(std::span<const NegationTriplet> triplets,
                           const EmbeddingLookup& embeddings, double a, const std::string& dataset) {
    if (triplets.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training triplets");
    }
    for (const auto& t : triplets) {
        validate(t);
    }
    const auto vectors = resolve(triplets, embeddings);
    const RescaleResult rescaled = rescale_contribution(mean_contribution(vectors));
    WeightVector w = softmax_weights(rescaled.contribution, a);
    w.set_source(WeightSource{dataset, triplets.size(), utc_timestamp(), rescaled.degenerate});
    return w;
}

std::vector<double> default_grid() {
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) {
        grid.push_back(0.25 * i);
    }
    return grid;
}

double triplet_accuracy(std::span<const TripletVectors> triplets, const WeightVector& w) {
    if (triplets.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no triplets to score");
    }
    std::size_t correct = 0;
    for (const auto& t : triplets) {
        if (weighted_cosine(t.anchor, t.paraphrase, w) > weighted_cosine(t.anchor, t.negation, w)) {
            ++correct;
        }
    }
    return static_cast<double>(correct) / static_cast<double>(triplets.size());
}

GridSearchResult grid_search_a(std::span<const NegationTriplet> triplets,
                               const EmbeddingLookup& embeddings, std::span<const double> grid,
                               const std::string& dataset) {
    std::vector<double> candidates(grid.begin(), grid.end());
    if (candidates.empty()) {
        candidates = default_grid();
    }
    for (double a : candidates) {
        if (!std::isfinite(a) || a < 0.0) {
            throw Error(ErrorCode::InvalidArgument, "grid values must be finite and >= 0");
        }
    }
    if (triplets.empty()) {
        throw Error(ErrorCode::EmptyTrainingSet, "no training triplets");
    }
    for (const auto& t : triplets) {
        validate(t);
    }
    const auto vectors = resolve(triplets, embeddings);
    // The contribution vector does not depend on a; only the softmax does.
    const RescaleResult rescaled = rescale_contribution(mean_contribution(vectors));

    GridSearchResult result;
    result.candidate_grid = candidates;
    std::size_t best = 0;
    double best_accuracy = -1.0;
    std::vector<WeightVector> weights;
    weights.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        weights.push_back(softmax_weights(rescaled.contribution, candidates[i]));
        const double accuracy = triplet_accuracy(vectors, weights.back());
        result.train_accuracy_by_a.emplace_back(candidates[i], accuracy);
        if (accuracy > best_accuracy ||
            (accuracy == best_accuracy && candidates[i] < candidates[best])) {
            best = i;
            best_accuracy = accuracy;
        }
    }
    result.best_a = candidates[best];
    result.best_weights = std::move(weights[best]);
    result.best_weights.set_source(
        WeightSource{dataset, triplets.size(), utc_timestamp(), rescaled.degenerate});
    return result;
}

nlohmann::json to_json(const WeightVector& w) {
    const auto& src = w.source();
    return nlohmann::json{
        {"format", kWeightsFormat},
        {"dim", w.dim()},
        {"a", w.a()},
        {"weights", std::vector<double>(w.weights().begin(), w.weights().end())},
        {"source",
         {{"dataset", src.dataset},
          {"n_triplets", src.n_triplets},
          {"created", src.created},
          {"degenerate_rescale", src.degenerate_rescale}}},
    };
}

WeightVector weights_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != kWeightsFormat) {
            throw Error(ErrorCode::VersionUnsupported,
                        "weights format " + doc.at("format").get<std::string>());
        }
        auto weights = doc.at("weights").get<std::vector<double>>();
        if (weights.size() != doc.at("dim").get<std::size_t>()) {
            throw Error(ErrorCode::FormatError, "weights length does not match dim");
        }
        WeightSource source;
        if (const auto it = doc.find("source"); it != doc.end() && it->is_object()) {
            source.dataset = it->value("dataset", "");
            source.n_triplets = it->value("n_triplets", std::size_t{0});
            source.created = it->value("created", "");
            source.degenerate_rescale = it->value("degenerate_rescale", false);
        }
        return WeightVector(std::move(weights), doc.at("a").get<double>(), std::move(source));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("weights document: ") + e.what());
    }
}

void save_weights(const std::filesystem::path& path, const WeightVector& w) {
    detail::write_file(path, to_json(w).dump(2) + "\n");
}

WeightVector load_weights(const std::filesystem::path& path) {
    const std::string text = detail::read_file(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::FormatError, path.string() + ": " + e.what());
    }
    return weights_from_json(doc);
}

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0') {
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

}  // namespace negadapt
