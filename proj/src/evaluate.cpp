#include "negadapt/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include "negadapt/adapter.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

double similarity(const EmbeddingVector& x, const EmbeddingVector& y, const WeightVector* w) {
    if (x.dim() != y.dim()) {
        throw Error(ErrorCode::DimensionMismatch, "cannot compare " + x.id() + " with " + y.id());
    }
    return w != nullptr ? weighted_cosine(x, y, *w) : cosine(x, y);
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw Error(ErrorCode::LengthMismatch, "pearson needs sequences of equal length (" +
                                                   std::to_string(xs.size()) + " vs " +
                                                   std::to_string(ys.size()) + ")");
    }
    if (xs.size() < 2) {
        throw Error(ErrorCode::DegenerateInput, "pearson needs at least two points");
    }
    const auto n = static_cast<double>(xs.size());
    double sx = 0.0;
    double sy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / n;
    const double my = sy / n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw Error(ErrorCode::DegenerateInput, "pearson of a constant sequence");
    }
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

StsbEvalResult eval_stsb(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                         const WeightVector* w, const StsbOptions& options) {
    StsbEvalResult result;
    result.model_tag = options.model_tag;
    result.weighted = w != nullptr;
    if (w != nullptr) {
        result.a = w->a();
    }
    std::vector<double> sims;
    std::vector<double> scores;
    for (const auto& pair : pairs) {
        const auto& s1 = embeddings.at(pair.sentence1);
        const double sim12 = similarity(s1, embeddings.at(pair.sentence2), w);
        sims.push_back(sim12);
        scores.push_back(pair.score);
        if (pair.score < options.accuracy_min_score) {
            continue;
        }
        if (!pair.neg_sentence1) {
            result.excluded_missing_negation.push_back(pair.pair_id);
            continue;
        }
        const double sim1n = similarity(s1, embeddings.at(*pair.neg_sentence1), w);
        ++result.n;
        if (sim12 > sim1n) {
            ++result.n_correct;
        } else if (sim12 == sim1n) {
            ++result.n_ties;
        }
    }
    if (result.n == 0) {
        throw Error(ErrorCode::DegenerateInput, "no pair with a negation scores at least " +
                                                    std::to_string(options.accuracy_min_score));
    }
    result.accuracy = static_cast<double>(result.n_correct) / static_cast<double>(result.n);
    result.n_correlation = sims.size();
    try {
        result.pearson = pearson(sims, scores);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateInput) {
            throw;
        }
    }
    return result;
}

ChoiceEvalResult eval_choice(std::span<const ChoiceItem> items, const EmbeddingLookup& embeddings,
                             const WeightVector* w) {
    if (items.empty()) {
        throw Error(ErrorCode::DegenerateInput, "no items to evaluate");
    }
    ChoiceEvalResult result;
    result.n = items.size();
    for (const auto& item : items) {
        const auto& anchor = embeddings.at(item.anchor);
        std::array<double, 3> sims{};
        for (std::size_t c = 0; c < 3; ++c) {
            sims[c] = similarity(anchor, embeddings.at(item.candidates[c]), w);
        }
        std::size_t best = 0;
        bool tied = false;
        for (std::size_t c = 1; c < 3; ++c) {
            if (sims[c] > sims[best]) {
                best = c;
                tied = false;
            } else if (sims[c] == sims[best]) {
                tied = true;
            }
        }
        if (tied) {
            result.tied_items.push_back(item.item_id);
        }
        if (static_cast<int>(best) == item.correct_index) {
            ++result.n_correct;
        }
    }
    result.accuracy = static_cast<double>(result.n_correct) / static_cast<double>(result.n);
    return result;
}

ExperimentResult run_experiment(std::span<const ChoiceItem> items, const EmbeddingLookup& embeddings,
                                const ExperimentConfig& config) {
    if (config.train_sizes.empty() || config.repeats == 0) {
        throw Error(ErrorCode::InvalidArgument, "experiment needs train sizes and at least one repeat");
    }
    const std::size_t pool_size = *std::max_element(config.train_sizes.begin(), config.train_sizes.end());
    if (*std::min_element(config.train_sizes.begin(), config.train_sizes.end()) == 0 ||
        pool_size >= items.size()) {
        throw Error(ErrorCode::TrainSizeTooLarge,
                    "train sizes must lie in [1, " + std::to_string(items.size()) + ")");
    }
    const std::vector<double> grid = config.grid.empty() ? default_grid() : config.grid;

    ExperimentResult result;
    result.config = config;
    result.config.grid = grid;
    result.n_items = items.size();
    result.n_test = items.size() - pool_size;
    for (std::size_t k : config.train_sizes) {
        RunMatrix m;
        m.method_tags = {"original", "weighted"};
        m.run_count = config.repeats;
        m.scores.assign(2, std::vector<double>(config.repeats, 0.0));
        m.train_size = k;
        m.best_a.assign(config.repeats, 0.0);
        result.matrices.push_back(std::move(m));
    }

    for (std::size_t r = 0; r < config.repeats; ++r) {
        const std::uint64_t seed = config.base_seed + r;
        const auto split = stratified_split(items, pool_size, seed);
        const double original = eval_choice(split.test, embeddings).accuracy;
        for (std::size_t s = 0; s < config.train_sizes.size(); ++s) {
            const std::size_t k = config.train_sizes[s];
            const auto train = k == pool_size ? split.train : stratified_split(split.train, k, seed).train;
            const auto triplets = items_to_triplets(train);
            const auto search = grid_search_a(triplets, embeddings, grid, config.dataset);
            auto& m = result.matrices[s];
            m.seeds.push_back(seed);
            m.scores[0][r] = original;
            m.scores[1][r] = eval_choice(split.test, embeddings, &search.best_weights).accuracy;
            m.best_a[r] = search.best_a;
        }
    }
    return result;
}

nlohmann::ordered_json to_json(const ExperimentResult& result) {
    nlohmann::ordered_json doc;
    doc["format"] = kExperimentFormat;
    doc["dataset"] = result.config.dataset;
    doc["base_seed"] = result.config.base_seed;
    doc["repeats"] = result.config.repeats;
    doc["train_sizes"] = result.config.train_sizes;
    doc["grid"] = result.config.grid;
    doc["n_items"] = result.n_items;
    doc["n_test"] = result.n_test;
    doc["matrices"] = nlohmann::ordered_json::array();
    for (const auto& m : result.matrices) {
        doc["matrices"].push_back(to_json(m));
    }
    return doc;
}

std::string to_csv(const ExperimentResult& result) {
    std::string out = kRunMatrixCsvHeader;
    for (const auto& m : result.matrices) {
        out += to_csv_rows(m);
    }
    return out;
}

}  // namespace negadapt
