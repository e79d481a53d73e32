#include "negadapt/diagnose.hpp"

#include <cmath>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

using detail::format_double;

namespace {

DiagnosisReport run(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                    const WeightVector* w, const std::string& model_tag, std::size_t bins) {
    if (bins == 0) {
        throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
    }
    DiagnosisReport report;
    report.model_tag = model_tag;
    report.bins = bins;
    if (w != nullptr) {
        report.a = w->a();
        report.model_tag += "+weights(a=" + format_double(w->a()) + ")";
    }

    constexpr std::array<double, 6> edges{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    std::array<double, 5> sum12{};
    std::array<double, 5> sum1n{};
    for (std::size_t g = 0; g < 5; ++g) {
        auto& group = report.groups[g];
        group.index = static_cast<int>(g) + 1;
        group.lower = edges[g];
        group.upper = edges[g + 1];
        group.hist_sim12.assign(bins, 0);
        group.hist_sim1neg1.assign(bins, 0);
    }

    for (const auto& pair : pairs) {
        if (!pair.neg_sentence1) {
            report.excluded_missing_negation.push_back(pair.pair_id);
            continue;
        }
        const auto& s1 = embeddings.at(pair.sentence1);
        const auto& s2 = embeddings.at(pair.sentence2);
        const auto& neg = embeddings.at(*pair.neg_sentence1);
        if (s1.dim() != s2.dim() || s1.dim() != neg.dim()) {
            throw Error(ErrorCode::DimensionMismatch, "pair " + pair.pair_id + " mixes dimensions");
        }
        const double sim12 = w != nullptr ? weighted_cosine(s1, s2, *w) : cosine(s1, s2);
        const double sim1n = w != nullptr ? weighted_cosine(s1, neg, *w) : cosine(s1, neg);

        const auto g = static_cast<std::size_t>(group_index(pair.score) - 1);
        auto& group = report.groups[g];
        ++group.n_pairs;
        ++group.hist_sim12[histogram_bin(sim12, bins)];
        ++group.hist_sim1neg1[histogram_bin(sim1n, bins)];
        if (sim1n > sim12) {
            ++group.neg_wins;
        }
        sum12[g] += sim12;
        sum1n[g] += sim1n;
    }

    for (std::size_t g = 0; g < 5; ++g) {
        auto& group = report.groups[g];
        if (group.n_pairs > 0) {
            const auto n = static_cast<double>(group.n_pairs);
            group.frac_neg_wins = static_cast<double>(group.neg_wins) / n;
            group.mean_sim12 = sum12[g] / n;
            group.mean_sim1neg1 = sum1n[g] / n;
        }
    }
    return report;
}

nlohmann::ordered_json optional_json(const std::optional<double>& x) {
    return x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json(nullptr);
}

}  // namespace

std::size_t histogram_bin(double similarity, std::size_t bins) {
    const auto b = static_cast<double>(bins);
    if (!(similarity > 0.0)) {
        return 0;
    }
    if (similarity >= 1.0) {
        return bins - 1;
    }
    auto bin = static_cast<std::size_t>(std::floor(similarity * b));
    // Settle rounding in the product against the edges i / bins themselves.
    while (bin > 0 && similarity < static_cast<double>(bin) / b) {
        --bin;
    }
    while (bin + 1 < bins && similarity >= static_cast<double>(bin + 1) / b) {
        ++bin;
    }
    return std::min(bin, bins - 1);
}

DiagnosisReport diagnose(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                         const std::string& model_tag, std::size_t bins) {
    return run(pairs, embeddings, nullptr, model_tag, bins);
}

DiagnosisReport weighted_diagnose(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                                  const WeightVector& w, const std::string& model_tag, std::size_t bins) {
    return run(pairs, embeddings, &w, model_tag, bins);
}

nlohmann::ordered_json to_json(const DiagnosisReport& report) {
    nlohmann::ordered_json doc;
    doc["format"] = kDiagnosisFormat;
    doc["model_tag"] = report.model_tag;
    doc["bins"] = report.bins;
    doc["a"] = optional_json(report.a);
    doc["groups"] = nlohmann::ordered_json::array();
    for (const auto& g : report.groups) {
        nlohmann::ordered_json row;
        row["index"] = g.index;
        row["lower"] = g.lower;
        row["upper"] = g.upper;
        row["n_pairs"] = g.n_pairs;
        row["neg_wins"] = g.neg_wins;
        row["frac_neg_wins"] = optional_json(g.frac_neg_wins);
        row["mean_sim12"] = optional_json(g.mean_sim12);
        row["mean_sim1neg1"] = optional_json(g.mean_sim1neg1);
        row["hist_sim12"] = g.hist_sim12;
        row["hist_sim1neg1"] = g.hist_sim1neg1;
        doc["groups"].push_back(std::move(row));
    }
    doc["excluded_missing_negation"] = report.excluded_missing_negation;
    return doc;
}

std::string to_csv(const DiagnosisReport& report) {
    auto cell = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string(); };
    std::string tag;
    for (char c : report.model_tag) {
        tag += c == '"' ? std::string("\"\"") : std::string(1, c);
    }
    std::string out = "model_tag,group,lower,upper,n_pairs,neg_wins,frac_neg_wins,mean_sim12,mean_sim1neg1\n";
    for (const auto& g : report.groups) {
        out += "\"" + tag + "\"," + std::to_string(g.index) + "," + format_double(g.lower) + "," +
               format_double(g.upper) + "," + std::to_string(g.n_pairs) + "," + std::to_string(g.neg_wins) +
               "," + cell(g.frac_neg_wins) + "," + cell(g.mean_sim12) + "," + cell(g.mean_sim1neg1) + "\n";
    }
    return out;
}

}  // namespace negadapt
