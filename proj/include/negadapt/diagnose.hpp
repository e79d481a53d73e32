#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "negadapt/datasets.hpp"
#include "negadapt/embedding_lookup.hpp"
#include "negadapt/vector_core.hpp"

namespace negadapt {

inline constexpr std::size_t kDefaultHistogramBins = 20;
inline constexpr const char* kDiagnosisFormat = "negadapt-diagnosis/1";

struct GroupDiagnosis {
    int index = 0;
    double lower = 0.0;
    double upper = 0.0;
    std::size_t n_pairs = 0;
    std::size_t neg_wins = 0;
    std::vector<std::size_t> hist_sim12;
    std::vector<std::size_t> hist_sim1neg1;
    /// Absent for an empty group.
    std::optional<double> frac_neg_wins;
    std::optional<double> mean_sim12;
    std::optional<double> mean_sim1neg1;
};

struct DiagnosisReport {
    std::string model_tag;
    std::size_t bins = kDefaultHistogramBins;
    std::optional<double> a;
    std::array<GroupDiagnosis, 5> groups;
    /// Ids of pairs left out because they have no negated sentence.
    std::vector<std::string> excluded_missing_negation;
};

/// Bin i covers [i/bins, (i+1)/bins); the last bin also takes 1.0.
/// Similarities below 0 land in the first bin and above 1 in the last.
std::size_t histogram_bin(double similarity, std::size_t bins = kDefaultHistogramBins);

/// Per group of human score: how Sim(s1, s2) compares with Sim(s1, neg s1).
/// A pair is a "negation win" when Sim(s1, neg s1) > Sim(s1, s2) strictly.
DiagnosisReport diagnose(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                         const std::string& model_tag = {}, std::size_t bins = kDefaultHistogramBins);

/// Same with weighted_cosine; the tag gets a "+weights(a=...)" suffix.
DiagnosisReport weighted_diagnose(std::span<const ScoredPair> pairs, const EmbeddingLookup& embeddings,
                                  const WeightVector& w, const std::string& model_tag = {},
                                  std::size_t bins = kDefaultHistogramBins);

nlohmann::ordered_json to_json(const DiagnosisReport& report);

/// One summary row per group.
std::string to_csv(const DiagnosisReport& report);

}  // namespace negadapt
