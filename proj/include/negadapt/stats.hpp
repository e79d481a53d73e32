#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "negadapt/run_matrix.hpp"

namespace negadapt {

struct PairwiseTestResult {
    std::string method_a;
    std::string method_b;
    /// min(W+, W-)
    double statistic_w = 0.0;
    /// Two-sided.
    double p_value = 1.0;
    std::size_t n_effective = 0;
    bool exact = false;
};

/// Largest non-zero difference count that still uses exact enumeration.
inline constexpr std::size_t kWilcoxonExactMax = 25;

/// Signed-rank test on x - y with zero differences dropped and average
/// ranks for ties. Throws LengthMismatch, or DegenerateInput when fewer than
/// five non-zero differences remain.
PairwiseTestResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys,
                                        const std::string& method_a = {}, const std::string& method_b = {});

/// Average ranks (1-based) of the values, ascending.
std::vector<double> rank_average(std::span<const double> values);

/// Exact two-sided p for W = min(W+, W-) given the ranks of the non-zero
/// differences: the share of the 2^n sign assignments whose own min(W+, W-)
/// is at most `w`.
double wilcoxon_exact_p(std::span<const double> ranks, double w);

/// Normal approximation with tie-corrected variance and continuity correction.
double wilcoxon_normal_p(std::span<const double> ranks, double w);

/// Holm step-down adjustment, returned in input order. Throws InvalidPValue
/// for values outside (0, 1] or an empty input.
std::vector<double> holm_correct(std::span<const double> p_values);

/// Per run, rank 1 is the highest score (ties averaged); then averaged over
/// runs. Output follows the matrix's method order.
std::vector<std::pair<std::string, double>> average_ranks(const RunMatrix& matrix);

struct CdDiagramData {
    /// Sorted by average rank ascending; ties keep input order.
    std::vector<std::string> method_tags;
    std::vector<double> avg_ranks;
    /// Index sets into method_tags.
    std::vector<std::vector<std::size_t>> cliques;
    double alpha = 0.0;
    std::vector<PairwiseTestResult> tests;
    /// Holm-adjusted p, aligned with `tests`.
    std::vector<double> adjusted_p;
    std::vector<std::string> notes;
};

inline constexpr double kDefaultCdAlpha = 1e-5;

/// Pairwise Wilcoxon tests over the runs of every pair of methods, Holm
/// across the family, and maximal cliques of the "not significantly
/// different" graph. A pair with too few non-zero differences gets p = 1
/// and a note.
CdDiagramData cd_data(const RunMatrix& matrix, double alpha = kDefaultCdAlpha);

inline constexpr const char* kCdFormat = "negadapt-cd/1";

nlohmann::ordered_json to_json(const CdDiagramData& cd);
/// method,avg_rank
std::string ranks_csv(const CdDiagramData& cd);
/// method_a,method_b,statistic_w,p_value,adjusted_p,n_effective,exact,connected
std::string edges_csv(const CdDiagramData& cd);

}  // namespace negadapt
