#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace negadapt {

/// Accuracy of M methods over R runs (or blocks) at one training size.
struct RunMatrix {
    std::vector<std::string> method_tags;
    std::size_t run_count = 0;
    /// scores[m][r]
    std::vector<std::vector<double>> scores;
    std::size_t train_size = 0;
    std::vector<std::uint64_t> seeds;
    /// Grid-selected a per run, when the runs trained weights.
    std::vector<double> best_a;

    friend bool operator==(const RunMatrix&, const RunMatrix&) = default;
};

/// Throws InvalidArgument when the matrix is ragged, has missing seeds or
/// holds a score outside [0, 1].
void validate(const RunMatrix& matrix);

struct MethodSummary {
    std::string method;
    double mean = 0.0;
    /// Sample standard deviation (divisor R - 1); absent when R < 2.
    std::optional<double> std;
};

std::vector<MethodSummary> summarize(const RunMatrix& matrix);

nlohmann::ordered_json to_json(const RunMatrix& matrix);
RunMatrix run_matrix_from_json(const nlohmann::json& doc);

/// Long form: method,run,seed,train_size,accuracy.
std::string to_csv_rows(const RunMatrix& matrix);
inline constexpr const char* kRunMatrixCsvHeader = "method,run,seed,train_size,accuracy\n";

}  // namespace negadapt
