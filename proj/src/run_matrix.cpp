#include "negadapt/run_matrix.hpp"

#include <cmath>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

using detail::format_double;

void validate(const RunMatrix& m) {
    if (m.scores.size() != m.method_tags.size()) {
        throw Error(ErrorCode::InvalidArgument, "run matrix has " + std::to_string(m.scores.size()) +
                                                    " score rows for " + std::to_string(m.method_tags.size()) +
                                                    " methods");
    }
    if (!m.seeds.empty() && m.seeds.size() != m.run_count) {
        throw Error(ErrorCode::InvalidArgument, "run matrix seed count differs from run count");
    }
    for (std::size_t i = 0; i < m.scores.size(); ++i) {
        if (m.scores[i].size() != m.run_count) {
            throw Error(ErrorCode::InvalidArgument, "method " + m.method_tags[i] + " lacks some runs");
        }
        for (double s : m.scores[i]) {
            if (!(s >= 0.0 && s <= 1.0)) {
                throw Error(ErrorCode::InvalidArgument,
                            "score " + format_double(s) + " of " + m.method_tags[i] + " outside [0, 1]");
            }
        }
    }
}

std::vector<MethodSummary> summarize(const RunMatrix& m) {
    validate(m);
    std::vector<MethodSummary> out;
    for (std::size_t i = 0; i < m.method_tags.size(); ++i) {
        MethodSummary s{m.method_tags[i], 0.0, std::nullopt};
        const auto& row = m.scores[i];
        if (row.empty()) {
            out.push_back(s);
            continue;
        }
        double sum = 0.0;
        for (double x : row) {
            sum += x;
        }
        s.mean = sum / static_cast<double>(row.size());
        if (row.size() >= 2) {
            double ss = 0.0;
            for (double x : row) {
                ss += (x - s.mean) * (x - s.mean);
            }
            s.std = std::sqrt(ss / static_cast<double>(row.size() - 1));
        }
        out.push_back(s);
    }
    return out;
}

nlohmann::ordered_json to_json(const RunMatrix& m) {
    nlohmann::ordered_json doc;
    doc["train_size"] = m.train_size;
    doc["run_count"] = m.run_count;
    doc["method_tags"] = m.method_tags;
    doc["seeds"] = m.seeds;
    doc["scores"] = m.scores;
    doc["best_a"] = m.best_a;
    auto& summary = doc["summary"] = nlohmann::ordered_json::array();
    for (const auto& s : summarize(m)) {
        summary.push_back({{"method", s.method},
                           {"mean", s.mean},
                           {"std", s.std ? nlohmann::ordered_json(*s.std) : nlohmann::ordered_json(nullptr)}});
    }
    return doc;
}

RunMatrix run_matrix_from_json(const nlohmann::json& doc) {
    RunMatrix m;
    try {
        m.train_size = doc.value("train_size", std::size_t{0});
        m.method_tags = doc.at("method_tags").get<std::vector<std::string>>();
        m.scores = doc.at("scores").get<std::vector<std::vector<double>>>();
        m.run_count = doc.value("run_count", m.scores.empty() ? std::size_t{0} : m.scores.front().size());
        m.seeds = doc.value("seeds", std::vector<std::uint64_t>{});
        m.best_a = doc.value("best_a", std::vector<double>{});
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("bad run matrix (") + e.what() + ")");
    }
    validate(m);
    return m;
}

std::string to_csv_rows(const RunMatrix& m) {
    std::string out;
    for (std::size_t i = 0; i < m.method_tags.size(); ++i) {
        for (std::size_t r = 0; r < m.run_count; ++r) {
            out += m.method_tags[i] + "," + std::to_string(r) + "," +
                   (r < m.seeds.size() ? std::to_string(m.seeds[r]) : std::string()) + "," +
                   std::to_string(m.train_size) + "," + format_double(m.scores[i][r]) + "\n";
        }
    }
    return out;
}

}  // namespace negadapt
