#include "negadapt/stats.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

using detail::format_double;

std::vector<double> rank_average(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // Positions i..j (0-based) share the mean of ranks i+1..j+1.
        const double rank = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = rank;
        }
        i = j + 1;
    }
    return ranks;
}

double wilcoxon_exact_p(std::span<const double> ranks, double w) {
    // Ranks are multiples of 1/2, so doubled ranks are integers and the
    // distribution of 2*W+ over all sign patterns is a subset-sum count.
    std::vector<std::size_t> doubled;
    std::size_t total = 0;
    for (double r : ranks) {
        doubled.push_back(static_cast<std::size_t>(std::llround(2.0 * r)));
        total += doubled.back();
    }
    if (ranks.size() > 62) {
        throw Error(ErrorCode::InvalidArgument, "exact Wilcoxon supports at most 62 differences");
    }
    std::vector<std::uint64_t> count(total + 1, 0);
    count[0] = 1;
    for (std::size_t d : doubled) {
        for (std::size_t s = total; s + 1 > d; --s) {
            count[s] += count[s - d];
        }
    }
    const double w2 = 2.0 * w;
    std::uint64_t at_most = 0;
    for (std::size_t s = 0; s <= total && static_cast<double>(s) <= w2; ++s) {
        at_most += count[s];
    }
    // min(W+, W-) <= w happens for W+ <= w or W+ >= T - w; the two tails
    // are mirror images and overlap only when w >= T/2, where p is 1.
    const double n_patterns = std::ldexp(1.0, static_cast<int>(ranks.size()));
    return std::min(1.0, 2.0 * static_cast<double>(at_most) / n_patterns);
}

double wilcoxon_normal_p(std::span<const double> ranks, double w) {
    const auto n = static_cast<double>(ranks.size());
    const double mean = n * (n + 1.0) / 4.0;
    double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    std::vector<double> sorted(ranks.begin(), ranks.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) {
            ++j;
        }
        const auto t = static_cast<double>(j - i);
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    if (!(var > 0.0)) {
        return 1.0;
    }
    const double z = std::max(0.0, std::abs(w - mean) - 0.5) / std::sqrt(var);
    return std::clamp(std::erfc(z / std::sqrt(2.0)), DBL_MIN, 1.0);
}

PairwiseTestResult wilcoxon_signed_rank(std::span<const double> xs, std::span<const double> ys,
                                        const std::string& method_a, const std::string& method_b) {
    if (xs.size() != ys.size()) {
        throw Error(ErrorCode::LengthMismatch, "Wilcoxon needs paired samples (" + std::to_string(xs.size()) +
                                                   " vs " + std::to_string(ys.size()) + ")");
    }
    std::vector<double> diffs;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - ys[i];
        if (!std::isfinite(d)) {
            throw Error(ErrorCode::NonFiniteInput, "non-finite difference at position " + std::to_string(i));
        }
        if (d != 0.0) {
            diffs.push_back(d);
        }
    }
    if (diffs.size() < 5) {
        throw Error(ErrorCode::DegenerateInput, std::to_string(diffs.size()) +
                                                    " non-zero differences; at least 5 are needed");
    }
    std::vector<double> magnitudes;
    for (double d : diffs) {
        magnitudes.push_back(std::abs(d));
    }
    const auto ranks = rank_average(magnitudes);
    double w_plus = 0.0;
    double w_minus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        (diffs[i] > 0.0 ? w_plus : w_minus) += ranks[i];
    }

    PairwiseTestResult result;
    result.method_a = method_a;
    result.method_b = method_b;
    result.statistic_w = std::min(w_plus, w_minus);
    result.n_effective = diffs.size();
    result.exact = diffs.size() <= kWilcoxonExactMax;
    result.p_value = result.exact ? wilcoxon_exact_p(ranks, result.statistic_w)
                                  : wilcoxon_normal_p(ranks, result.statistic_w);
    return result;
}

std::vector<double> holm_correct(std::span<const double> p_values) {
    if (p_values.empty()) {
        throw Error(ErrorCode::InvalidPValue, "no p-values to correct");
    }
    for (double p : p_values) {
        if (!(p > 0.0 && p <= 1.0)) {
            throw Error(ErrorCode::InvalidPValue, "p-value " + format_double(p) + " outside (0, 1]");
        }
    }
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m);
    double running = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double scaled = std::min(1.0, static_cast<double>(m - j) * p_values[order[j]]);
        running = std::max(running, scaled);
        adjusted[order[j]] = running;
    }
    return adjusted;
}

std::vector<std::pair<std::string, double>> average_ranks(const RunMatrix& matrix) {
    validate(matrix);
    if (matrix.run_count == 0) {
        throw Error(ErrorCode::InvalidArgument, "average ranks need at least one run");
    }
    const std::size_t m = matrix.method_tags.size();
    std::vector<double> sums(m, 0.0);
    std::vector<double> column(m);
    for (std::size_t r = 0; r < matrix.run_count; ++r) {
        for (std::size_t i = 0; i < m; ++i) {
            column[i] = -matrix.scores[i][r];
        }
        const auto ranks = rank_average(column);
        for (std::size_t i = 0; i < m; ++i) {
            sums[i] += ranks[i];
        }
    }
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < m; ++i) {
        out.emplace_back(matrix.method_tags[i], sums[i] / static_cast<double>(matrix.run_count));
    }
    return out;
}

namespace {

void bron_kerbosch(std::vector<std::size_t>& r, std::vector<std::size_t> p, std::vector<std::size_t> x,
                   const std::vector<std::vector<bool>>& adj, std::vector<std::vector<std::size_t>>& out) {
    if (p.empty() && x.empty()) {
        auto clique = r;
        std::sort(clique.begin(), clique.end());
        out.push_back(std::move(clique));
        return;
    }
    while (!p.empty()) {
        const std::size_t v = p.front();
        std::vector<std::size_t> p2;
        std::vector<std::size_t> x2;
        for (std::size_t u : p) {
            if (adj[v][u]) p2.push_back(u);
        }
        for (std::size_t u : x) {
            if (adj[v][u]) x2.push_back(u);
        }
        r.push_back(v);
        bron_kerbosch(r, std::move(p2), std::move(x2), adj, out);
        r.pop_back();
        p.erase(p.begin());
        x.push_back(v);
    }
}

}  // namespace

CdDiagramData cd_data(const RunMatrix& matrix, double alpha) {
    validate(matrix);
    const std::size_t m = matrix.method_tags.size();
    if (m < 2) {
        throw Error(ErrorCode::InvalidArgument, "a comparison needs at least two methods");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    }
    const auto ranks = average_ranks(matrix);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return ranks[a].second < ranks[b].second; });

    CdDiagramData cd;
    cd.alpha = alpha;
    for (std::size_t i : order) {
        cd.method_tags.push_back(matrix.method_tags[i]);
        cd.avg_ranks.push_back(ranks[i].second);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<double> raw;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            const auto& ta = cd.method_tags[a];
            const auto& tb = cd.method_tags[b];
            PairwiseTestResult t;
            try {
                t = wilcoxon_signed_rank(matrix.scores[order[a]], matrix.scores[order[b]], ta, tb);
            } catch (const Error& e) {
                if (e.code() != ErrorCode::DegenerateInput) {
                    throw;
                }
                t.method_a = ta;
                t.method_b = tb;
                t.p_value = 1.0;
                cd.notes.push_back(ta + " vs " + tb + ": " + e.what() + "; treated as not different");
            }
            pairs.emplace_back(a, b);
            raw.push_back(t.p_value);
            cd.tests.push_back(std::move(t));
        }
    }
    cd.adjusted_p = holm_correct(raw);

    std::vector<std::vector<bool>> adj(m, std::vector<bool>(m, false));
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (cd.adjusted_p[k] >= alpha) {
            adj[pairs[k].first][pairs[k].second] = true;
            adj[pairs[k].second][pairs[k].first] = true;
        }
    }
    std::vector<std::size_t> r;
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), 0);
    bron_kerbosch(r, all, {}, adj, cd.cliques);
    std::sort(cd.cliques.begin(), cd.cliques.end());
    return cd;
}

nlohmann::ordered_json to_json(const CdDiagramData& cd) {
    nlohmann::ordered_json doc;
    doc["format"] = kCdFormat;
    doc["alpha"] = cd.alpha;
    doc["methods"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cd.method_tags.size(); ++i) {
        doc["methods"].push_back({{"method", cd.method_tags[i]}, {"avg_rank", cd.avg_ranks[i]}});
    }
    doc["cliques"] = nlohmann::ordered_json::array();
    for (const auto& clique : cd.cliques) {
        auto names = nlohmann::ordered_json::array();
        for (std::size_t i : clique) {
            names.push_back(cd.method_tags[i]);
        }
        doc["cliques"].push_back(std::move(names));
    }
    doc["tests"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < cd.tests.size(); ++k) {
        const auto& t = cd.tests[k];
        doc["tests"].push_back({{"method_a", t.method_a},
                                {"method_b", t.method_b},
                                {"statistic_w", t.statistic_w},
                                {"p_value", t.p_value},
                                {"adjusted_p", cd.adjusted_p[k]},
                                {"n_effective", t.n_effective},
                                {"exact", t.exact},
                                {"connected", cd.adjusted_p[k] >= cd.alpha}});
    }
    doc["notes"] = cd.notes;
    return doc;
}

std::string ranks_csv(const CdDiagramData& cd) {
    std::string out = "method,avg_rank\n";
    for (std::size_t i = 0; i < cd.method_tags.size(); ++i) {
        out += cd.method_tags[i] + "," + format_double(cd.avg_ranks[i]) + "\n";
    }
    return out;
}

std::string edges_csv(const CdDiagramData& cd) {
    std::string out = "method_a,method_b,statistic_w,p_value,adjusted_p,n_effective,exact,connected\n";
    for (std::size_t k = 0; k < cd.tests.size(); ++k) {
        const auto& t = cd.tests[k];
        out += t.method_a + "," + t.method_b + "," + format_double(t.statistic_w) + "," +
               format_double(t.p_value) + "," + format_double(cd.adjusted_p[k]) + "," +
               std::to_string(t.n_effective) + "," + (t.exact ? "true" : "false") + "," +
               (cd.adjusted_p[k] >= cd.alpha ? "true" : "false") + "\n";
    }
    return out;
}

}  // namespace negadapt
