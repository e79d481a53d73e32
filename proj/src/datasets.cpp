#include "negadapt/datasets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "io_util.hpp"
#include "negadapt/error.hpp"

namespace negadapt {

namespace {

std::optional<double> parse_number(std::string_view field) {
    field = detail::trim(field);
    if (field.empty()) {
        return std::nullopt;
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        fields.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
        if (tab == std::string_view::npos) {
            return fields;
        }
        start = tab + 1;
    }
}

// RFC 4180 fields on a single physical line.
std::optional<std::vector<std::string>> split_csv(std::string_view line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && field.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else if (was_quoted) {
            return std::nullopt;  // text after a closing quote
        } else {
            field += c;
        }
    }
    if (quoted) {
        return std::nullopt;
    }
    fields.push_back(std::move(field));
    return fields;
}

std::string format_number(double value) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, ptr);
}

bool has_field_breakers(const std::string& s) {
    return s.find_first_of("\t\n\r") != std::string::npos;
}

nlohmann::json parse_json_line(const std::string& line, std::size_t line_no,
                               const std::filesystem::path& path, ErrorCode code) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(code, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
}

}  // namespace

ScoredPairFile load_scored_pairs(const std::filesystem::path& path, double score_scale) {
    if (!(score_scale > 0.0) || !std::isfinite(score_scale)) {
        throw Error(ErrorCode::InvalidArgument, "score_scale must be positive");
    }
    const std::string text = detail::read_file(path);
    const bool csv = path.extension() == ".csv";
    ScoredPairFile out;
    bool seen_row = false;
    const auto lines = detail::split_lines(text);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        const std::string& line = lines[i];
        if (detail::trim(line).empty()) {
            continue;
        }
        std::vector<std::string> fields;
        if (csv) {
            auto parsed = split_csv(line);
            if (!parsed) {
                out.rejects.push_back({line_no, "unbalanced or misplaced quotes"});
                seen_row = true;
                continue;
            }
            fields = std::move(*parsed);
        } else {
            fields = split_tabs(line);
        }
        const bool first_row = !seen_row;
        seen_row = true;
        if (fields.size() < 3) {
            out.rejects.push_back({line_no, "expected at least 3 columns, found " +
                                                std::to_string(fields.size())});
            continue;
        }
        if (fields.size() > 4) {
            out.rejects.push_back({line_no, "expected at most 4 columns, found " +
                                                std::to_string(fields.size())});
            continue;
        }
        const auto raw = parse_number(fields[2]);
        if (!raw) {
            if (first_row) {
                out.had_header = true;
            } else {
                out.rejects.push_back({line_no, "score is not numeric"});
            }
            continue;
        }
        if (!std::isfinite(*raw)) {
            out.rejects.push_back({line_no, "score is not finite"});
            continue;
        }
        ScoredPair pair;
        pair.pair_id = std::to_string(line_no);
        pair.sentence1 = std::string(detail::trim(fields[0]));
        pair.sentence2 = std::string(detail::trim(fields[1]));
        if (pair.sentence1.empty() || pair.sentence2.empty()) {
            out.rejects.push_back({line_no, "empty sentence"});
            continue;
        }
        double score = *raw / score_scale;
        if (score < -kScoreClampTolerance || score > 1.0 + kScoreClampTolerance) {
            throw Error(ErrorCode::ScoreOutOfRange, path.string() + ":" + std::to_string(line_no) +
                                                        ": score " + fields[2] +
                                                        " outside [0, " + format_number(score_scale) +
                                                        "]");
        }
        pair.score = std::clamp(score, 0.0, 1.0);
        if (fields.size() == 4) {
            const auto neg = detail::trim(fields[3]);
            if (!neg.empty()) {
                pair.neg_sentence1 = std::string(neg);
            }
        }
        out.pairs.push_back(std::move(pair));
    }
    if (out.pairs.empty()) {
        throw Error(ErrorCode::NoValidRows,
                    path.string() + " (" + std::to_string(out.rejects.size()) + " rejected rows)");
    }
    return out;
}

void save_scored_pairs(const std::filesystem::path& path, std::span<const ScoredPair> pairs) {
    std::string out = "sentence1\tsentence2\tscore\tneg_sentence1\n";
    for (const auto& p : pairs) {
        if (has_field_breakers(p.sentence1) || has_field_breakers(p.sentence2) ||
            (p.neg_sentence1 && has_field_breakers(*p.neg_sentence1))) {
            throw Error(ErrorCode::InvalidArgument,
                        "pair " + p.pair_id + " contains a tab or newline");
        }
        out += p.sentence1 + '\t' + p.sentence2 + '\t' + format_number(p.score) + '\t' +
               p.neg_sentence1.value_or("") + '\n';
    }
    detail::write_file(path, out);
}

int group_index(double score) {
    if (score < 0.2) return 1;
    if (score < 0.4) return 2;
    if (score < 0.6) return 3;
    if (score < 0.8) return 4;
    return 5;
}

std::array<SimilarityGroup, 5> assign_groups(std::span<const ScoredPair> pairs) {
    std::array<SimilarityGroup, 5> groups{{
        {1, 0.0, 0.2, {}},
        {2, 0.2, 0.4, {}},
        {3, 0.4, 0.6, {}},
        {4, 0.6, 0.8, {}},
        {5, 0.8, 1.0, {}},
    }};
    for (const auto& p : pairs) {
        groups[static_cast<std::size_t>(group_index(p.score) - 1)].members.push_back(p.pair_id);
    }
    return groups;
}

std::vector<ChoiceItem> load_choice_items(const std::filesystem::path& path,
                                          std::uint64_t shuffle_seed) {
    const auto lines = detail::split_lines(detail::read_file(path));
    const auto first = std::find_if(lines.begin(), lines.end(),
                                    [](const std::string& l) { return !detail::trim(l).empty(); });
    std::vector<ChoiceItem> items;
    if (first == lines.end()) {
        return items;
    }
    const auto where = [&](std::size_t line_no) {
        return path.string() + ":" + std::to_string(line_no);
    };
    const auto check = [&](const ChoiceItem& item, std::size_t line_no) {
        std::set<std::string> distinct;
        for (const auto& c : item.candidates) {
            if (detail::trim(c).empty()) {
                throw Error(ErrorCode::MalformedGroup, where(line_no) + ": empty candidate");
            }
            distinct.insert(c);
        }
        if (distinct.size() != 3) {
            throw Error(ErrorCode::MalformedGroup, where(line_no) + ": duplicate candidates");
        }
        if (detail::trim(item.anchor).empty()) {
            throw Error(ErrorCode::MalformedGroup, where(line_no) + ": empty anchor");
        }
        if (item.correct_index < 0 || item.correct_index > 2) {
            throw Error(ErrorCode::MalformedGroup, where(line_no) + ": correct_index out of range");
        }
    };

    if (detail::trim(*first).front() == '{') {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (detail::trim(lines[i]).empty()) {
                continue;
            }
            const auto doc = parse_json_line(lines[i], i + 1, path, ErrorCode::MalformedGroup);
            ChoiceItem item;
            try {
                item.item_id = doc.contains("id") ? doc.at("id").get<std::string>()
                                                  : std::to_string(items.size());
                item.anchor = doc.at("anchor").get<std::string>();
                const auto candidates = doc.at("candidates").get<std::vector<std::string>>();
                if (candidates.size() != 3) {
                    throw Error(ErrorCode::MalformedGroup,
                                where(i + 1) + ": expected 3 candidates, found " +
                                    std::to_string(candidates.size()));
                }
                std::copy(candidates.begin(), candidates.end(), item.candidates.begin());
                item.correct_index = doc.at("correct_index").get<int>();
                if (const auto it = doc.find("stratum"); it != doc.end() && !it->is_null()) {
                    item.stratum = it->get<std::string>();
                }
            } catch (const nlohmann::json::exception& e) {
                throw Error(ErrorCode::MalformedGroup, where(i + 1) + ": " + e.what());
            }
            check(item, i + 1);
            items.push_back(std::move(item));
        }
        return items;
    }

    SplitRng rng(shuffle_seed);
    std::size_t i = 0;
    while (i < lines.size()) {
        if (detail::trim(lines[i]).empty()) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        std::vector<std::string> group;
        while (i < lines.size() && !detail::trim(lines[i]).empty()) {
            group.emplace_back(detail::trim(lines[i]));
            ++i;
        }
        if (group.size() != 4) {
            throw Error(ErrorCode::MalformedGroup,
                        where(start + 1) + ": group has " + std::to_string(group.size()) +
                            " lines, expected 4");
        }
        std::vector<int> order{0, 1, 2};
        rng.shuffle(order);
        ChoiceItem item;
        item.item_id = std::to_string(items.size());
        item.anchor = group[0];
        for (std::size_t slot = 0; slot < 3; ++slot) {
            item.candidates[slot] = group[static_cast<std::size_t>(order[slot]) + 1];
            if (order[slot] == 0) {
                item.correct_index = static_cast<int>(slot);
            }
        }
        check(item, start + 1);
        items.push_back(std::move(item));
    }
    return items;
}

void save_choice_items(const std::filesystem::path& path, std::span<const ChoiceItem> items) {
    std::string out;
    for (const auto& item : items) {
        nlohmann::json doc{{"id", item.item_id},
                           {"anchor", item.anchor},
                           {"candidates", item.candidates},
                           {"correct_index", item.correct_index}};
        if (item.stratum) {
            doc["stratum"] = *item.stratum;
        }
        out += doc.dump() + '\n';
    }
    detail::write_file(path, out);
}

SplitRng::SplitRng(std::uint64_t seed) : engine_(seed) {}

std::uint64_t SplitRng::next() { return engine_(); }

std::uint64_t SplitRng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw Error(ErrorCode::InvalidArgument, "empty sampling range");
    }
    // Reject the low sliver that would bias r % bound.
    const std::uint64_t threshold = (0 - bound) % bound;
    while (true) {
        const std::uint64_t r = engine_();
        if (r >= threshold) {
            return r % bound;
        }
    }
}

double SplitRng::unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

SplitIndices stratified_split_indices(std::span<const std::string> strata, std::size_t train_size,
                                      std::uint64_t seed) {
    const std::size_t n = strata.size();
    if (train_size == 0 || train_size >= n) {
        throw Error(ErrorCode::TrainSizeTooLarge, "train_size " + std::to_string(train_size) +
                                                      " must be in (0, " + std::to_string(n) + ")");
    }
    // Strata in sorted label order; members in input order.
    std::map<std::string, std::vector<std::size_t>> by_stratum;
    for (std::size_t i = 0; i < n; ++i) {
        by_stratum[strata[i]].push_back(i);
    }

    struct Quota {
        std::vector<std::size_t>* members;
        std::size_t take;
        std::size_t remainder;  // numerator of the fractional part, over n
    };
    std::vector<Quota> quotas;
    std::size_t assigned = 0;
    for (auto& [label, members] : by_stratum) {
        const std::size_t exact = train_size * members.size();
        quotas.push_back({&members, exact / n, exact % n});
        assigned += exact / n;
    }
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quotas[a].remainder > quotas[b].remainder;
    });
    for (std::size_t k = 0; assigned < train_size; ++k) {
        ++quotas[order[k % order.size()]].take;
        ++assigned;
    }

    SplitRng rng(seed);
    SplitIndices out;
    for (auto& q : quotas) {
        auto pool = *q.members;
        // Partial Fisher-Yates: the first `take` slots become the sample.
        for (std::size_t i = 0; i < q.take; ++i) {
            std::swap(pool[i], pool[i + rng.below(pool.size() - i)]);
        }
        out.train.insert(out.train.end(), pool.begin(), pool.begin() + static_cast<long>(q.take));
        out.test.insert(out.test.end(), pool.begin() + static_cast<long>(q.take), pool.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

ChoiceSplit stratified_split(std::span<const ChoiceItem> items, std::size_t train_size,
                             std::uint64_t seed) {
    std::vector<std::string> strata;
    const bool any_stratum =
        std::any_of(items.begin(), items.end(), [](const ChoiceItem& c) { return c.stratum.has_value(); });
    if (any_stratum) {
        for (const auto& item : items) {
            strata.push_back(item.stratum.value_or(""));
        }
    } else {
        strata.assign(items.size(), "");
    }
    const auto split = stratified_split_indices(strata, train_size, seed);
    ChoiceSplit out;
    for (auto i : split.train) {
        out.train.push_back(items[i]);
    }
    for (auto i : split.test) {
        out.test.push_back(items[i]);
    }
    return out;
}

TripletExtraction pairs_to_triplets(std::span<const ScoredPair> pairs, double min_score) {
    TripletExtraction out;
    for (const auto& p : pairs) {
        if (p.score < min_score) {
            continue;
        }
        if (!p.neg_sentence1) {
            ++out.skipped_missing_negation;
            continue;
        }
        NegationTriplet t{p.sentence1, p.sentence2, *p.neg_sentence1, p.pair_id};
        try {
            validate(t);
        } catch (const Error&) {
            ++out.skipped_invalid;
            continue;
        }
        out.triplets.push_back(std::move(t));
    }
    return out;
}

std::vector<NegationTriplet> items_to_triplets(std::span<const ChoiceItem> items) {
    std::vector<NegationTriplet> out;
    out.reserve(items.size() * 2);
    for (const auto& item : items) {
        const auto& correct = item.candidates[static_cast<std::size_t>(item.correct_index)];
        int wrong = 0;
        for (int k = 0; k < 3; ++k) {
            if (k == item.correct_index) {
                continue;
            }
            out.push_back({item.anchor, correct, item.candidates[static_cast<std::size_t>(k)],
                           item.item_id + "/" + std::to_string(wrong++)});
        }
    }
    return out;
}

std::vector<NegationTriplet> load_triplets(const std::filesystem::path& path) {
    const auto lines = detail::split_lines(detail::read_file(path));
    std::vector<NegationTriplet> out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (detail::trim(lines[i]).empty()) {
            continue;
        }
        const auto doc = parse_json_line(lines[i], i + 1, path, ErrorCode::FormatError);
        try {
            NegationTriplet t{doc.at("anchor").get<std::string>(),
                              doc.at("paraphrase").get<std::string>(),
                              doc.at("negation").get<std::string>(),
                              doc.contains("id") ? doc.at("id").get<std::string>()
                                                 : std::to_string(out.size())};
            out.push_back(std::move(t));
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::FormatError,
                        path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

void save_triplets(const std::filesystem::path& path, std::span<const NegationTriplet> triplets) {
    std::string out;
    for (const auto& t : triplets) {
        out += nlohmann::json{{"anchor", t.anchor},
                              {"paraphrase", t.paraphrase},
                              {"negation", t.negation},
                              {"id", t.triplet_id}}
                   .dump() +
               '\n';
    }
    detail::write_file(path, out);
}

}  // namespace negadapt
