// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. The planted corpus directory (written by
// tests/fixtures/gen_planted.py) is the only argument.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "negadapt/adapter.hpp"
#include "negadapt/datasets.hpp"
#include "negadapt/embed_store.hpp"
#include "negadapt/error.hpp"
#include "negadapt/evaluate.hpp"
#include "negadapt/stats.hpp"
#include "negadapt/vector_core.hpp"
#include "support/mock_provider.hpp"
#include "support/random_vectors.hpp"
#include "support/temp_dir.hpp"
#include "support/wilcoxon_oracle.hpp"

using namespace negadapt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double x) {
    std::ostringstream s;
    s << x;
    return s.str();
}

struct CliRun {
    int code = -1;
    std::string out;
    std::string err;
};

CliRun cli_run(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const cli::EnvLookup no_env = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
    CliRun r;
    r.code = cli::run_cli(args, out, err, no_env);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// Cosine in long double from the raw values, sharing nothing with the library.
double reference_cosine(std::span<const double> x, std::span<const double> y) {
    long double xy = 0;
    long double xx = 0;
    long double yy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        xy += static_cast<long double>(x[k]) * y[k];
        xx += static_cast<long double>(x[k]) * x[k];
        yy += static_cast<long double>(y[k]) * y[k];
    }
    return static_cast<double>(xy / std::sqrt(xx * yy));
}

Verdict a1_decomposition(const fs::path&) {
    const auto start = Clock::now();
    std::mt19937_64 rng(1);
    const std::size_t dims[] = {2, 8, 64, 1024, 4096};
    double worst_identity = 0.0;
    double worst_reference = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto dim = dims[i % 5];
        const auto x = testing::random_vector(rng, dim);
        const auto y = testing::random_vector(rng, dim);
        const double c = cosine(x, y);
        worst_identity = std::max(worst_identity, std::fabs(cosine_decompose(x, y).sum() - c));
        worst_reference = std::max(worst_reference, std::fabs(c - reference_cosine(x.values(), y.values())));
    }
    const double elapsed = seconds_since(start);
    return {worst_identity < 1e-9 && worst_reference < 1e-9 && elapsed < 5.0,
            "max |sum(u) - cos| = " + fmt(worst_identity) + ", max |cos - reference| = " + fmt(worst_reference) +
                ", " + fmt(elapsed) + " s"};
}

Verdict a2_neutrality(const fs::path&) {
    const auto start = Clock::now();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    EmbeddingTable table;
    std::vector<ScoredPair> pairs;
    std::vector<ChoiceItem> items;
    for (int i = 0; i < 200; ++i) {
        const auto id = std::to_string(i);
        for (const char* role : {"s1 ", "s2 ", "neg ", "alt "}) {
            table.insert(role + id, testing::random_vector(rng, 48));
        }
        pairs.push_back({id, "s1 " + id, "s2 " + id, unit(rng), "neg " + id});
        items.push_back({id, "s1 " + id, {"s2 " + id, "neg " + id, "alt " + id}, i % 3, std::nullopt});
    }
    const auto triplets = pairs_to_triplets(pairs, 0.0).triplets;
    const auto w = learn_weights(triplets, table, 0.0);

    double worst = 0.0;
    for (const auto& p : pairs) {
        for (const auto* other : {&p.sentence2, &*p.neg_sentence1}) {
            const auto& a = table.at(p.sentence1);
            const auto& b = table.at(*other);
            worst = std::max(worst, std::fabs(weighted_cosine(a, b, w) - cosine(a, b)));
        }
    }
    const auto plain = eval_stsb(pairs, table);
    const auto weighted = eval_stsb(pairs, table, &w);
    const auto plain_choice = eval_choice(items, table);
    const auto weighted_choice = eval_choice(items, table, &w);
    const bool same_accuracy = plain.accuracy == weighted.accuracy && plain.n_correct == weighted.n_correct &&
                               plain_choice.accuracy == weighted_choice.accuracy &&
                               plain_choice.tied_items == weighted_choice.tied_items;
    const double pearson_gap = std::fabs(*plain.pearson - *weighted.pearson);
    const double elapsed = seconds_since(start);
    return {w.is_uniform() && worst < 1e-9 && pearson_gap < 1e-9 && same_accuracy && elapsed < 5.0,
            "max similarity gap " + fmt(worst) + ", pearson gap " + fmt(pearson_gap) + ", stsb acc " +
                fmt(plain.accuracy) + " vs " + fmt(weighted.accuracy) + ", choice acc " +
                fmt(plain_choice.accuracy) + " vs " + fmt(weighted_choice.accuracy) + ", " + fmt(elapsed) + " s"};
}

Verdict a3_softmax(const fs::path&) {
    const auto w = softmax_weights(ContributionVector{{1.0, 0.0}, 1}, 1.0);
    const double e = std::exp(1.0);
    const bool closed_form = std::fabs(w[0] - e / (1.0 + e)) < 1e-9 && std::fabs(w[1] - 1.0 / (1.0 + e)) < 1e-9 &&
                             std::fabs(w[0] - 0.7310585786300049) < 1e-9 &&
                             std::fabs(w[1] - 0.2689414213699951) < 1e-9;

    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dim_of(1, 64);
    std::uniform_real_distribution<double> value(-1.0, 1.0);
    std::uniform_real_distribution<double> temperature(0.0, 10.0);
    int violations = 0;
    for (int draw = 0; draw < 1000; ++draw) {
        ContributionVector v{std::vector<double>(dim_of(rng)), 1};
        for (auto& x : v.values) {
            x = value(rng);
        }
        const double a = temperature(rng);
        const auto s = softmax_weights(v, a);
        double total = 0.0;
        for (std::size_t i = 0; i < s.dim(); ++i) {
            total += s[i];
            violations += !(s[i] > 0.0);
            for (std::size_t j = 0; j < s.dim(); ++j) {
                if (v.values[i] > v.values[j]) {
                    violations += s[i] < s[j];
                    violations += v.values[i] - v.values[j] > 1e-6 && a > 1e-6 && !(s[i] > s[j]);
                }
            }
        }
        violations += std::fabs(total - 1.0) > 1e-12;
    }
    return {closed_form && violations == 0, "w = (" + fmt(w[0]) + ", " + fmt(w[1]) + "), " +
                                                std::to_string(violations) + " invariant violations in 1000 draws"};
}

struct Planted {
    std::vector<NegationTriplet> train;
    std::vector<ChoiceItem> items;
    StoreLookup lookup;
};

Planted load_planted(const fs::path& dir) {
    return {load_triplets(dir / "train_triplets.jsonl"), load_choice_items(dir / "items.jsonl"),
            StoreLookup(read_store(dir / "vectors.jsonl"))};
}

Verdict a4_planted(const fs::path& dir) {
    const auto start = Clock::now();
    const auto planted = load_planted(dir);
    const auto search = grid_search_a(planted.train, planted.lookup);
    const auto& w = search.best_weights;
    std::size_t argmax = 0;
    for (std::size_t k = 1; k < w.dim(); ++k) {
        if (w[k] > w[argmax]) {
            argmax = k;
        }
    }
    double best_train = 0.0;
    for (const auto& [a, acc] : search.train_accuracy_by_a) {
        if (a == search.best_a) {
            best_train = acc;
        }
    }
    const auto plain = eval_choice(planted.items, planted.lookup);
    const auto weighted = eval_choice(planted.items, planted.lookup, &w);
    const double elapsed = seconds_since(start);
    return {planted.train.size() == 200 && w.dim() == 64 && argmax == 7 && search.best_a > 0.0 &&
                weighted.accuracy >= 0.95 && plain.accuracy <= 0.45 && elapsed < 30.0,
            std::to_string(planted.train.size()) + " triplets, argmax weight dim " + std::to_string(argmax) +
                ", best a " + fmt(search.best_a) + " (train acc " + fmt(best_train) + "), test acc weighted " +
                fmt(weighted.accuracy) + " / unweighted " + fmt(plain.accuracy) + " on " +
                std::to_string(planted.items.size()) + " items, " + fmt(elapsed) + " s"};
}

Verdict a5_wilcoxon(const fs::path&) {
    const auto start = Clock::now();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> small(-6, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    int compared = 0;
    int mismatches = 0;
    for (std::size_t n = 1; n <= 12; ++n) {
        for (int trial = 0; trial < 200; ++trial) {
            // Half the draws are small integers, so ties and zeros occur.
            std::vector<double> d(n);
            bool any_nonzero = false;
            for (auto& x : d) {
                x = trial % 2 == 0 ? static_cast<double>(small(rng)) : gauss(rng);
                any_nonzero = any_nonzero || x != 0.0;
            }
            if (!any_nonzero) {
                d[0] = 1.0;
            }
            const double expected = testing::brute_force_wilcoxon_p(d);
            std::vector<double> magnitudes;
            double w_plus = 0.0;
            double total = 0.0;
            for (double x : d) {
                if (x != 0.0) {
                    magnitudes.push_back(std::fabs(x));
                }
            }
            const auto ranks = rank_average(magnitudes);
            for (std::size_t i = 0, j = 0; i < d.size(); ++i) {
                if (d[i] != 0.0) {
                    total += ranks[j];
                    w_plus += d[i] > 0.0 ? ranks[j] : 0.0;
                    ++j;
                }
            }
            ++compared;
            mismatches += wilcoxon_exact_p(ranks, std::min(w_plus, total - w_plus)) != expected;
            // The full test needs five non-zero differences.
            if (magnitudes.size() >= 5) {
                const std::vector<double> zeros(n, 0.0);
                const auto r = wilcoxon_signed_rank(d, zeros);
                ++compared;
                mismatches += !r.exact || r.p_value != expected;
            }
        }
    }
    const std::vector<double> raw{0.01, 0.04, 0.03};
    const auto adjusted = holm_correct(raw);
    const bool holm = std::fabs(adjusted[0] - 0.03) < 1e-12 && std::fabs(adjusted[1] - 0.06) < 1e-12 &&
                      std::fabs(adjusted[2] - 0.06) < 1e-12;
    const double elapsed = seconds_since(start);
    return {mismatches == 0 && holm && elapsed < 60.0,
            std::to_string(compared) + " p-values vs enumeration (n = 1..12, 200 vectors each), " + std::to_string(mismatches) +
                " mismatches; holm = (" + fmt(adjusted[0]) + ", " + fmt(adjusted[1]) + ", " + fmt(adjusted[2]) +
                "), " + fmt(elapsed) + " s"};
}

Verdict a6_experiment(const fs::path& dir) {
    testing::TempDir tmp;
    const auto run_once = [&](const std::string& name) {
        return cli_run({"--vectors", (dir / "vectors.jsonl").string(), "--seed", "42", "experiment",
                        (dir / "items.jsonl").string(), "--out", (tmp / name).string()});
    };
    const auto first = run_once("a.json");
    const auto second = run_once("b.json");
    if (first.code != 0 || second.code != 0) {
        return {false, "experiment exited " + std::to_string(first.code) + "/" + std::to_string(second.code) + ": " +
                           first.err};
    }
    const auto bytes = testing::slurp(tmp / "a.json");
    const bool identical = bytes == testing::slurp(tmp / "b.json");
    const auto doc = nlohmann::json::parse(bytes);
    double worst = 0.0;
    std::size_t cells = 0;
    for (const auto& m : doc["matrices"]) {
        for (std::size_t i = 0; i < m["method_tags"].size(); ++i) {
            const auto scores = m["scores"][i].get<std::vector<double>>();
            const double r = static_cast<double>(scores.size());
            double mean = 0.0;
            for (double s : scores) {
                mean += s;
            }
            mean /= r;
            double ss = 0.0;
            for (double s : scores) {
                ss += (s - mean) * (s - mean);
            }
            const double sd = std::sqrt(ss / (r - 1.0));
            const auto& reported = m["summary"][i];
            worst = std::max(worst, std::fabs(reported["mean"].get<double>() - mean));
            worst = std::max(worst, std::fabs(reported["std"].get<double>() - sd));
            ++cells;
        }
    }
    return {identical && cells == 6 && worst < 1e-12,
            std::string(identical ? "byte-identical" : "DIFFERENT") + " JSON (" + std::to_string(bytes.size()) +
                " bytes), " + std::to_string(cells) + " summary cells, max mean/std gap " + fmt(worst)};
}

Verdict a7_formats(const fs::path&) {
    testing::TempDir tmp;
    std::mt19937_64 rng(7);
    std::vector<EmbeddingVector> vectors;
    vectors.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        vectors.emplace_back("v" + std::to_string(i), testing::gaussian_values(rng, 1024), "m");
    }
    write_store(tmp / "v.jsonl", vectors, StoreFormat::Jsonl);
    write_store(tmp / "v.negv", vectors, StoreFormat::Packed);
    const auto from_jsonl = read_store(tmp / "v.jsonl");
    const auto from_packed = read_store(tmp / "v.negv", "m");
    bool jsonl_exact = from_jsonl == vectors;
    std::size_t packed_off = from_packed.size() == vectors.size() ? 0 : 1;
    double worst_rel = 0.0;
    for (std::size_t i = 0; packed_off == 0 && i < vectors.size(); ++i) {
        packed_off += from_packed[i].id() != vectors[i].id();
        for (std::size_t k = 0; k < 1024; ++k) {
            const double x = vectors[i][k];
            const double y = from_packed[i][k];
            packed_off += y != static_cast<double>(static_cast<float>(x));
            if (x != 0.0) {
                worst_rel = std::max(worst_rel, std::fabs(y - x) / std::fabs(x));
            }
        }
    }
    const bool packed_ok = packed_off == 0 && worst_rel <= std::ldexp(1.0, -24);

    auto bytes = encode_packed(std::span(vectors).first(2));
    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    auto bad_version = bytes;
    bad_version[4] = 2;
    const auto rejects = [](const std::string& b, ErrorCode expected) {
        try {
            decode_packed(b);
        } catch (const Error& e) {
            return e.code() == expected;
        }
        return false;
    };
    const bool rejected = rejects(bad_magic, ErrorCode::FormatError) && rejects(bad_version, ErrorCode::VersionUnsupported);

    testing::MockProvider mock(16);
    HttpProvider provider(ProviderConfig{mock.endpoint()});
    const VectorCache cache(tmp / "cache");
    std::vector<std::string> texts;
    for (int i = 0; i < 50; ++i) {
        texts.push_back("text " + std::to_string(i));
    }
    const auto cold = get_or_fetch(texts, "m", cache, provider);
    const int cold_requests = mock.requests();
    const auto warm = get_or_fetch(texts, "m", cache, provider);
    const int warm_requests = mock.requests() - cold_requests;
    const bool cache_ok = cold_requests > 0 && warm_requests == 0 && warm.summary.hits == 50 &&
                          warm.vectors == cold.vectors;

    return {jsonl_exact && packed_ok && rejected && cache_ok,
            std::string("jsonl ") + (jsonl_exact ? "exact" : "DRIFT") + ", packed max rel err " + fmt(worst_rel) +
                " (bound 2^-24), bad magic/version " + (rejected ? "rejected" : "ACCEPTED") +
                ", warm cache HTTP requests " + std::to_string(warm_requests) + " (cold " +
                std::to_string(cold_requests) + ")"};
}

Verdict a8_diagnosis(const fs::path& dir) {
    testing::TempDir tmp;
    const auto vectors = (dir / "vectors.jsonl").string();
    const auto learned = cli_run({"--vectors", vectors, "learn", (dir / "train_triplets.jsonl").string(), "--grid",
                                  "--out", (tmp / "w.json").string()});
    const auto before = cli_run({"--vectors", vectors, "diagnose", (dir / "pairs.tsv").string(), "--out",
                                 (tmp / "before.json").string()});
    const auto after = cli_run({"--vectors", vectors, "diagnose", (dir / "pairs.tsv").string(), "--weights",
                                (tmp / "w.json").string(), "--out", (tmp / "after.json").string()});
    if (learned.code != 0 || before.code != 0 || after.code != 0) {
        return {false, "cli failed: " + learned.err + before.err + after.err};
    }
    const auto b = nlohmann::json::parse(testing::slurp(tmp / "before.json"))["groups"][4];
    const auto a = nlohmann::json::parse(testing::slurp(tmp / "after.json"))["groups"][4];
    const double frac_before = b["frac_neg_wins"].get<double>();
    const double frac_after = a["frac_neg_wins"].get<double>();
    return {b["n_pairs"].get<int>() > 0 && frac_before >= 0.9 && frac_after <= 0.1,
            "group 5 (" + std::to_string(b["n_pairs"].get<int>()) + " pairs): frac_neg_wins " + fmt(frac_before) +
                " unweighted, " + fmt(frac_after) + " weighted"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: negadapt_acceptance <planted corpus dir>\n";
        return 2;
    }
    const fs::path planted = argv[1];
    const std::vector<std::pair<std::string, std::function<Verdict(const fs::path&)>>> criteria{
        {"A1 decomposition identity", a1_decomposition},
        {"A2 a=0 neutrality", a2_neutrality},
        {"A3 softmax closed form and invariants", a3_softmax},
        {"A4 planted-dimension recovery", a4_planted},
        {"A5 exact wilcoxon and holm", a5_wilcoxon},
        {"A6 experiment determinism", a6_experiment},
        {"A7 store round-trips and cache", a7_formats},
        {"A8 diagnosis before/after", a8_diagnosis},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        Verdict v;
        try {
            v = check(planted);
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failures += !v.pass;
        std::cout << (v.pass ? "PASS " : "FAIL ") << name << ": " << v.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
