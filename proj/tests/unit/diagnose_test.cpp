#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "negadapt/adapter.hpp"
#include "negadapt/diagnose.hpp"
#include "negadapt/error.hpp"
#include "support/planted.hpp"
#include "support/random_vectors.hpp"

using namespace negadapt;

namespace {

EmbeddingVector at_cosine(double c, const std::string& id) {
    return EmbeddingVector(id, {c, std::sqrt(1.0 - c * c)});
}

}  // namespace

TEST(HistogramBin, Edges) {
    EXPECT_EQ(histogram_bin(0.0), 0u);
    EXPECT_EQ(histogram_bin(0.049999), 0u);
    EXPECT_EQ(histogram_bin(0.05), 1u);
    EXPECT_EQ(histogram_bin(0.15), 3u);
    EXPECT_EQ(histogram_bin(0.95), 19u);
    EXPECT_EQ(histogram_bin(1.0), 19u);
    EXPECT_EQ(histogram_bin(-0.3), 0u);
    EXPECT_EQ(histogram_bin(0.5, 2), 1u);
    for (int i = 0; i < 20; ++i) {
        EXPECT_EQ(histogram_bin(static_cast<double>(i) / 20.0), static_cast<std::size_t>(i));
        EXPECT_EQ(histogram_bin(std::nextafter(static_cast<double>(i + 1) / 20.0, 0.0)), static_cast<std::size_t>(i));
    }
}

TEST(Diagnose, WinsAreStrict) {
    EmbeddingTable table;
    table.insert("s", EmbeddingVector("s", {1.0, 0.0}));
    table.insert("p60", at_cosine(0.60, "p60"));
    table.insert("n95", at_cosine(0.95, "n95"));
    table.insert("p70", at_cosine(0.70, "p70"));
    std::vector<ScoredPair> pairs{
        {"1", "s", "p60", 0.9, std::string("n95")},  // win
        {"2", "s", "p70", 0.9, std::string("p70")},  // tie, not a win
        {"3", "s", "p70", 0.9, std::nullopt},        // excluded
        {"4", "s", "n95", 0.1, std::string("p60")},  // group 1, no win
    };
    const auto r = diagnose(pairs, table, "m");
    EXPECT_EQ(r.model_tag, "m");
    const auto& g5 = r.groups[4];
    EXPECT_EQ(g5.n_pairs, 2u);
    EXPECT_EQ(g5.neg_wins, 1u);
    EXPECT_EQ(*g5.frac_neg_wins, 0.5);
    EXPECT_DOUBLE_EQ(*g5.mean_sim12, (0.60 + 0.70) / 2.0);
    EXPECT_EQ(g5.hist_sim12[12], 1u);
    EXPECT_EQ(g5.hist_sim12[14], 1u);
    EXPECT_EQ(g5.hist_sim1neg1[19], 1u);
    EXPECT_EQ(r.groups[0].n_pairs, 1u);
    EXPECT_EQ(*r.groups[0].frac_neg_wins, 0.0);
    EXPECT_EQ(r.excluded_missing_negation, std::vector<std::string>{"3"});
    for (int g : {1, 2, 3}) {
        EXPECT_EQ(r.groups[static_cast<std::size_t>(g)].n_pairs, 0u);
        EXPECT_FALSE(r.groups[static_cast<std::size_t>(g)].frac_neg_wins.has_value());
        EXPECT_FALSE(r.groups[static_cast<std::size_t>(g)].mean_sim12.has_value());
    }
    const auto doc = to_json(r);
    EXPECT_EQ(doc["format"], "negadapt-diagnosis/1");
    EXPECT_TRUE(doc["groups"][1]["frac_neg_wins"].is_null());
    EXPECT_EQ(doc["groups"][4]["frac_neg_wins"], 0.5);
    const auto csv = to_csv(r);
    EXPECT_NE(csv.find("\"m\",2,0.2,0.4,0,0,,,\n"), std::string::npos) << csv;
}

TEST(Diagnose, HistogramsConserveCounts) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    EmbeddingTable table;
    std::vector<ScoredPair> pairs;
    for (int i = 0; i < 300; ++i) {
        const auto id = std::to_string(i);
        for (const char* role : {"a", "b", "n"}) {
            table.insert(role + id, negadapt::testing::random_vector(rng, 12));
        }
        pairs.push_back({id, "a" + id, "b" + id, u(rng), i % 10 == 0 ? std::nullopt : std::optional("n" + id)});
    }
    const auto r = diagnose(pairs, table);
    std::size_t total = 0;
    for (const auto& g : r.groups) {
        std::size_t h12 = 0;
        std::size_t h1n = 0;
        for (std::size_t k = 0; k < 20; ++k) {
            h12 += g.hist_sim12[k];
            h1n += g.hist_sim1neg1[k];
        }
        EXPECT_EQ(h12, g.n_pairs);
        EXPECT_EQ(h1n, g.n_pairs);
        if (g.n_pairs > 0) {
            EXPECT_DOUBLE_EQ(*g.frac_neg_wins, static_cast<double>(g.neg_wins) / static_cast<double>(g.n_pairs));
        }
        total += g.n_pairs;
    }
    EXPECT_EQ(total, 270u);
    EXPECT_EQ(r.excluded_missing_negation.size(), 30u);

    const auto w = WeightVector::uniform(12);
    const auto u_r = weighted_diagnose(pairs, table, w, "m");
    EXPECT_EQ(u_r.model_tag, "m+weights(a=0)");
    for (std::size_t g = 0; g < 5; ++g) {
        EXPECT_EQ(u_r.groups[g].hist_sim12, r.groups[g].hist_sim12);
        EXPECT_EQ(u_r.groups[g].neg_wins, r.groups[g].neg_wins);
        if (r.groups[g].n_pairs > 0) {
            EXPECT_NEAR(*u_r.groups[g].mean_sim12, *r.groups[g].mean_sim12, 1e-9);
            EXPECT_NEAR(*u_r.groups[g].mean_sim1neg1, *r.groups[g].mean_sim1neg1, 1e-9);
        }
    }
}

TEST(Diagnose, LearnedWeightsReduceNegationWins) {
    auto corpus = negadapt::testing::make_planted_triplets(200, 32, 3, 17);
    std::vector<ScoredPair> pairs;
    for (std::size_t i = 0; i < corpus.triplets.size(); ++i) {
        const auto& t = corpus.triplets[i];
        pairs.push_back({t.triplet_id, t.anchor, t.paraphrase, i % 2 == 0 ? 0.9 : 0.7, t.negation});
    }
    const auto before = diagnose(pairs, corpus.table);
    const auto search = grid_search_a(corpus.triplets, corpus.table);
    const auto after = weighted_diagnose(pairs, corpus.table, search.best_weights);
    EXPECT_EQ(after.a, search.best_a);
    for (std::size_t g : {3u, 4u}) {
        ASSERT_GT(before.groups[g].n_pairs, 0u);
        EXPECT_LT(*after.groups[g].frac_neg_wins, *before.groups[g].frac_neg_wins);
    }
}

TEST(Diagnose, MissingEmbedding) {
    EmbeddingTable table;
    table.insert("s", EmbeddingVector("s", {1.0, 0.0}));
    std::vector<ScoredPair> pairs{{"1", "s", "nope", 0.9, std::string("s2")}};
    EXPECT_THROW(diagnose(pairs, table), Error);
}
