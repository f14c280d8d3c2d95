#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include <thistle/flat_index.hpp>

#include "test_util.hpp"

using namespace thistle;
using test::ids_of;
using test::oracle_knn;
using test::random_records;

namespace {

std::vector<DocRecord> two_points() {
    return {{"a", "", Embedding{2, 0}}, {"b", "", Embedding{0, 3}}};
}

} // namespace

TEST(FlatIndex, SingleEntry) {
    FlatIndex idx(3, Metric::euclidean);
    std::vector<DocRecord> recs{{"only", "", Embedding{1, 2, 3}}};
    idx.add(recs);
    const auto r = idx.query(Embedding{9, 9, 9}.values(), 1);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r.hits[0].id, "only");
}

TEST(FlatIndex, HandComputedEuclidean) {
    FlatIndex idx(2, Metric::euclidean);
    const auto recs = two_points();
    idx.add(recs);
    const auto r = idx.query(Embedding{1, 1}.values(), 2);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r.hits[0].id, "a");
    EXPECT_NEAR(r.hits[0].distance, 1.4142135623730951, 1e-12);
    EXPECT_EQ(r.hits[1].id, "b");
    EXPECT_NEAR(r.hits[1].distance, 2.23606797749979, 1e-12);
}

TEST(FlatIndex, TiesBrokenById) {
    FlatIndex idx(2, Metric::euclidean);
    std::vector<DocRecord> recs{{"z", "", Embedding{1, 0}}, {"m", "", Embedding{-1, 0}},
                                {"a", "", Embedding{0, 1}}};
    idx.add(recs);
    const auto r = idx.query(Embedding{0, 0}.values(), 2);
    EXPECT_EQ(ids_of(r), (std::vector<std::string>{"a", "m"}));
}

TEST(FlatIndex, MatchesNaiveOracle) {
    for (Metric metric : {Metric::cosine, Metric::euclidean}) {
        const auto recs = random_records(100, 768, 11);
        FlatIndex idx(768, metric);
        idx.add(recs);
        std::mt19937_64 rng(12);
        for (int q = 0; q < 50; ++q) {
            const auto v = test::random_vector(rng, 768);
            const auto got = idx.query(v, 10);
            const auto want = oracle_knn(recs, v, 10, metric);
            ASSERT_EQ(ids_of(got), ids_of(want));
            for (std::size_t i = 0; i < want.size(); ++i) {
                EXPECT_NEAR(got.hits[i].distance, want[i].second, 1e-12);
            }
        }
    }
}

TEST(FlatIndex, InsertionOrderPermutationInvariant) {
    auto recs = random_records(200, 16, 3);
    FlatIndex a(16, Metric::cosine);
    a.add(recs);
    std::mt19937_64 rng(4);
    std::shuffle(recs.begin(), recs.end(), rng);
    FlatIndex b(16, Metric::cosine);
    b.add(recs);
    for (int q = 0; q < 20; ++q) {
        const auto v = test::random_vector(rng, 16);
        EXPECT_EQ(a.query(v, 7), b.query(v, 7));
    }
}

TEST(FlatIndex, CosineArgminInvariantUnderRescaling) {
    const auto recs = random_records(150, 24, 8);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<float> pos(0.1f, 50.0f);
    std::vector<DocRecord> scaled;
    for (const auto& r : recs) {
        const float s = pos(rng);
        std::vector<float> v(r.embedding.values().begin(), r.embedding.values().end());
        for (auto& x : v) x *= s;
        scaled.push_back({r.id, "", Embedding(v)});
    }
    FlatIndex a(24, Metric::cosine), b(24, Metric::cosine);
    a.add(recs);
    b.add(scaled);
    for (int q = 0; q < 30; ++q) {
        auto v = test::random_vector(rng, 24);
        auto w = v;
        const float s = pos(rng);
        for (auto& x : w) x *= s;
        EXPECT_EQ(ids_of(a.query(v, 5)), ids_of(b.query(w, 5)));
    }
}

TEST(FlatIndex, FullKReturnsEveryIdOnce) {
    const auto recs = random_records(60, 8, 5);
    FlatIndex idx(8, Metric::euclidean);
    idx.add(recs);
    std::mt19937_64 rng(1);
    const auto r = idx.query(test::random_vector(rng, 8), 60);
    ASSERT_EQ(r.size(), 60u);
    const auto listed = ids_of(r);
    std::set<std::string> ids(listed.begin(), listed.end());
    EXPECT_EQ(ids.size(), 60u);
    EXPECT_TRUE(is_well_formed(r, 60));
    const auto more = idx.query(Embedding(std::vector<float>(8, 0.5f)).values(), 1000);
    EXPECT_EQ(more.size(), 60u);
}

TEST(FlatIndex, StatsCountFullScan) {
    const auto recs = random_records(40, 4, 2);
    FlatIndex idx(4, Metric::cosine);
    idx.add(recs);
    QueryStats stats;
    idx.query(Embedding{1, 2, 3, 4}.values(), 3, &stats);
    EXPECT_EQ(stats.distance_evals, 40u);
}

TEST(FlatIndex, QueryErrors) {
    FlatIndex idx(2, Metric::cosine);
    try {
        idx.query(Embedding{1, 0}.values(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::empty_index);
    }
    const auto recs = two_points();
    idx.add(recs);
    try {
        idx.query(Embedding{1, 0, 0}.values(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::dimension_mismatch);
    }
    try {
        idx.query(Embedding{0, 0}.values(), 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::zero_vector);
    }
    EXPECT_THROW(idx.query(Embedding{1, 0}.values(), 0), Error);
}
