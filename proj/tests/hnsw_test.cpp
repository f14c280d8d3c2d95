#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <set>

#include <thistle/flat_index.hpp>
#include <thistle/hnsw_index.hpp>

#include "test_util.hpp"

using namespace thistle;
using hnsw::LayeredGraph;
using hnsw::NodeId;
using test::ids_of;
using test::random_records;

namespace {

/// Returns an empty string when every structural invariant holds.
std::string structural_violation(const LayeredGraph& g, std::uint32_t M) {
    if (g.empty()) return g.entry_point() ? "entry point on empty graph" : "";
    if (!g.entry_point()) return "missing entry point";
    std::uint32_t highest = 0;
    for (NodeId n = 0; n < g.size(); ++n) highest = std::max(highest, g.top_layer(n));
    if (g.top_layer(*g.entry_point()) != highest) return "entry point is not on the top layer";
    if (g.max_layer() != highest) return "max_layer mismatch";
    for (NodeId n = 0; n < g.size(); ++n) {
        for (std::uint32_t layer = 0; layer <= g.top_layer(n); ++layer) {
            const auto adj = g.neighbors(n, layer);
            const std::size_t cap = layer == 0 ? 2 * M : M;
            if (adj.size() > cap) return "degree cap exceeded";
            std::set<NodeId> unique(adj.begin(), adj.end());
            if (unique.size() != adj.size()) return "duplicate edge";
            for (NodeId m : adj) {
                if (m == n) return "self loop";
                if (!g.on_layer(m, layer)) return "edge to node absent from layer";
                const auto back = g.neighbors(m, layer);
                if (std::find(back.begin(), back.end(), n) == back.end()) return "asymmetric edge";
            }
        }
    }
    return "";
}

bool layer0_connected(const LayeredGraph& g) {
    if (g.empty()) return true;
    std::vector<bool> seen(g.size(), false);
    std::queue<NodeId> q;
    q.push(0);
    seen[0] = true;
    std::size_t count = 1;
    while (!q.empty()) {
        const NodeId n = q.front();
        q.pop();
        for (NodeId m : g.neighbors(n, 0)) {
            if (!seen[m]) {
                seen[m] = true;
                ++count;
                q.push(m);
            }
        }
    }
    return count == g.size();
}

/// Path a(0) - b(1) - c(2) on one layer.
LayeredGraph path_graph() {
    LayeredGraph g;
    g.add_node(0);
    g.add_node(0);
    g.add_node(0);
    g.connect(0, 1, 0);
    g.connect(1, 2, 0);
    return g;
}

} // namespace

TEST(SampleLevel, ZeroNormIsAlwaysLevelZero) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(hnsw::sample_level(0.0, rng), 0u);
}

TEST(SampleLevel, GeometricTailMatchesClosedForm) {
    // P(level >= 1) = P(-ln u >= ln 16) = 1/16 for level_norm = 1/ln 16.
    std::mt19937_64 rng(2024);
    const double norm = 1.0 / std::log(16.0);
    const int draws = 100000;
    int above = 0;
    for (int i = 0; i < draws; ++i) above += hnsw::sample_level(norm, rng) >= 1 ? 1 : 0;
    const double p = double(above) / draws;
    EXPECT_NEAR(p, 1.0 / 16.0, 0.2 / 16.0);
}

TEST(SampleLevel, DeterministicForSeed) {
    std::mt19937_64 a(99), b(99);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(hnsw::sample_level(0.5, a), hnsw::sample_level(0.5, b));
}

TEST(GreedyDescend, WalksPathToLocalMinimum) {
    const auto g = path_graph();
    const std::vector<double> d{3.0, 2.0, 1.0};
    auto dist = [&](NodeId n) { return d[n]; };
    EXPECT_EQ(hnsw::greedy_descend(g, dist, 0, 0), 2u);
    EXPECT_EQ(hnsw::greedy_descend(g, dist, 2, 0), 2u);
}

TEST(GreedyDescend, SingleNode) {
    LayeredGraph g;
    g.add_node(0);
    auto dist = [](NodeId) { return 5.0; };
    EXPECT_EQ(hnsw::greedy_descend(g, dist, 0, 0), 0u);
}

TEST(SearchLayer, IsolatedEntryReturnsItself) {
    LayeredGraph g;
    g.add_node(0);
    g.add_node(0);
    auto dist = [](NodeId n) { return double(n) + 1; };
    const auto r = hnsw::search_layer(g, dist, 1, 10, 0);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].second, 1u);
}

TEST(SearchLayer, BeamWidthOneEqualsGreedy) {
    const auto recs = random_records(300, 8, 5);
    HnswIndex idx(8, Metric::euclidean, HnswParams::with_m(6));
    idx.add(recs);
    std::mt19937_64 rng(6);
    for (int q = 0; q < 50; ++q) {
        const auto v = test::random_vector(rng, 8);
        RowDistance dist(idx.store(), Metric::euclidean, v);
        const NodeId start = static_cast<NodeId>(q * 5);
        const auto greedy = hnsw::greedy_descend(idx.graph(), dist, start, 0);
        const auto beam = hnsw::search_layer(idx.graph(), dist, start, 1, 0);
        ASSERT_EQ(beam.size(), 1u);
        EXPECT_EQ(beam[0].second, greedy);
    }
}

TEST(SearchLayer, FullBeamIsExactOnConnectedLayer) {
    const auto recs = random_records(400, 12, 15);
    HnswIndex idx(12, Metric::cosine, HnswParams::with_m(8));
    idx.add(recs);
    ASSERT_TRUE(layer0_connected(idx.graph()));
    FlatIndex flat(12, Metric::cosine);
    flat.add(recs);
    std::mt19937_64 rng(16);
    for (int q = 0; q < 30; ++q) {
        const auto v = test::random_vector(rng, 12);
        RowDistance dist(idx.store(), Metric::cosine, v);
        const auto found = hnsw::search_layer(idx.graph(), dist, 0, 400, 0);
        const auto truth = flat.query(v, 10);
        for (std::size_t i = 0; i < 10; ++i) {
            EXPECT_EQ(idx.store().id(found[i].second), truth.hits[i].id);
        }
    }
}

TEST(HnswIndex, FirstInsertBecomesEntryPoint) {
    HnswIndex idx(2, Metric::euclidean);
    std::vector<DocRecord> one{{"a", "", Embedding{1, 2}}};
    idx.add(one);
    EXPECT_EQ(idx.graph().entry_point(), NodeId{0});
    for (std::uint32_t l = 0; l <= idx.graph().top_layer(0); ++l) {
        EXPECT_TRUE(idx.graph().neighbors(0, l).empty());
    }
    const auto r = idx.query(Embedding{7, 7}.values(), 5);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r.hits[0].id, "a");
}

TEST(HnswIndex, TwoNodesMutuallyConnectedOnSharedLayers) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        HnswParams p = HnswParams::with_m(4);
        p.seed = seed;
        HnswIndex idx(2, Metric::euclidean, p);
        std::vector<DocRecord> two{{"a", "", Embedding{1, 2}}, {"b", "", Embedding{3, 1}}};
        idx.add(two);
        const auto& g = idx.graph();
        const auto shared = std::min(g.top_layer(0), g.top_layer(1));
        for (std::uint32_t l = 0; l <= shared; ++l) {
            ASSERT_EQ(g.neighbors(0, l).size(), 1u);
            EXPECT_EQ(g.neighbors(0, l)[0], 1u);
            EXPECT_EQ(g.neighbors(1, l)[0], 0u);
        }
    }
}

TEST(HnswIndex, StructuralInvariantsAfterBuild) {
    const auto recs = random_records(500, 16, 21);
    HnswParams p = HnswParams::with_m(8);
    p.ef_construction = 100;
    HnswIndex idx(16, Metric::euclidean, p);
    // Build incrementally and check the invariants along the way.
    for (std::size_t start = 0; start < recs.size(); start += 100) {
        idx.add(std::span(recs).subspan(start, 100));
        EXPECT_EQ(structural_violation(idx.graph(), 8), "");
    }
    for (NodeId n = 0; n < idx.graph().size(); ++n) {
        EXPECT_LE(idx.graph().neighbors(n, 0).size(), 16u);
    }
    EXPECT_GT(idx.graph().max_layer(), 0u);
}

TEST(HnswIndex, HeavyPruningLeavesNoOrphans) {
    // High-dimensional Euclidean data makes low-norm points hubs whose
    // pruning strips edges from everyone else.
    for (std::uint64_t seed : {1u, 2u, 301u}) {
        const auto recs = random_records(500, 128, seed);
        HnswParams p = HnswParams::with_m(8);
        p.ef_construction = 64;
        HnswIndex idx(128, Metric::euclidean, p);
        idx.add(recs);
        EXPECT_EQ(structural_violation(idx.graph(), 8), "");
        EXPECT_TRUE(layer0_connected(idx.graph())) << "seed " << seed;
        for (NodeId n = 0; n < idx.graph().size(); ++n) {
            EXPECT_FALSE(idx.graph().neighbors(n, 0).empty());
        }
    }
}

TEST(HnswIndex, RecallOnGaussianData) {
    const auto recs = random_records(2000, 64, 31);
    HnswParams p = HnswParams::with_m(16);
    p.ef_construction = 200;
    p.ef_search = 100;
    HnswIndex idx(64, Metric::euclidean, p);
    idx.add(recs);
    FlatIndex flat(64, Metric::euclidean);
    flat.add(recs);
    std::mt19937_64 rng(32);
    double total = 0;
    for (int q = 0; q < 100; ++q) {
        const auto v = test::random_vector(rng, 64);
        total += test::recall(idx.query(v, 10), flat.query(v, 10));
    }
    EXPECT_GE(total / 100, 0.95);
}

TEST(HnswIndex, FullEfSearchIsExact) {
    const auto recs = random_records(300, 10, 41);
    HnswParams p = HnswParams::with_m(8);
    p.ef_search = 300;
    HnswIndex idx(10, Metric::cosine, p);
    idx.add(recs);
    ASSERT_TRUE(layer0_connected(idx.graph()));
    FlatIndex flat(10, Metric::cosine);
    flat.add(recs);
    std::mt19937_64 rng(42);
    for (int q = 0; q < 50; ++q) {
        const auto v = test::random_vector(rng, 10);
        EXPECT_EQ(idx.query(v, 10), flat.query(v, 10));
    }
}

TEST(HnswIndex, LargerBeamDoesNotLowerRecall) {
    const auto recs = random_records(3000, 32, 51);
    HnswIndex idx(32, Metric::euclidean);
    idx.add(recs);
    FlatIndex flat(32, Metric::euclidean);
    flat.add(recs);
    std::mt19937_64 rng(52);
    std::vector<std::vector<float>> queries;
    for (int q = 0; q < 100; ++q) queries.push_back(test::random_vector(rng, 32));
    auto mean_recall = [&](std::uint32_t ef) {
        idx.set_ef_search(ef);
        double total = 0;
        for (const auto& v : queries) total += test::recall(idx.query(v, 10), flat.query(v, 10));
        return total / double(queries.size());
    };
    const double low = mean_recall(20);
    const double high = mean_recall(200);
    EXPECT_GE(high, low);
}

TEST(HnswIndex, WorkNeverExceedsCorpus) {
    const auto recs = random_records(1000, 16, 61);
    HnswIndex idx(16, Metric::cosine);
    idx.add(recs);
    std::mt19937_64 rng(62);
    for (int q = 0; q < 50; ++q) {
        QueryStats stats;
        idx.query(test::random_vector(rng, 16), 10, &stats);
        EXPECT_LE(stats.distance_evals, 1000u);
        EXPECT_GT(stats.distance_evals, 0u);
    }
}

TEST(HnswIndex, DeterministicForSeedAndOrder) {
    const auto recs = random_records(600, 16, 71);
    HnswIndex a(16, Metric::euclidean), b(16, Metric::euclidean);
    a.add(recs);
    b.add(recs);
    EXPECT_EQ(a.graph(), b.graph());
    std::mt19937_64 rng(72);
    for (int q = 0; q < 20; ++q) {
        const auto v = test::random_vector(rng, 16);
        EXPECT_EQ(a.query(v, 5), b.query(v, 5));
    }
}

TEST(HnswIndex, SelfQueryFindsItself) {
    const auto recs = random_records(500, 16, 81);
    HnswIndex idx(16, Metric::euclidean);
    idx.add(recs);
    for (const auto& r : recs) {
        const auto res = idx.query(r.embedding.values(), 1);
        ASSERT_EQ(res.size(), 1u);
        EXPECT_EQ(res.hits[0].id, r.id);
        EXPECT_EQ(res.hits[0].distance, 0.0);
    }
}

TEST(HnswIndex, ErrorsAndValidation) {
    HnswIndex idx(3, Metric::euclidean);
    EXPECT_THROW(idx.query(Embedding{1, 2, 3}.values(), 1), Error);
    std::vector<DocRecord> recs{{"a", "", Embedding{1, 2, 3}}, {"a", "", Embedding{1, 2, 4}}};
    try {
        idx.add(recs);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::duplicate_id);
    }
    EXPECT_EQ(idx.size(), 0u);
    HnswParams bad = HnswParams::with_m(16);
    bad.ef_construction = 8;
    EXPECT_THROW(HnswIndex(3, Metric::euclidean, bad), Error);
}
