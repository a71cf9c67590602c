#include <aedmatch/exact_match.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <random>

namespace aedmatch {
namespace {

using testing::complete_graph;
using testing::labels;
using testing::path_graph;

std::vector<Mapping> sorted(std::vector<Mapping> m) {
    std::sort(m.begin(), m.end());
    return m;
}

TEST(EnumerateMappingsTest, TriangleInK4Has24Mappings) {
    auto r = enumerate_mappings(complete_graph(4), complete_graph(3));
    EXPECT_EQ(r.mappings.size(), 24u);
    EXPECT_FALSE(r.truncated);
    EXPECT_FALSE(r.incomplete);
    EXPECT_GT(r.stats.recursions, 0u);
}

TEST(EnumerateMappingsTest, InducedPathHasNoMatchInTriangle) {
    EXPECT_TRUE(enumerate_mappings(complete_graph(3), path_graph(3)).mappings.empty());
}

TEST(EnumerateMappingsTest, NonInducedPathMatchesTriangle) {
    MatchOptions opts;
    opts.induced = false;
    auto r = enumerate_mappings(complete_graph(3), path_graph(3), opts);
    EXPECT_EQ(r.mappings.size(), 6u);
    EXPECT_EQ(sorted(r.mappings), brute_force_mappings(complete_graph(3), path_graph(3), false));
}

TEST(EnumerateMappingsTest, EmptyQueryRejected) {
    EXPECT_THROW(enumerate_mappings(complete_graph(3), LabeledGraph()), ConfigError);
}

TEST(EnumerateMappingsTest, QueryLargerThanDataHasNoMatch) {
    EXPECT_TRUE(enumerate_mappings(complete_graph(2), complete_graph(3)).mappings.empty());
}

TEST(EnumerateMappingsTest, EdgeLabelsMustAgree) {
    LabeledGraph g(3, {{0, 1}, {1, 2}}, NoFeatures{}, std::vector<int>{1, 2});
    LabeledGraph q(2, {{0, 1}}, NoFeatures{}, std::vector<int>{2});
    auto r = enumerate_mappings(g, q);
    EXPECT_EQ(sorted(r.mappings), (std::vector<Mapping>{{{1, 2}}, {{2, 1}}}));
    EXPECT_EQ(sorted(r.mappings), brute_force_mappings(g, q));
}

TEST(EnumerateMappingsTest, DisconnectedQueryIsTolerated) {
    LabeledGraph q(3, {{0, 1}});  // edge plus isolated node
    auto g = path_graph(4);
    EXPECT_EQ(sorted(enumerate_mappings(g, q).mappings), brute_force_mappings(g, q));
}

TEST(EnumerateMappingsTest, FirstAndExistsModes) {
    auto g = complete_graph(5);
    auto q = complete_graph(3);
    auto all = enumerate_mappings(g, q);
    MatchOptions first;
    first.mode = SearchMode::first;
    auto f = enumerate_mappings(g, q, first);
    ASSERT_EQ(f.mappings.size(), 1u);
    EXPECT_NE(std::find(all.mappings.begin(), all.mappings.end(), f.mappings[0]), all.mappings.end());
    // ascending candidate order makes `first` the lexicographically smallest
    EXPECT_EQ(f.mappings[0], (Mapping{{0, 1, 2}}));

    MatchOptions exists;
    exists.mode = SearchMode::exists;
    auto e = enumerate_mappings(g, q, exists);
    EXPECT_TRUE(e.found);
    EXPECT_TRUE(e.mappings.empty());
    EXPECT_FALSE(enumerate_mappings(complete_graph(3), path_graph(3), exists).found);
}

TEST(EnumerateMappingsTest, LimitFlagsTruncation) {
    MatchOptions opts;
    opts.limit = 10;
    auto r = enumerate_mappings(complete_graph(4), complete_graph(3), opts);
    EXPECT_EQ(r.mappings.size(), 10u);
    EXPECT_TRUE(r.truncated);

    opts.limit = 24;  // exactly the full set: not truncated
    r = enumerate_mappings(complete_graph(4), complete_graph(3), opts);
    EXPECT_EQ(r.mappings.size(), 24u);
    EXPECT_FALSE(r.truncated);
}

TEST(EnumerateMappingsTest, DeadlineFlagsIncomplete) {
    MatchOptions opts;
    opts.deadline = std::chrono::duration<double>(0.0);
    auto r = enumerate_mappings(complete_graph(40), complete_graph(6), opts);
    EXPECT_TRUE(r.incomplete);
    EXPECT_LT(r.mappings.size(), 2763633600u);
}

TEST(BruteForceTest, SingletonLabelFilter) {
    auto g = path_graph(3, labels({0, 1, 0}));
    auto q = LabeledGraph(1, {}, labels({0}));
    EXPECT_EQ(brute_force_mappings(g, q), (std::vector<Mapping>{{{0}}, {{2}}}));
}

TEST(BruteForceTest, LabeledEdgeInLabeledTriangle) {
    auto g = complete_graph(3, labels({0, 1, 1}));
    auto q = LabeledGraph(2, {{0, 1}}, labels({0, 1}));
    EXPECT_EQ(brute_force_mappings(g, q), (std::vector<Mapping>{{{0, 1}}, {{0, 2}}}));
}

TEST(BruteForceTest, IdenticalGraphsContainIdentity) {
    std::mt19937 rng(1);
    auto g = testing::random_graph(rng, 6, 0.5, 2);
    auto maps = brute_force_mappings(g, g);
    EXPECT_NE(std::find(maps.begin(), maps.end(), Mapping{{0, 1, 2, 3, 4, 5}}), maps.end());
}

TEST(BruteForceTest, SizeGuard) {
    EXPECT_THROW(brute_force_mappings(complete_graph(11), complete_graph(2)), ConfigError);
}

// Property: backtracking and exhaustive enumeration agree on random inputs.
TEST(EnumerateMappingsProperty, AgreesWithBruteForce) {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t ng = 1 + rng() % 8;
        const std::size_t nq = 1 + rng() % ng;
        const int nl = int(rng() % 3);  // 0 = unlabeled
        const double p = 0.2 + 0.6 * (rng() % 100) / 100.0;
        auto g = testing::random_graph(rng, ng, p, nl);
        LabeledGraph q;
        if (rng() % 2) {
            auto perm = testing::random_permutation(rng, ng);
            q = induced_subgraph(g, std::vector<NodeId>(perm.begin(), perm.begin() + std::ptrdiff_t(nq)));
        } else {
            q = testing::random_graph(rng, nq, p, nl);
        }
        const bool induced = trial % 5 != 0;
        MatchOptions opts;
        opts.induced = induced;
        auto fast = sorted(enumerate_mappings(g, q, opts).mappings);
        ASSERT_EQ(fast, brute_force_mappings(g, q, induced)) << "trial " << trial;

        MatchOptions exists = opts;
        exists.mode = SearchMode::exists;
        EXPECT_EQ(enumerate_mappings(g, q, exists).found, !fast.empty());
    }
}

TEST(EnumerateMappingsProperty, PermutationEquivariance) {
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        auto g = testing::random_graph(rng, 5 + rng() % 6, 0.4, 2);
        auto perm = testing::random_permutation(rng, g.num_nodes());
        auto q = induced_subgraph(g, std::vector<NodeId>(perm.begin(), perm.begin() + 3));
        auto pg = permute_graph(g, perm);
        auto base = enumerate_mappings(g, q).mappings;
        for (auto& m : base)
            for (auto& v : m.assignment) v = perm[v];
        EXPECT_EQ(sorted(base), sorted(enumerate_mappings(pg, q).mappings));
    }
}

}  // namespace
}  // namespace aedmatch
