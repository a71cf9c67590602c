#include <aedmatch/graph.hpp>
#include <aedmatch/pair_io.hpp>
#include <aedmatch/tudataset.hpp>

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace aedmatch {
namespace {

using testing::labels;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("aedmatch_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() { std::filesystem::remove_all(path_); }
    const std::filesystem::path& path() const { return path_; }
    void write(const std::string& name, const std::string& text) const { std::ofstream(path_ / name) << text; }

private:
    std::filesystem::path path_;
};

TEST(LabeledGraphTest, NormalizesAndSortsEdges) {
    LabeledGraph g(4, {{2, 1}, {0, 3}, {1, 0}});
    ASSERT_EQ(g.num_edges(), 3u);
    EXPECT_EQ(g.edges()[0], (Edge{0, 1}));
    EXPECT_EQ(g.edges()[1], (Edge{0, 3}));
    EXPECT_EQ(g.edges()[2], (Edge{1, 2}));
    EXPECT_TRUE(g.has_edge(2, 1));
    EXPECT_FALSE(g.has_edge(2, 3));
    EXPECT_EQ(g.degree(0), 2u);
    EXPECT_EQ(std::vector<NodeId>(g.neighbors(1).begin(), g.neighbors(1).end()), (std::vector<NodeId>{0, 2}));
}

TEST(LabeledGraphTest, RejectsBrokenInvariants) {
    EXPECT_THROW(LabeledGraph(2, {{0, 2}}), DataError);
    EXPECT_THROW(LabeledGraph(2, {{1, 1}}), DataError);
    EXPECT_THROW(LabeledGraph(2, {{0, 1}, {1, 0}}), DataError);
    EXPECT_THROW(LabeledGraph(2, {}, labels({1})), DataError);
    EXPECT_THROW(LabeledGraph(2, {}, NumericalFeatures{2, {1.0, 2.0, 3.0}}), DataError);
}

TEST(LabeledGraphTest, EdgeLabelsFollowNormalization) {
    LabeledGraph g(3, {{2, 1}, {0, 1}}, NoFeatures{}, std::vector<int>{7, 5});
    EXPECT_EQ(g.edge_label(1, 2), 7);
    EXPECT_EQ(g.edge_label(0, 1), 5);
    EXPECT_EQ(g.edge_label(0, 2), std::nullopt);
}

TEST(LabeledGraphTest, InducedSubgraphKeepsInternalEdgesAndFeatures) {
    LabeledGraph g(4, {{0, 1}, {1, 2}, {2, 3}, {0, 2}}, labels({10, 11, 12, 13}));
    std::vector<NodeId> nodes{2, 0, 1};
    LabeledGraph s = induced_subgraph(g, nodes);
    EXPECT_EQ(s.num_nodes(), 3u);
    EXPECT_EQ(s.num_edges(), 3u);
    EXPECT_EQ(std::get<CategoricalFeatures>(s.features()).labels, (std::vector<int>{12, 10, 11}));
}

TEST(LabeledGraphTest, PermuteGraphMovesNodes) {
    LabeledGraph g(3, {{0, 1}}, labels({5, 6, 7}));
    std::vector<NodeId> perm{2, 0, 1};  // old v -> new perm[v]
    LabeledGraph p = permute_graph(g, perm);
    EXPECT_TRUE(p.has_edge(2, 0));
    EXPECT_FALSE(p.has_edge(0, 1));
    EXPECT_EQ(std::get<CategoricalFeatures>(p.features()).labels, (std::vector<int>{6, 7, 5}));
}

TEST(MatchingMatrixTest, UnionIndicatorOfMappings) {
    std::vector<Mapping> maps{{{0, 2}}, {{2, 0}}};
    MatchingMatrix m(2, 3, maps);
    EXPECT_TRUE(m.at(0, 0));
    EXPECT_TRUE(m.at(0, 2));
    EXPECT_FALSE(m.at(0, 1));
    EXPECT_EQ(m.row_count(1), 2u);
    EXPECT_TRUE(m.all_rows_nonzero());
}

TEST(MatchingMatrixTest, MatchesBruteForceDefinitionOnRandomMappingSets) {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nq = 1 + rng() % 4, ng = nq + rng() % 5;
        std::vector<Mapping> maps;
        const std::size_t k = 1 + rng() % 4;
        for (std::size_t m = 0; m < k; ++m) {
            auto perm = testing::random_permutation(rng, ng);
            maps.push_back(Mapping{std::vector<NodeId>(perm.begin(), perm.begin() + std::ptrdiff_t(nq))});
        }
        MatchingMatrix mat(nq, ng, maps);
        for (std::size_t i = 0; i < nq; ++i)
            for (std::size_t j = 0; j < ng; ++j) {
                bool any = false;
                for (const auto& m : maps) any = any || m[i] == NodeId(j);
                EXPECT_EQ(mat.at(i, j), any);
            }
    }
}

TEST(MatchPairTest, ValidatesMappingsAndFeatureKinds) {
    auto g = testing::path_graph(3, labels({0, 1, 0}));
    auto q = testing::path_graph(1, labels({0}));
    EXPECT_NO_THROW(MatchPair(g, q, {{{0}}, {{2}}}));
    EXPECT_THROW(MatchPair(g, q, {}), DataError);
    EXPECT_THROW(MatchPair(g, q, {{{5}}}), DataError);
    EXPECT_THROW(MatchPair(g, testing::path_graph(1), {{{0}}}), DataError);
    auto q2 = testing::path_graph(2, labels({0, 1}));
    EXPECT_THROW(MatchPair(g, q2, {{{1, 1}}}), DataError);
}

TEST(EncodeFeaturesTest, NoneFeaturesAreConstantColumn) {
    Tensor t = encode_features(testing::path_graph(3));
    EXPECT_EQ(t, Tensor(3, 1, 1.0));
}

TEST(EncodeFeaturesTest, CategoricalIsOneHot) {
    LabelVocabulary vocab = make_vocabulary({0, 1, 2});
    Tensor t = encode_features(LabeledGraph(2, {}, labels({0, 2})), &vocab);
    EXPECT_EQ(t, Tensor::from_rows({{1, 0, 0}, {0, 0, 1}}));
}

TEST(EncodeFeaturesTest, NumericalRowsCopied) {
    Tensor t = encode_features(LabeledGraph(1, {}, NumericalFeatures{2, {0.5, 1.0}}));
    EXPECT_EQ(t, Tensor::from_rows({{0.5, 1.0}}));
}

TEST(EncodeFeaturesTest, UnknownLabelIsAnError) {
    LabelVocabulary vocab = make_vocabulary({0, 1});
    EXPECT_THROW(encode_features(LabeledGraph(1, {}, labels({4})), &vocab), DataError);
    EXPECT_THROW(encode_features(LabeledGraph(1, {}, labels({0}))), ConfigError);
}

// --- TUDataset -------------------------------------------------------------

TEST(TuDatasetTest, MinimalDirectory) {
    TempDir dir;
    dir.write("TOY_A.txt", "1, 2\n2, 1\n");
    dir.write("TOY_graph_indicator.txt", "1\n1\n");
    auto graphs = load_tudataset(dir.path());
    ASSERT_EQ(graphs.size(), 1u);
    EXPECT_EQ(graphs[0].num_nodes(), 2u);
    ASSERT_EQ(graphs[0].num_edges(), 1u);
    EXPECT_EQ(graphs[0].edges()[0], (Edge{0, 1}));
    EXPECT_EQ(graphs[0].feature_kind(), FeatureKind::none);
}

TEST(TuDatasetTest, NodeLabelsBecomeCategorical) {
    TempDir dir;
    dir.write("TOY_A.txt", "1, 2\n2, 1\n");
    dir.write("TOY_graph_indicator.txt", "1\n1\n");
    dir.write("TOY_node_labels.txt", "3\n3\n");
    auto graphs = load_tudataset(dir.path());
    EXPECT_EQ(std::get<CategoricalFeatures>(graphs[0].features()).labels, (std::vector<int>{3, 3}));
}

TEST(TuDatasetTest, EdgeOutsideIndicatorRangeIsAnError) {
    TempDir dir;
    dir.write("TOY_A.txt", "1,5\n");
    dir.write("TOY_graph_indicator.txt", "1\n1\n1\n1\n");
    EXPECT_THROW(load_tudataset(dir.path()), DataError);
}

TEST(TuDatasetTest, MissingMandatoryFiles) {
    TempDir dir;
    dir.write("TOY_graph_indicator.txt", "1\n");
    EXPECT_THROW(load_tudataset(dir.path()), DataError);
    TempDir dir2;
    dir2.write("TOY_A.txt", "1,2\n");
    EXPECT_THROW(load_tudataset(dir2.path()), DataError);
}

TEST(TuDatasetTest, RaggedAttributesAreAnError) {
    TempDir dir;
    dir.write("TOY_A.txt", "1,2\n");
    dir.write("TOY_graph_indicator.txt", "1\n1\n");
    dir.write("TOY_node_attributes.txt", "0.5, 1.0\n0.25\n");
    EXPECT_THROW(load_tudataset(dir.path()), DataError);
}

TEST(TuDatasetTest, MultiGraphLocalizationAndEdgeLabels) {
    TempDir dir;
    // graph 1: nodes 1-3 (path), graph 2: nodes 4-5 (edge)
    dir.write("TOY_A.txt", "1,2\n2,1\n2,3\n3,2\n4,5\n5,4");
    dir.write("TOY_graph_indicator.txt", "1\n1\n1\n2\n2\n");
    dir.write("TOY_edge_labels.txt", "7\n7\n8\n8\n9\n9\n");
    dir.write("TOY_node_attributes.txt", "0.5,1\n1.5,2\n2.5,3\n3.5,4\n4.5,5\n");
    auto graphs = load_tudataset(dir.path());
    ASSERT_EQ(graphs.size(), 2u);
    EXPECT_EQ(graphs[0].num_nodes(), 3u);
    EXPECT_EQ(graphs[1].num_nodes(), 2u);
    EXPECT_EQ(graphs[0].edge_label(1, 2), 8);
    EXPECT_EQ(graphs[1].edges()[0], (Edge{0, 1}));
    EXPECT_EQ(std::get<NumericalFeatures>(graphs[1].features()).values, (std::vector<double>{3.5, 4, 4.5, 5}));
}

TEST(TuDatasetTest, CountsMatchIndependentLineCounts) {
    // Write a random multi-graph dataset, then compare loader totals with
    // line counts of the files themselves.
    std::mt19937 rng(3);
    TempDir dir;
    std::ostringstream a, ind;
    std::size_t offset = 0;
    std::size_t directed_lines = 0;
    for (int gi = 1; gi <= 6; ++gi) {
        auto g = testing::random_graph(rng, 3 + rng() % 6, 0.5, 0);
        for (std::size_t v = 0; v < g.num_nodes(); ++v) ind << gi << "\n";
        for (const Edge& e : g.edges()) {
            a << offset + e.u + 1 << ", " << offset + e.v + 1 << "\n";
            a << offset + e.v + 1 << ", " << offset + e.u + 1 << "\n";
            directed_lines += 2;
        }
        offset += g.num_nodes();
    }
    dir.write("R_A.txt", a.str());
    dir.write("R_graph_indicator.txt", ind.str());
    auto graphs = load_tudataset(dir.path());
    std::size_t nodes = 0, edges = 0;
    for (const auto& g : graphs) {
        nodes += g.num_nodes();
        edges += g.num_edges();
    }
    EXPECT_EQ(graphs.size(), 6u);
    EXPECT_EQ(nodes, offset);
    EXPECT_EQ(edges * 2, directed_lines);
}

// --- pair files ------------------------------------------------------------

MatchPair random_pair(std::mt19937& rng) {
    const int kind = int(rng() % 3);
    const std::size_t n = 2 + rng() % 6;
    auto g = testing::random_graph(rng, n, 0.5, kind == 1 ? 3 : 0);
    if (kind == 2) {
        std::normal_distribution<double> noise;
        NumericalFeatures f{2, {}};
        for (std::size_t i = 0; i < 2 * n; ++i) f.values.push_back(noise(rng));
        g = LabeledGraph(n, g.edges(), f);
    }
    const std::size_t k = 1 + rng() % n;
    auto perm = testing::random_permutation(rng, n);
    std::vector<NodeId> nodes(perm.begin(), perm.begin() + std::ptrdiff_t(k));
    auto q = induced_subgraph(g, nodes);
    return MatchPair(g, q, {Mapping{nodes}}, rng() % 2 == 0);
}

TEST(PairIoTest, RoundTripRandomPairs) {
    std::mt19937 rng(5);
    std::vector<MatchPair> pairs;
    for (int i = 0; i < 50; ++i) pairs.push_back(random_pair(rng));
    std::stringstream buf;
    write_pairs(buf, pairs);
    auto back = read_pairs(buf);
    EXPECT_EQ(back, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) EXPECT_EQ(back[i].matrix(), pairs[i].matrix());
}

TEST(PairIoTest, EmptyListRoundTrips) {
    std::stringstream buf;
    write_pairs(buf, {});
    EXPECT_TRUE(buf.str().empty());
    EXPECT_TRUE(read_pairs(buf).empty());
}

TEST(PairIoTest, NonInjectiveMappingNamesTheLine) {
    std::mt19937 rng(9);
    std::stringstream buf;
    write_pairs(buf, {random_pair(rng)});
    buf << R"({"data":{"nodes":3,"edges":[[0,1]],"features":{"kind":"none"}},)"
        << R"("query":{"nodes":2,"edges":[],"features":{"kind":"none"}},"mappings":[[2,2]],"truncated":false})"
        << "\n";
    try {
        read_pairs(buf, "pairs.jsonl");
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("pairs.jsonl:2"), std::string::npos) << e.what();
    }
}

TEST(PairIoTest, GarbageLineIsAnError) {
    std::stringstream buf("not json\n");
    EXPECT_THROW(read_pairs(buf), DataError);
}

}  // namespace
}  // namespace aedmatch
