#pragma once

#include <aedmatch/errors.hpp>
#include <aedmatch/exact_match.hpp>
#include <aedmatch/graph.hpp>
#include <aedmatch/parallel.hpp>
#include <aedmatch/rng.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace aedmatch {

struct QueryExtraction {
    LabeledGraph query;
    Mapping extraction;  // query node i -> data node extraction[i]
};

/// Grows a random connected node set from a uniform start node by repeatedly
/// adding a uniformly chosen frontier node, then takes the induced subgraph.
inline QueryExtraction sample_connected_subgraph(const LabeledGraph& g, std::size_t size, Rng& rng) {
    if (size == 0 || size > g.num_nodes())
        throw ConfigError("subgraph size " + std::to_string(size) + " outside 1.." + std::to_string(g.num_nodes()));

    const auto comp = connected_components(g);
    std::vector<std::size_t> comp_size(g.num_nodes(), 0);
    for (int c : comp) ++comp_size[static_cast<std::size_t>(c)];
    std::vector<NodeId> starts;
    for (std::size_t v = 0; v < g.num_nodes(); ++v)
        if (comp_size[static_cast<std::size_t>(comp[v])] >= size) starts.push_back(static_cast<NodeId>(v));
    if (starts.empty())
        throw DataError("no connected component with " + std::to_string(size) + " nodes");

    std::vector<char> state(g.num_nodes(), 0);  // 0 free, 1 frontier, 2 selected
    std::vector<NodeId> selected;
    std::vector<NodeId> frontier;
    const auto select = [&](NodeId v) {
        state[v] = 2;
        selected.push_back(v);
        for (NodeId w : g.neighbors(v))
            if (state[w] == 0) {
                state[w] = 1;
                frontier.push_back(w);
            }
    };
    select(starts[uniform_index(rng, starts.size())]);
    while (selected.size() < size) {
        const std::size_t k = uniform_index(rng, frontier.size());
        const NodeId v = frontier[k];
        frontier[k] = frontier.back();
        frontier.pop_back();
        select(v);
    }
    return {induced_subgraph(g, selected), Mapping{selected}};
}

/// Erdos-Renyi corpus parameters. num_labels == 0 gives featureless graphs.
struct SyntheticParams {
    std::size_t count = 1;
    std::size_t min_nodes = 1;
    std::size_t max_nodes = 1;
    double edge_prob = 0.5;
    int num_labels = 0;
    std::size_t max_rejections = 1000;
};

/// Connected G(n, p) graphs with uniform categorical labels. Disconnected
/// draws are rejected and redrawn.
inline std::vector<LabeledGraph> generate_synthetic_corpus(const SyntheticParams& params, Rng& rng) {
    if (params.min_nodes == 0 || params.max_nodes < params.min_nodes)
        throw ConfigError("synthetic node range must satisfy 1 <= min <= max");
    if (params.edge_prob < 0.0 || params.edge_prob > 1.0) throw ConfigError("edge probability outside [0, 1]");
    if (params.num_labels < 0) throw ConfigError("label count must be >= 0");

    std::vector<LabeledGraph> corpus;
    corpus.reserve(params.count);
    std::bernoulli_distribution coin(params.edge_prob);
    while (corpus.size() < params.count) {
        std::size_t rejections = 0;
        for (;;) {
            const std::size_t n =
                std::uniform_int_distribution<std::size_t>(params.min_nodes, params.max_nodes)(rng);
            std::vector<Edge> edges;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b)
                    if (coin(rng)) edges.push_back({static_cast<NodeId>(a), static_cast<NodeId>(b)});
            NodeFeatures feats = NoFeatures{};
            if (params.num_labels > 0) {
                CategoricalFeatures c;
                std::uniform_int_distribution<int> label(0, params.num_labels - 1);
                for (std::size_t v = 0; v < n; ++v) c.labels.push_back(label(rng));
                feats = std::move(c);
            }
            LabeledGraph g(n, std::move(edges), std::move(feats));
            if (is_connected(g)) {
                corpus.push_back(std::move(g));
                break;
            }
            if (++rejections >= params.max_rejections)
                throw ConfigError(std::to_string(params.max_rejections) +
                                  " consecutive disconnected draws; raise the edge probability");
        }
    }
    return corpus;
}

struct GenConfig {
    std::size_t query_min = 1;
    std::size_t query_max = 1;
    std::size_t num_samples = 1;
    std::uint64_t seed = 0;
    /// Mapping enumeration cap per pair; beyond it the pair is flagged truncated.
    std::size_t mapping_cap = 1000;
    /// Sub-stream name; distinct names give independent pair sets (splits).
    std::string stream = "pairs";
    std::size_t threads = 1;
};

struct GenResult {
    std::vector<MatchPair> pairs;
    std::size_t skipped_graphs = 0;  // corpus graphs too small for the query range
    std::size_t truncated_pairs = 0;
};

/// Builds pairs by extracting a random connected query from a random corpus
/// graph and enumerating all its mappings. The extraction mapping is always
/// stored first. Sample i draws from its own stream, so results do not depend
/// on the thread count.
inline GenResult generate_pairs(const GenConfig& cfg, std::span<const LabeledGraph> corpus) {
    if (cfg.query_min == 0 || cfg.query_max < cfg.query_min)
        throw ConfigError("query size range must satisfy 1 <= min <= max");
    if (cfg.num_samples == 0) throw ConfigError("num_samples must be >= 1");
    if (corpus.empty()) throw DataError("empty corpus");

    GenResult out;
    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (largest_component_size(corpus[i]) >= cfg.query_max)
            eligible.push_back(i);
        else
            ++out.skipped_graphs;
    }
    if (eligible.empty())
        throw DataError("no corpus graph has a connected component of " + std::to_string(cfg.query_max) + " nodes");

    std::vector<MatchPair> pairs(cfg.num_samples);
    parallel_for(cfg.num_samples, cfg.threads, [&](std::size_t i) {
        Rng rng = make_rng(cfg.seed, cfg.stream, i);
        const LabeledGraph& g = corpus[eligible[uniform_index(rng, eligible.size())]];
        const std::size_t size = std::uniform_int_distribution<std::size_t>(cfg.query_min, cfg.query_max)(rng);
        QueryExtraction ex = sample_connected_subgraph(g, size, rng);

        MatchOptions opts;
        opts.limit = cfg.mapping_cap;
        MatchResult found = enumerate_mappings(g, ex.query, opts);
        std::vector<Mapping> mappings{ex.extraction};
        for (Mapping& m : found.mappings)
            if (m != ex.extraction) mappings.push_back(std::move(m));
        pairs[i] = MatchPair(g, std::move(ex.query), std::move(mappings), found.truncated);
    });
    for (const MatchPair& p : pairs) out.truncated_pairs += p.truncated() ? 1 : 0;
    out.pairs = std::move(pairs);
    return out;
}

}  // namespace aedmatch
