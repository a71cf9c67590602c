#pragma once

#include <aedmatch/graph.hpp>

#include <random>
#include <set>
#include <vector>

namespace aedmatch::testing {

inline LabeledGraph complete_graph(std::size_t n, NodeFeatures f = NoFeatures{}) {
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) edges.push_back({NodeId(a), NodeId(b)});
    return LabeledGraph(n, std::move(edges), std::move(f));
}

inline LabeledGraph path_graph(std::size_t n, NodeFeatures f = NoFeatures{}) {
    std::vector<Edge> edges;
    for (std::size_t a = 0; a + 1 < n; ++a) edges.push_back({NodeId(a), NodeId(a + 1)});
    return LabeledGraph(n, std::move(edges), std::move(f));
}

inline CategoricalFeatures labels(std::vector<int> l) { return CategoricalFeatures{std::move(l)}; }

/// G(n, p) with optional uniform labels; may be disconnected. Independent of
/// the library's corpus generator.
inline LabeledGraph random_graph(std::mt19937& rng, std::size_t n, double p, int num_labels) {
    std::bernoulli_distribution coin(p);
    std::vector<Edge> edges;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (coin(rng)) edges.push_back({NodeId(a), NodeId(b)});
    NodeFeatures f = NoFeatures{};
    if (num_labels > 0) {
        std::uniform_int_distribution<int> l(0, num_labels - 1);
        CategoricalFeatures c;
        for (std::size_t v = 0; v < n; ++v) c.labels.push_back(l(rng));
        f = c;
    }
    return LabeledGraph(n, std::move(edges), std::move(f));
}

inline std::vector<NodeId> random_permutation(std::mt19937& rng, std::size_t n) {
    std::vector<NodeId> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = NodeId(i);
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

template <typename Range>
std::set<typename Range::value_type> as_set(const Range& r) {
    return {r.begin(), r.end()};
}

}  // namespace aedmatch::testing
