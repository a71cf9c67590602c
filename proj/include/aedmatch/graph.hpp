#pragma once

#include <aedmatch/errors.hpp>
#include <aedmatch/tensor.hpp>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace aedmatch {

using NodeId = std::int32_t;

struct NoFeatures {
    bool operator==(const NoFeatures&) const = default;
};

struct CategoricalFeatures {
    std::vector<int> labels;
    bool operator==(const CategoricalFeatures&) const = default;
};

/// One real vector of length `dim` per node, stored row-major.
struct NumericalFeatures {
    std::size_t dim = 0;
    std::vector<double> values;
    bool operator==(const NumericalFeatures&) const = default;
};

using NodeFeatures = std::variant<NoFeatures, CategoricalFeatures, NumericalFeatures>;

enum class FeatureKind { none, categorical, numerical };

inline std::string to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::none: return "none";
        case FeatureKind::categorical: return "categorical";
        case FeatureKind::numerical: return "numerical";
    }
    return "?";
}

struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    auto operator<=>(const Edge&) const = default;
};

/// Undirected simple graph with node features and optional edge labels.
///
/// Edges are normalized so that u < v and kept sorted; neighbor lists are
/// sorted ascending. Immutable after construction.
class LabeledGraph {
public:
    LabeledGraph() = default;

    LabeledGraph(std::size_t num_nodes, std::vector<Edge> edges, NodeFeatures features = NoFeatures{},
                 std::optional<std::vector<int>> edge_labels = std::nullopt)
        : num_nodes_(num_nodes), features_(std::move(features)) {
        if (edge_labels && edge_labels->size() != edges.size())
            throw DataError("edge label count does not match edge count");
        std::vector<std::pair<Edge, int>> tagged;
        tagged.reserve(edges.size());
        for (std::size_t i = 0; i < edges.size(); ++i) {
            Edge e = edges[i];
            if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= num_nodes ||
                static_cast<std::size_t>(e.v) >= num_nodes)
                throw DataError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                ") references a node outside 0.." + std::to_string(num_nodes));
            if (e.u == e.v) throw DataError("self-loop on node " + std::to_string(e.u));
            if (e.u > e.v) std::swap(e.u, e.v);
            tagged.emplace_back(e, edge_labels ? (*edge_labels)[i] : 0);
        }
        std::sort(tagged.begin(), tagged.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 1; i < tagged.size(); ++i)
            if (tagged[i].first == tagged[i - 1].first)
                throw DataError("duplicate edge (" + std::to_string(tagged[i].first.u) + "," +
                                std::to_string(tagged[i].first.v) + ")");
        edges_.reserve(tagged.size());
        for (const auto& [e, label] : tagged) edges_.push_back(e);
        if (edge_labels) {
            edge_labels_.emplace();
            edge_labels_->reserve(tagged.size());
            for (const auto& [e, label] : tagged) edge_labels_->push_back(label);
        }
        validate_features();
        build_adjacency();
    }

    std::size_t num_nodes() const noexcept { return num_nodes_; }
    std::size_t num_edges() const noexcept { return edges_.size(); }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const NodeFeatures& features() const noexcept { return features_; }
    bool has_edge_labels() const noexcept { return edge_labels_.has_value(); }
    const std::optional<std::vector<int>>& edge_labels() const noexcept { return edge_labels_; }

    FeatureKind feature_kind() const noexcept { return static_cast<FeatureKind>(features_.index()); }

    std::span<const NodeId> neighbors(NodeId v) const {
        return {adjacency_.data() + offsets_[v], offsets_[v + 1] - offsets_[v]};
    }
    std::size_t degree(NodeId v) const { return offsets_[v + 1] - offsets_[v]; }

    bool has_edge(NodeId a, NodeId b) const {
        auto nb = neighbors(a);
        return std::binary_search(nb.begin(), nb.end(), b);
    }

    /// Label of edge {a, b}; nullopt when the edge is absent or unlabeled.
    std::optional<int> edge_label(NodeId a, NodeId b) const {
        if (!edge_labels_) return std::nullopt;
        if (a > b) std::swap(a, b);
        auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{a, b});
        if (it == edges_.end() || *it != Edge{a, b}) return std::nullopt;
        return (*edge_labels_)[static_cast<std::size_t>(it - edges_.begin())];
    }

    bool operator==(const LabeledGraph& o) const {
        return num_nodes_ == o.num_nodes_ && edges_ == o.edges_ && features_ == o.features_ &&
               edge_labels_ == o.edge_labels_;
    }

private:
    void validate_features() const {
        if (const auto* c = std::get_if<CategoricalFeatures>(&features_)) {
            if (c->labels.size() != num_nodes_)
                throw DataError("categorical label count " + std::to_string(c->labels.size()) +
                                " does not match node count " + std::to_string(num_nodes_));
        } else if (const auto* n = std::get_if<NumericalFeatures>(&features_)) {
            if (n->dim == 0 && num_nodes_ > 0) throw DataError("numerical features need dim >= 1");
            if (n->values.size() != n->dim * num_nodes_)
                throw DataError("numerical feature block has " + std::to_string(n->values.size()) +
                                " values, expected " + std::to_string(n->dim * num_nodes_));
        }
    }

    void build_adjacency() {
        offsets_.assign(num_nodes_ + 1, 0);
        for (const Edge& e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        for (std::size_t i = 0; i < num_nodes_; ++i) offsets_[i + 1] += offsets_[i];
        adjacency_.resize(2 * edges_.size());
        std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
        for (const Edge& e : edges_) {
            adjacency_[cursor[e.u]++] = e.v;
            adjacency_[cursor[e.v]++] = e.u;
        }
        for (std::size_t i = 0; i < num_nodes_; ++i)
            std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                      adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    }

    std::size_t num_nodes_ = 0;
    std::vector<Edge> edges_;
    NodeFeatures features_ = NoFeatures{};
    std::optional<std::vector<int>> edge_labels_;
    std::vector<std::size_t> offsets_{0};
    std::vector<NodeId> adjacency_;
};

/// F^n(u) == F^n(v) for u in `a`, v in `b`. Feature kinds must agree.
inline bool node_features_equal(const LabeledGraph& a, NodeId u, const LabeledGraph& b, NodeId v) {
    const auto& fa = a.features();
    const auto& fb = b.features();
    if (fa.index() != fb.index()) return false;
    if (const auto* ca = std::get_if<CategoricalFeatures>(&fa))
        return ca->labels[u] == std::get<CategoricalFeatures>(fb).labels[v];
    if (const auto* na = std::get_if<NumericalFeatures>(&fa)) {
        const auto& nb = std::get<NumericalFeatures>(fb);
        if (na->dim != nb.dim) return false;
        return std::equal(na->values.begin() + static_cast<std::ptrdiff_t>(u * na->dim),
                          na->values.begin() + static_cast<std::ptrdiff_t>((u + 1) * na->dim),
                          nb.values.begin() + static_cast<std::ptrdiff_t>(v * nb.dim));
    }
    return true;
}

/// Component id per node (ids dense, in order of first appearance).
inline std::vector<int> connected_components(const LabeledGraph& g) {
    std::vector<int> comp(g.num_nodes(), -1);
    int next = 0;
    std::vector<NodeId> stack;
    for (std::size_t s = 0; s < g.num_nodes(); ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        stack.push_back(static_cast<NodeId>(s));
        while (!stack.empty()) {
            NodeId v = stack.back();
            stack.pop_back();
            for (NodeId w : g.neighbors(v))
                if (comp[w] < 0) {
                    comp[w] = next;
                    stack.push_back(w);
                }
        }
        ++next;
    }
    return comp;
}

inline bool is_connected(const LabeledGraph& g) {
    if (g.num_nodes() == 0) return true;
    auto comp = connected_components(g);
    return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

inline std::size_t largest_component_size(const LabeledGraph& g) {
    auto comp = connected_components(g);
    std::map<int, std::size_t> sizes;
    for (int c : comp) ++sizes[c];
    std::size_t best = 0;
    for (const auto& [c, s] : sizes) best = std::max(best, s);
    return best;
}

/// Subgraph induced by `nodes`; node i of the result is nodes[i] of `g`.
inline LabeledGraph induced_subgraph(const LabeledGraph& g, std::span<const NodeId> nodes) {
    std::vector<NodeId> local(g.num_nodes(), -1);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (local[nodes[i]] >= 0) throw DataError("induced_subgraph: repeated node");
        local[nodes[i]] = static_cast<NodeId>(i);
    }
    std::vector<Edge> edges;
    std::optional<std::vector<int>> labels;
    if (g.has_edge_labels()) labels.emplace();
    for (std::size_t i = 0; i < g.num_edges(); ++i) {
        const Edge& e = g.edges()[i];
        if (local[e.u] >= 0 && local[e.v] >= 0) {
            edges.push_back({local[e.u], local[e.v]});
            if (labels) labels->push_back((*g.edge_labels())[i]);
        }
    }
    NodeFeatures feats = NoFeatures{};
    if (const auto* c = std::get_if<CategoricalFeatures>(&g.features())) {
        CategoricalFeatures out;
        for (NodeId v : nodes) out.labels.push_back(c->labels[v]);
        feats = std::move(out);
    } else if (const auto* n = std::get_if<NumericalFeatures>(&g.features())) {
        NumericalFeatures out{n->dim, {}};
        for (NodeId v : nodes)
            out.values.insert(out.values.end(), n->values.begin() + static_cast<std::ptrdiff_t>(v * n->dim),
                              n->values.begin() + static_cast<std::ptrdiff_t>((v + 1) * n->dim));
        feats = std::move(out);
    }
    return LabeledGraph(nodes.size(), std::move(edges), std::move(feats), std::move(labels));
}

/// Relabels nodes: node v of `g` becomes node perm[v] of the result.
inline LabeledGraph permute_graph(const LabeledGraph& g, std::span<const NodeId> perm) {
    std::vector<NodeId> inverse(g.num_nodes());
    for (std::size_t v = 0; v < perm.size(); ++v) inverse[perm[v]] = static_cast<NodeId>(v);
    // induced_subgraph(nodes) puts nodes[i] at position i, so pass the inverse.
    return induced_subgraph(g, inverse);
}

// ---------------------------------------------------------------------------

/// Assignment of every query node to a data node.
struct Mapping {
    std::vector<NodeId> assignment;
    auto operator<=>(const Mapping&) const = default;
    std::size_t size() const noexcept { return assignment.size(); }
    NodeId operator[](std::size_t i) const { return assignment[i]; }
};

/// Empty optional when `m` is a valid injection of a |Q|-node graph into a
/// |G|-node graph; otherwise a description of the violation.
inline std::optional<std::string> mapping_violation(const Mapping& m, std::size_t query_size,
                                                    std::size_t data_size) {
    if (m.size() != query_size)
        return "mapping has " + std::to_string(m.size()) + " entries, query has " +
               std::to_string(query_size) + " nodes";
    std::vector<char> used(data_size, 0);
    for (NodeId v : m.assignment) {
        if (v < 0 || static_cast<std::size_t>(v) >= data_size)
            return "mapping target " + std::to_string(v) + " outside data graph";
        if (used[v]) return "mapping is not injective (data node " + std::to_string(v) + " reused)";
        used[v] = 1;
    }
    return std::nullopt;
}

/// |Q| x |G| 0/1 matrix: entry (i, j) is 1 iff some mapping sends i to j.
class MatchingMatrix {
public:
    MatchingMatrix() = default;

    MatchingMatrix(std::size_t query_size, std::size_t data_size, std::span<const Mapping> mappings)
        : rows_(query_size), cols_(data_size), entries_(query_size * data_size, 0) {
        for (const Mapping& m : mappings)
            for (std::size_t i = 0; i < m.size() && i < rows_; ++i) entries_[i * cols_ + m[i]] = 1;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool at(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j] != 0; }

    std::size_t row_count(std::size_t i) const {
        return static_cast<std::size_t>(std::count(entries_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
                                                   entries_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_),
                                                   std::uint8_t{1}));
    }

    bool all_rows_nonzero() const {
        for (std::size_t i = 0; i < rows_; ++i)
            if (row_count(i) == 0) return false;
        return true;
    }

    Tensor to_tensor() const {
        Tensor t(rows_, cols_);
        for (std::size_t k = 0; k < entries_.size(); ++k) t[k] = entries_[k];
        return t;
    }

    bool operator==(const MatchingMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::uint8_t> entries_;
};

/// A data graph, a query graph it contains, and the known mappings.
///
/// The matching matrix is derived from the mappings at construction.
/// `truncated` marks mapping sets cut short by an enumeration cap.
class MatchPair {
public:
    MatchPair() = default;

    MatchPair(LabeledGraph data, LabeledGraph query, std::vector<Mapping> mappings, bool truncated = false)
        : data_(std::move(data)), query_(std::move(query)), mappings_(std::move(mappings)),
          truncated_(truncated) {
        if (data_.feature_kind() != query_.feature_kind())
            throw DataError("feature kinds differ: data graph is " + to_string(data_.feature_kind()) +
                            ", query graph is " + to_string(query_.feature_kind()));
        if (mappings_.empty()) throw DataError("match pair needs at least one mapping");
        for (const Mapping& m : mappings_)
            if (auto why = mapping_violation(m, query_.num_nodes(), data_.num_nodes())) throw DataError(*why);
        matrix_ = MatchingMatrix(query_.num_nodes(), data_.num_nodes(), mappings_);
    }

    const LabeledGraph& data_graph() const noexcept { return data_; }
    const LabeledGraph& query_graph() const noexcept { return query_; }
    const std::vector<Mapping>& mappings() const noexcept { return mappings_; }
    const MatchingMatrix& matrix() const noexcept { return matrix_; }
    bool truncated() const noexcept { return truncated_; }

    /// The mapping used to define matched nodes and extra edges during training.
    const Mapping& primary_mapping() const { return mappings_.front(); }

    bool operator==(const MatchPair& o) const {
        return data_ == o.data_ && query_ == o.query_ && mappings_ == o.mappings_ && truncated_ == o.truncated_;
    }

private:
    LabeledGraph data_;
    LabeledGraph query_;
    std::vector<Mapping> mappings_;
    MatchingMatrix matrix_;
    bool truncated_ = false;
};

// ---------------------------------------------------------------------------
// Feature encoding

/// Categorical label -> one-hot column.
using LabelVocabulary = std::map<int, std::size_t>;

inline LabelVocabulary make_vocabulary(std::vector<int> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    LabelVocabulary vocab;
    for (std::size_t i = 0; i < labels.size(); ++i) vocab[labels[i]] = i;
    return vocab;
}

inline void collect_labels(const LabeledGraph& g, std::vector<int>& out) {
    if (const auto* c = std::get_if<CategoricalFeatures>(&g.features()))
        out.insert(out.end(), c->labels.begin(), c->labels.end());
}

/// Width of the encoded feature matrix for graphs of this kind.
inline std::size_t encoded_width(FeatureKind kind, const LabelVocabulary& vocab, std::size_t numerical_dim) {
    switch (kind) {
        case FeatureKind::none: return 1;
        case FeatureKind::categorical: return vocab.size();
        case FeatureKind::numerical: return numerical_dim;
    }
    return 0;
}

/// |V| x f0 model input: one-hot over `vocab` for categorical graphs, the
/// raw vectors for numerical graphs, a constant 1.0 column otherwise.
inline Tensor encode_features(const LabeledGraph& g, const LabelVocabulary* vocab = nullptr) {
    const std::size_t n = g.num_nodes();
    if (const auto* c = std::get_if<CategoricalFeatures>(&g.features())) {
        if (vocab == nullptr) throw ConfigError("categorical graph needs a label vocabulary");
        Tensor out(n, vocab->size());
        for (std::size_t v = 0; v < n; ++v) {
            auto it = vocab->find(c->labels[v]);
            if (it == vocab->end())
                throw DataError("label " + std::to_string(c->labels[v]) + " is not in the vocabulary");
            out(v, it->second) = 1.0;
        }
        return out;
    }
    if (const auto* num = std::get_if<NumericalFeatures>(&g.features())) return Tensor(n, num->dim, num->values);
    return Tensor(n, 1, 1.0);
}

}  // namespace aedmatch
