#pragma once

// Exact subgraph isomorphism by VF2-style backtracking.
//
// Query nodes are visited in a connected order: each node after the first of
// its component has an already-mapped neighbor (its "parent"), so candidates
// are drawn from the data-graph neighbors of the parent's image. A candidate
// must carry the same node feature, have degree >= the query node's degree,
// and agree with every already-mapped query node on adjacency (edge present
// with equal label, and under induced semantics edge absent where the query
// has no edge).
//
// Degree filter: the query neighbors of u map injectively into data
// neighbors of m(u), so deg_G(m(u)) >= deg_Q(u) holds for any match, induced
// or not.

#include <aedmatch/errors.hpp>
#include <aedmatch/graph.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <optional>
#include <tuple>
#include <vector>

namespace aedmatch {

enum class SearchMode { all, first, exists };

struct MatchOptions {
    SearchMode mode = SearchMode::all;
    /// Stop after this many mappings; the result is flagged truncated when a
    /// further mapping exists.
    std::optional<std::size_t> limit;
    std::optional<std::chrono::duration<double>> deadline;
    /// Preserve non-edges as well as edges. Non-induced matching is
    /// available but everything downstream assumes induced.
    bool induced = true;
};

struct SearchStats {
    std::uint64_t recursions = 0;
    double wall_seconds = 0.0;
};

struct MatchResult {
    std::vector<Mapping> mappings;  // empty in `exists` mode
    bool found = false;
    bool truncated = false;   // limit reached with more mappings remaining
    bool incomplete = false;  // deadline hit; `mappings` is a partial set
    SearchStats stats;
};

namespace exact_detail {

/// O(1) adjacency test over a bit matrix for moderate graphs, binary search
/// over neighbor lists beyond that.
class AdjacencyIndex {
public:
    explicit AdjacencyIndex(const LabeledGraph& g) : g_(&g), n_(g.num_nodes()) {
        if (n_ <= kDenseLimit) {
            words_per_row_ = (n_ + 63) / 64;
            bits_.assign(n_ * words_per_row_, 0);
            for (const Edge& e : g.edges()) {
                set(e.u, e.v);
                set(e.v, e.u);
            }
        }
    }

    bool operator()(NodeId a, NodeId b) const {
        if (bits_.empty()) return g_->has_edge(a, b);
        return (bits_[static_cast<std::size_t>(a) * words_per_row_ + (static_cast<std::size_t>(b) >> 6)] >>
                (static_cast<std::size_t>(b) & 63)) & 1u;
    }

private:
    static constexpr std::size_t kDenseLimit = 16384;

    void set(NodeId a, NodeId b) {
        bits_[static_cast<std::size_t>(a) * words_per_row_ + (static_cast<std::size_t>(b) >> 6)] |=
            std::uint64_t{1} << (static_cast<std::size_t>(b) & 63);
    }

    const LabeledGraph* g_;
    std::size_t n_;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> bits_;
};

struct AdjacencyCheck {
    std::size_t earlier_position;
    bool query_edge;
    std::optional<int> label;
};

struct OrderedQuery {
    std::vector<NodeId> order;                        // position -> query node
    std::vector<int> parent_position;                 // -1 for component roots
    std::vector<std::vector<AdjacencyCheck>> checks;  // per position
};

inline OrderedQuery connected_order(const LabeledGraph& q) {
    const std::size_t n = q.num_nodes();
    OrderedQuery out;
    std::vector<int> position(n, -1);
    std::vector<int> mapped_neighbors(n, 0);
    for (std::size_t step = 0; step < n; ++step) {
        NodeId best = -1;
        for (std::size_t v = 0; v < n; ++v) {
            if (position[v] >= 0) continue;
            const auto cand = static_cast<NodeId>(v);
            if (best < 0) {
                best = cand;
                continue;
            }
            // connected frontier first, then most mapped neighbors, then degree
            const auto key = [&](NodeId x) {
                return std::tuple(mapped_neighbors[x] > 0, mapped_neighbors[x], q.degree(x));
            };
            if (key(cand) > key(best)) best = cand;
        }
        position[best] = static_cast<int>(step);
        out.order.push_back(best);
        for (NodeId w : q.neighbors(best)) ++mapped_neighbors[w];

        int parent = -1;
        std::vector<AdjacencyCheck> checks;
        for (std::size_t p = 0; p < step; ++p) {
            const NodeId w = out.order[p];
            const bool adj = q.has_edge(best, w);
            if (adj && parent < 0) parent = static_cast<int>(p);
            checks.push_back({p, adj, adj ? q.edge_label(best, w) : std::nullopt});
        }
        out.parent_position.push_back(parent);
        out.checks.push_back(std::move(checks));
    }
    return out;
}

}  // namespace exact_detail

/// Partial query->data assignment during backtracking. Kept injective and
/// consistent with every already-assigned pair of query nodes.
struct SearchState {
    std::vector<NodeId> by_position;  // data node assigned at each order position
    std::vector<char> data_used;
    std::size_t depth = 0;
};

namespace exact_detail {

class Searcher {
public:
    using Clock = std::chrono::steady_clock;

    Searcher(const LabeledGraph& data, const LabeledGraph& query, const MatchOptions& options)
        : data_(data), query_(query), options_(options), data_adj_(data), plan_(connected_order(query)),
          nq_(query.num_nodes()), ng_(data.num_nodes()),
          check_labels_(query.has_edge_labels() || data.has_edge_labels()) {
        compatible_.assign(nq_ * ng_, 0);
        for (std::size_t p = 0; p < nq_; ++p) {
            const NodeId u = plan_.order[p];
            for (std::size_t v = 0; v < ng_; ++v) {
                const auto dv = static_cast<NodeId>(v);
                compatible_[p * ng_ + v] =
                    node_features_equal(query, u, data, dv) && data.degree(dv) >= query.degree(u);
            }
        }
        state_.by_position.assign(nq_, -1);
        state_.data_used.assign(ng_, 0);
    }

    MatchResult run() {
        start_ = Clock::now();
        extend(0);
        result_.stats.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
        return std::move(result_);
    }

private:
    bool feasible(std::size_t p, NodeId v) const {
        if (state_.data_used[v] || !compatible_[p * ng_ + static_cast<std::size_t>(v)]) return false;
        for (const auto& c : plan_.checks[p]) {
            const NodeId w = state_.by_position[c.earlier_position];
            const bool data_edge = data_adj_(v, w);
            if (c.query_edge) {
                if (!data_edge) return false;
                if (check_labels_ && data_.edge_label(v, w) != c.label) return false;
            } else if (options_.induced && data_edge) {
                return false;
            }
        }
        return true;
    }

    void emit() {
        if (options_.mode == SearchMode::exists) {
            result_.found = true;
            stop_ = true;
            return;
        }
        if (options_.limit && result_.mappings.size() >= *options_.limit) {
            result_.truncated = true;
            stop_ = true;
            return;
        }
        Mapping m;
        m.assignment.resize(nq_);
        for (std::size_t p = 0; p < nq_; ++p) m.assignment[plan_.order[p]] = state_.by_position[p];
        result_.mappings.push_back(std::move(m));
        result_.found = true;
        if (options_.mode == SearchMode::first) stop_ = true;
    }

    void try_candidate(std::size_t p, NodeId v) {
        if (!feasible(p, v)) return;
        state_.by_position[p] = v;
        state_.data_used[v] = 1;
        ++state_.depth;
        extend(p + 1);
        --state_.depth;
        state_.data_used[v] = 0;
        state_.by_position[p] = -1;
    }

    void extend(std::size_t p) {
        ++result_.stats.recursions;
        if (options_.deadline && (result_.stats.recursions & 255u) == 0 &&
            Clock::now() - start_ > *options_.deadline) {
            result_.incomplete = true;
            stop_ = true;
            return;
        }
        if (p == nq_) {
            emit();
            return;
        }
        const int parent = plan_.parent_position[p];
        if (parent >= 0) {
            // ascending, since neighbor lists are sorted
            for (NodeId v : data_.neighbors(state_.by_position[static_cast<std::size_t>(parent)])) {
                try_candidate(p, v);
                if (stop_) return;
            }
        } else {
            for (std::size_t v = 0; v < ng_; ++v) {
                try_candidate(p, static_cast<NodeId>(v));
                if (stop_) return;
            }
        }
    }

    const LabeledGraph& data_;
    const LabeledGraph& query_;
    const MatchOptions& options_;
    AdjacencyIndex data_adj_;
    OrderedQuery plan_;
    std::size_t nq_;
    std::size_t ng_;
    bool check_labels_;
    std::vector<char> compatible_;
    SearchState state_;
    MatchResult result_;
    Clock::time_point start_;
    bool stop_ = false;
};

}  // namespace exact_detail

/// Enumerates SM(Q, G): every injection of the query into the data graph that
/// preserves node features, edges with their labels, and (induced) non-edges.
/// Candidates are tried in ascending data-node order, so `first` is
/// reproducible.
inline MatchResult enumerate_mappings(const LabeledGraph& data, const LabeledGraph& query,
                                      const MatchOptions& options = {}) {
    if (query.num_nodes() == 0) throw ConfigError("query graph must have at least one node");
    if (query.num_nodes() > data.num_nodes()) return {};
    return exact_detail::Searcher(data, query, options).run();
}

/// Checks the match conditions for one complete mapping directly from the
/// definitions, with no pruning or ordering.
inline bool satisfies_match_conditions(const LabeledGraph& data, const LabeledGraph& query, const Mapping& m,
                                       bool induced = true) {
    if (mapping_violation(m, query.num_nodes(), data.num_nodes())) return false;
    for (std::size_t u = 0; u < query.num_nodes(); ++u)
        if (!node_features_equal(query, static_cast<NodeId>(u), data, m[u])) return false;
    for (std::size_t a = 0; a < query.num_nodes(); ++a) {
        for (std::size_t b = a + 1; b < query.num_nodes(); ++b) {
            const auto ua = static_cast<NodeId>(a), ub = static_cast<NodeId>(b);
            const bool qe = query.has_edge(ua, ub);
            const bool ge = data.has_edge(m[a], m[b]);
            if (qe && !ge) return false;
            if (qe && query.edge_label(ua, ub) != data.edge_label(m[a], m[b])) return false;
            if (induced && !qe && ge) return false;
        }
    }
    return true;
}

/// Test oracle: tries every injection V_Q -> V_G. Output sorted.
inline std::vector<Mapping> brute_force_mappings(const LabeledGraph& data, const LabeledGraph& query,
                                                 bool induced = true) {
    constexpr std::size_t kMaxDataNodes = 10;
    if (data.num_nodes() > kMaxDataNodes)
        throw ConfigError("brute_force_mappings is limited to data graphs with <= 10 nodes");
    std::vector<Mapping> out;
    const std::size_t nq = query.num_nodes(), ng = data.num_nodes();
    if (nq > ng) return out;
    Mapping m;
    m.assignment.assign(nq, -1);
    std::vector<char> used(ng, 0);
    const auto rec = [&](auto& self, std::size_t i) -> void {
        if (i == nq) {
            if (satisfies_match_conditions(data, query, m, induced)) out.push_back(m);
            return;
        }
        for (std::size_t v = 0; v < ng; ++v) {
            if (used[v]) continue;
            used[v] = 1;
            m.assignment[i] = static_cast<NodeId>(v);
            self(self, i + 1);
            used[v] = 0;
        }
    };
    rec(rec, 0);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace aedmatch
