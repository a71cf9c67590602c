#pragma once

// Attention-based subgraph matching network.
//
// Both graphs share one input projection and one set of layer weights. Each
// layer runs K attention heads over graph neighborhoods (no self-loops) and
// adds the head concatenation, passed through a small MLP, to its input.
// Data-graph attention is steered by a query vector computed from the pooled
// query-graph embeddings, so the same data graph is attended differently for
// different queries. From layer 2 on, the query side attends over
// cross-information: each query node's soft average of data-node embeddings
// under the current matching matrix.

#include <aedmatch/autodiff.hpp>
#include <aedmatch/errors.hpp>
#include <aedmatch/graph.hpp>
#include <aedmatch/params.hpp>
#include <aedmatch/rng.hpp>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aedmatch {

enum class Pooling { mean, sum, max };
enum class Similarity { cosine, euclidean };
/// How per-head kept-minus-deleted attention mass is combined in the
/// delete loss.
enum class HeadReduction { mean, sum };

NLOHMANN_JSON_SERIALIZE_ENUM(Pooling, {{Pooling::mean, "mean"}, {Pooling::sum, "sum"}, {Pooling::max, "max"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Similarity, {{Similarity::cosine, "cosine"}, {Similarity::euclidean, "euclidean"}})
NLOHMANN_JSON_SERIALIZE_ENUM(HeadReduction, {{HeadReduction::mean, "mean"}, {HeadReduction::sum, "sum"}})

struct ModelConfig {
    std::size_t layers = 3;
    std::size_t heads = 4;
    std::size_t hidden_dim = 32;
    std::size_t input_dim = 1;
    double lambda1 = 0.5;
    double lambda2 = 0.2;
    Pooling pooling = Pooling::mean;
    Similarity similarity = Similarity::cosine;
    HeadReduction delete_heads = HeadReduction::mean;
    bool shared_temperature = false;
    /// Attend over the query graph's own embeddings instead of the
    /// cross-information (the matrix is still produced for the loss).
    bool no_cross = false;
    double initial_temperature = 0.95;
    double slope = 0.2;
    std::uint64_t init_seed = 0;

    std::size_t head_dim() const { return hidden_dim / heads; }

    void validate() const {
        if (layers < 2) throw ConfigError("layers must be >= 2");
        if (heads == 0 || hidden_dim == 0 || hidden_dim % heads != 0)
            throw ConfigError("hidden_dim must be a positive multiple of heads");
        if (input_dim == 0) throw ConfigError("input_dim must be >= 1");
        if (lambda1 < 0.0 || lambda1 > 1.0 || lambda2 < 0.0 || lambda2 > 1.0)
            throw ConfigError("lambda1 and lambda2 must lie in [0, 1]");
        if (!(initial_temperature > 0.0 && initial_temperature < 1.0))
            throw ConfigError("initial_temperature must lie in (0, 1)");
    }

    bool operator==(const ModelConfig&) const = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, layers, heads, hidden_dim, input_dim, lambda1, lambda2,
                                                pooling, similarity, delete_heads, shared_temperature, no_cross,
                                                initial_temperature, slope, init_seed)

// ---------------------------------------------------------------------------
// Features

/// Fixed mapping from graph features to model input rows.
struct FeatureEncoder {
    FeatureKind kind = FeatureKind::none;
    LabelVocabulary vocab;
    std::size_t numerical_dim = 0;

    static FeatureEncoder fit(std::span<const MatchPair> pairs) {
        if (pairs.empty()) throw DataError("cannot fit a feature encoder on zero pairs");
        FeatureEncoder enc;
        enc.kind = pairs.front().data_graph().feature_kind();
        std::vector<int> labels;
        for (const MatchPair& p : pairs) {
            for (const LabeledGraph* g : {&p.data_graph(), &p.query_graph()}) {
                if (g->feature_kind() != enc.kind)
                    throw DataError("pairs mix feature kinds " + to_string(enc.kind) + " and " +
                                    to_string(g->feature_kind()));
                collect_labels(*g, labels);
                if (const auto* n = std::get_if<NumericalFeatures>(&g->features())) {
                    if (enc.numerical_dim != 0 && n->dim != enc.numerical_dim)
                        throw DataError("numerical feature widths differ across graphs");
                    enc.numerical_dim = n->dim;
                }
            }
        }
        enc.vocab = make_vocabulary(std::move(labels));
        return enc;
    }

    std::size_t width() const { return encoded_width(kind, vocab, numerical_dim); }

    Tensor encode(const LabeledGraph& g) const {
        if (g.feature_kind() != kind)
            throw DataError("graph features are " + to_string(g.feature_kind()) + ", model expects " + to_string(kind));
        Tensor x = encode_features(g, &vocab);
        if (x.cols() != width())
            throw DataError("feature width " + std::to_string(x.cols()) + ", model expects " + std::to_string(width()));
        return x;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = to_string(kind);
        std::vector<int> labels(vocab.size());
        for (const auto& [label, index] : vocab) labels[index] = label;
        j["labels"] = labels;
        j["numerical_dim"] = numerical_dim;
        return j;
    }

    static FeatureEncoder from_json(const nlohmann::json& j) {
        FeatureEncoder enc;
        const std::string k = j.at("kind").get<std::string>();
        if (k == "none")
            enc.kind = FeatureKind::none;
        else if (k == "categorical")
            enc.kind = FeatureKind::categorical;
        else if (k == "numerical")
            enc.kind = FeatureKind::numerical;
        else
            throw DataError("unknown feature kind '" + k + "'");
        const auto labels = j.at("labels").get<std::vector<int>>();
        for (std::size_t i = 0; i < labels.size(); ++i) enc.vocab[labels[i]] = i;
        enc.numerical_dim = j.at("numerical_dim").get<std::size_t>();
        return enc;
    }

    bool operator==(const FeatureEncoder&) const = default;
};

/// Model-ready view of one graph.
struct GraphInput {
    Tensor features;
    ad::Mask adjacency;
};

inline ad::Mask adjacency_mask(const LabeledGraph& g) {
    ad::Mask m(g.num_nodes(), g.num_nodes());
    for (const Edge& e : g.edges()) {
        m.set(static_cast<std::size_t>(e.u), static_cast<std::size_t>(e.v));
        m.set(static_cast<std::size_t>(e.v), static_cast<std::size_t>(e.u));
    }
    return m;
}

inline GraphInput make_graph_input(const FeatureEncoder& enc, const LabeledGraph& g) {
    return {enc.encode(g), adjacency_mask(g)};
}

// ---------------------------------------------------------------------------
// Parameters

namespace model_names {

inline std::string head(std::size_t t, std::size_t k) {
    return "layer" + std::to_string(t) + ".head" + std::to_string(k);
}
inline std::string mlp(std::size_t t) { return "layer" + std::to_string(t) + ".mlp"; }
inline std::string temperature(const ModelConfig& cfg, std::size_t t) {
    return cfg.shared_temperature ? std::string("tau.rho") : "tau" + std::to_string(t) + ".rho";
}

}  // namespace model_names

inline Tensor glorot_uniform(Rng& rng, std::size_t in, std::size_t out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t(in, out);
    for (double& v : t.values()) v = u(rng);
    return t;
}

/// Fresh parameters. Weights are Glorot-uniform from the config seed, biases
/// zero, temperatures at `initial_temperature`.
inline ParamStore init_params(const ModelConfig& cfg) {
    cfg.validate();
    Rng rng = make_rng(cfg.init_seed, "init");
    const std::size_t d = cfg.hidden_dim, dh = cfg.head_dim();
    ParamStore store;
    const auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
        store.add(name + ".weight", glorot_uniform(rng, in, out));
        store.add(name + ".bias", Tensor(1, out));
    };
    dense("input", cfg.input_dim, d);
    for (std::size_t t = 1; t <= cfg.layers; ++t) {
        for (std::size_t k = 0; k < cfg.heads; ++k) {
            const std::string h = model_names::head(t, k);
            store.add(h + ".W", glorot_uniform(rng, d, dh));
            dense(h + ".q.0", d, 2 * dh);
            dense(h + ".q.1", 2 * dh, 2 * dh);
            if (t == 1) store.add(h + ".a", glorot_uniform(rng, 1, 2 * dh));
        }
        dense(model_names::mlp(t) + ".0", d, d);
        dense(model_names::mlp(t) + ".1", d, d);
    }
    const double rho = std::log(cfg.initial_temperature / (1.0 - cfg.initial_temperature));
    for (std::size_t t = 2; t <= cfg.layers + 1; ++t) {
        const std::string name = model_names::temperature(cfg, t);
        if (!store.contains(name)) store.add(name, Tensor::scalar(rho));
    }
    return store;
}

inline std::vector<ad::DenseLayer> bind_mlp(TapeParams& p, const std::string& prefix) {
    return {{p[prefix + ".0.weight"], p[prefix + ".0.bias"]}, {p[prefix + ".1.weight"], p[prefix + ".1.bias"]}};
}

// ---------------------------------------------------------------------------
// Building blocks

struct CrossPropagation {
    ad::Var matrix;  // |Q| x |G|, rows sum to 1
    ad::Var cross;   // |Q| x d
};

/// Soft assignment of query nodes to data nodes and the resulting
/// cross-information N_Q = M H_G. Data-graph embeddings are not modified.
inline CrossPropagation cross_propagate(ad::Var hq, ad::Var hg, ad::Var temperature,
                                        Similarity sim = Similarity::cosine) {
    ad::Var scores = sim == Similarity::cosine ? ad::cosine_similarity_matrix(hq, hg)
                                               : ad::neg_sq_euclidean_matrix(hq, hg);
    ad::Var m = ad::row_softmax(scores, temperature);
    return {m, ad::matmul(m, hg)};
}

inline ad::Var pool_rows(ad::Var h, Pooling p) {
    switch (p) {
        case Pooling::mean: return ad::mean(h, 0);
        case Pooling::sum: return ad::sum(h, 0);
        case Pooling::max: return ad::max_rows(h);
    }
    throw ConfigError("unknown pooling");
}

/// Per-(layer, head) query vector of width 2d' from pooled query embeddings.
inline ad::Var sample_query(TapeParams& p, const ModelConfig& cfg, ad::Var pooled, std::size_t t, std::size_t k) {
    const std::string h = model_names::head(t, k);
    std::vector<ad::DenseLayer> mlp{{p[h + ".q.0.weight"], p[h + ".q.0.bias"]},
                                    {p[h + ".q.1.weight"], p[h + ".q.1.bias"]}};
    return ad::mlp_apply(pooled, mlp, cfg.slope);
}

struct Attention {
    ad::Var alpha;     // n x n, rows sum to 1 over neighbors, zero rows for isolated nodes
    ad::Var messages;  // n x d', projected source embeddings
};

/// e_ij = LeakyReLU(q . [h_i W || h_j W]) for neighbors j of i, normalized
/// per row. The logit splits into s_i + t_j, computed for all pairs at once
/// and masked to the adjacency.
inline Attention attention_coefficients(ad::Var source, ad::Var query, ad::Var w, const ad::Mask& adjacency,
                                        double slope = 0.2) {
    const std::size_t dh = w.cols();
    if (query.rows() != 1 || query.cols() != 2 * dh)
        throw NumericError("attention query must be 1x" + std::to_string(2 * dh) + ", got " +
                           query.value().shape_string());
    ad::Var proj = ad::matmul(source, w);
    ad::Var s = ad::matmul(proj, ad::transpose(ad::slice_cols(query, 0, dh)));
    ad::Var t = ad::transpose(ad::matmul(proj, ad::transpose(ad::slice_cols(query, dh, 2 * dh))));
    ad::Var e = ad::leaky_relu(ad::outer_add(s, t), slope);
    return {ad::row_softmax_masked(e, adjacency, 1.0, ad::EmptyRows::zero), proj};
}

struct LayerOutput {
    ad::Var hq;
    ad::Var hg;
    std::optional<ad::Var> matrix;  // from layer 2 on
    std::vector<ad::Var> alpha_g;   // per head
    std::vector<ad::Var> alpha_q;
};

/// One layer (t counts from 1). `temperature` is required from t = 2.
inline LayerOutput layer_forward(TapeParams& p, const ModelConfig& cfg, std::size_t t, ad::Var hq, ad::Var hg,
                                 const ad::Mask& adj_q, const ad::Mask& adj_g,
                                 std::optional<ad::Var> temperature = std::nullopt) {
    LayerOutput out;
    ad::Var query_source = hq;
    if (t >= 2) {
        if (!temperature) throw ConfigError("layer " + std::to_string(t) + " needs a temperature");
        CrossPropagation cp = cross_propagate(hq, hg, *temperature, cfg.similarity);
        out.matrix = cp.matrix;
        if (!cfg.no_cross) query_source = cp.cross;
    }
    ad::Var pooled = pool_rows(hq, cfg.pooling);
    std::vector<ad::Var> heads_g, heads_q;
    for (std::size_t k = 0; k < cfg.heads; ++k) {
        const std::string h = model_names::head(t, k);
        ad::Var w = p[h + ".W"];
        ad::Var q = sample_query(p, cfg, pooled, t, k);
        Attention ag = attention_coefficients(hg, q, w, adj_g, cfg.slope);
        Attention aq = attention_coefficients(query_source, t == 1 ? p[h + ".a"] : q, w, adj_q, cfg.slope);
        heads_g.push_back(ad::matmul(ag.alpha, ag.messages));
        heads_q.push_back(ad::matmul(aq.alpha, aq.messages));
        out.alpha_g.push_back(ag.alpha);
        out.alpha_q.push_back(aq.alpha);
    }
    const auto mlp = bind_mlp(p, model_names::mlp(t));
    out.hg = ad::add(hg, ad::mlp_apply(ad::concat(heads_g, 1), mlp, cfg.slope));
    out.hq = ad::add(hq, ad::mlp_apply(ad::concat(heads_q, 1), mlp, cfg.slope));
    return out;
}

struct ForwardResult {
    ad::Var matrix;                  // final |Q| x |G| prediction
    std::vector<ad::Var> matrices;   // predictions from layer 2 .. T and the final one
    std::vector<LayerOutput> layers;
};

inline ForwardResult model_forward(TapeParams& p, const ModelConfig& cfg, const GraphInput& query,
                                   const GraphInput& data) {
    if (query.features.cols() != cfg.input_dim || data.features.cols() != cfg.input_dim)
        throw DataError("input width " + std::to_string(data.features.cols()) + ", model expects " +
                        std::to_string(cfg.input_dim));
    ad::Tape& tape = p.tape();
    ad::Var w_in = p["input.weight"], b_in = p["input.bias"];
    ad::Var hq = ad::add_row(ad::matmul(tape.constant(query.features), w_in), b_in);
    ad::Var hg = ad::add_row(ad::matmul(tape.constant(data.features), w_in), b_in);
    const auto temperature = [&](std::size_t t) { return ad::sigmoid(p[model_names::temperature(cfg, t)]); };

    ForwardResult r;
    for (std::size_t t = 1; t <= cfg.layers; ++t) {
        std::optional<ad::Var> tau;
        if (t >= 2) tau = temperature(t);
        LayerOutput out = layer_forward(p, cfg, t, hq, hg, query.adjacency, data.adjacency, tau);
        if (out.matrix) r.matrices.push_back(*out.matrix);
        hq = out.hq;
        hg = out.hg;
        r.layers.push_back(std::move(out));
    }
    r.matrix = cross_propagate(hq, hg, temperature(cfg.layers + 1), cfg.similarity).matrix;
    r.matrices.push_back(r.matrix);
    return r;
}

// ---------------------------------------------------------------------------
// Losses

/// Neighbors of each matched data node split into those that correspond to
/// query edges (keep) and the rest (delete).
struct NeighborPartition {
    struct Entry {
        NodeId node;
        std::vector<NodeId> keep;
        std::vector<NodeId> remove;
    };
    std::vector<Entry> matched;
    std::size_t query_size = 0;
};

inline NeighborPartition make_neighbor_partition(const LabeledGraph& data, const LabeledGraph& query,
                                                 const Mapping& m) {
    if (auto why = mapping_violation(m, query.num_nodes(), data.num_nodes())) throw DataError(*why);
    NeighborPartition part;
    part.query_size = query.num_nodes();
    for (std::size_t u = 0; u < query.num_nodes(); ++u) {
        NeighborPartition::Entry e{m[u], {}, {}};
        std::vector<char> kept(data.num_nodes(), 0);
        for (NodeId ju : query.neighbors(static_cast<NodeId>(u)))
            if (data.has_edge(m[u], m[static_cast<std::size_t>(ju)])) kept[m[static_cast<std::size_t>(ju)]] = 1;
        for (NodeId j : data.neighbors(m[u])) (kept[j] ? e.keep : e.remove).push_back(j);
        part.matched.push_back(std::move(e));
    }
    return part;
}

/// (1/|Q|) sum_i |sum_j sign_ij M_ij - 1| with sign +1 on matched columns and
/// -1 elsewhere.
inline ad::Var loss_matching(ad::Var predicted, const MatchingMatrix& truth) {
    if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols())
        throw DataError("matching loss: prediction " + predicted.value().shape_string() + " vs ground truth " +
                        std::to_string(truth.rows()) + "x" + std::to_string(truth.cols()));
    Tensor sign(truth.rows(), truth.cols());
    for (std::size_t i = 0; i < truth.rows(); ++i) {
        if (truth.row_count(i) == 0) throw DataError("matching loss: ground-truth row " + std::to_string(i) + " is empty");
        for (std::size_t j = 0; j < truth.cols(); ++j) sign(i, j) = truth.at(i, j) ? 1.0 : -1.0;
    }
    ad::Var v = ad::sum(ad::mul(predicted, predicted.tape().constant(std::move(sign))), 1);
    return ad::scale(ad::sum_all(ad::abs_value(ad::add_scalar(v, -1.0))), 1.0 / static_cast<double>(truth.rows()));
}

namespace model_detail {

/// Matched nodes with at least one neighbor; isolated nodes carry no
/// attention and are left out of the delete loss.
inline std::vector<const NeighborPartition::Entry*> attended(const NeighborPartition& part) {
    std::vector<const NeighborPartition::Entry*> out;
    for (const auto& e : part.matched)
        if (!e.keep.empty() || !e.remove.empty()) out.push_back(&e);
    return out;
}

}  // namespace model_detail

/// (1/|Q|) sum_v |Y_v - 1| over matched nodes, Y_v = kept minus deleted
/// attention mass, combined over heads.
inline ad::Var loss_delete(std::span<const ad::Var> alpha, const NeighborPartition& part,
                           HeadReduction reduce = HeadReduction::mean) {
    if (alpha.empty()) throw ConfigError("delete loss needs at least one attention head");
    ad::Tape& tape = alpha.front().tape();
    const std::size_t n = alpha.front().rows();
    const auto nodes = model_detail::attended(part);
    if (nodes.empty()) return tape.constant(Tensor::scalar(0.0));
    Tensor sign(n, n);
    std::vector<std::size_t> rows;
    for (const auto* e : nodes) {
        const auto v = static_cast<std::size_t>(e->node);
        for (NodeId j : e->keep) sign(v, static_cast<std::size_t>(j)) = 1.0;
        for (NodeId j : e->remove) sign(v, static_cast<std::size_t>(j)) = -1.0;
        rows.push_back(v);
    }
    ad::Var s = tape.constant(std::move(sign));
    std::optional<ad::Var> y;
    for (const ad::Var& a : alpha) {
        ad::Var head = ad::sum(ad::mul(a, s), 1);
        y = y ? ad::add(*y, head) : head;
    }
    if (reduce == HeadReduction::mean) *y = ad::scale(*y, 1.0 / static_cast<double>(alpha.size()));
    ad::Var dev = ad::abs_value(ad::add_scalar(ad::select_rows(*y, std::move(rows)), -1.0));
    return ad::scale(ad::sum_all(dev), 1.0 / static_cast<double>(part.query_size));
}

/// Mean over matched nodes of the head-averaged attention mass on delete
/// neighbors.
inline double delete_mass(std::span<const ad::Var> alpha, const NeighborPartition& part) {
    const auto nodes = model_detail::attended(part);
    if (nodes.empty() || alpha.empty()) return 0.0;
    double total = 0.0;
    for (const auto* e : nodes)
        for (const ad::Var& a : alpha)
            for (NodeId j : e->remove)
                total += a.value()(static_cast<std::size_t>(e->node), static_cast<std::size_t>(j));
    return total / static_cast<double>(nodes.size() * alpha.size());
}

/// L^t = l1 * delete[t] + (1 - l1) * matching[t];
/// total = l2 * sum_{t < T} L^t + (1 - l2) * L^T.
inline ad::Var loss_total(std::span<const ad::Var> delete_losses, std::span<const ad::Var> matching_losses,
                          double lambda1, double lambda2) {
    if (delete_losses.empty() || delete_losses.size() != matching_losses.size())
        throw ConfigError("loss_total needs matching, non-empty loss schedules");
    const std::size_t T = delete_losses.size();
    std::optional<ad::Var> interior;
    ad::Var last;
    for (std::size_t t = 0; t < T; ++t) {
        ad::Var lt = ad::add(ad::scale(delete_losses[t], lambda1), ad::scale(matching_losses[t], 1.0 - lambda1));
        if (t + 1 == T)
            last = lt;
        else
            interior = interior ? ad::add(*interior, lt) : lt;
    }
    ad::Var total = ad::scale(last, 1.0 - lambda2);
    if (interior) total = ad::add(total, ad::scale(*interior, lambda2));
    return total;
}

struct LossBreakdown {
    ad::Var total;
    std::vector<double> delete_losses;    // layer 1 .. T
    std::vector<double> matching_losses;  // matrices 2 .. T+1
    double mean_delete() const { return mean(delete_losses); }
    double mean_matching() const { return mean(matching_losses); }

private:
    static double mean(const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return v.empty() ? 0.0 : s / static_cast<double>(v.size());
    }
};

/// Delete loss of layer t paired with the matching loss of the matrix
/// computed from that layer's output.
inline LossBreakdown compute_losses(const ForwardResult& r, const ModelConfig& cfg, const MatchingMatrix& truth,
                                    const NeighborPartition& part) {
    std::vector<ad::Var> de, lm;
    LossBreakdown out;
    for (std::size_t t = 0; t < r.layers.size(); ++t) {
        de.push_back(loss_delete(r.layers[t].alpha_g, part, cfg.delete_heads));
        lm.push_back(loss_matching(r.matrices[t], truth));
        out.delete_losses.push_back(de.back().scalar());
        out.matching_losses.push_back(lm.back().scalar());
    }
    out.total = loss_total(de, lm, cfg.lambda1, cfg.lambda2);
    return out;
}

/// Row-wise argmax, lowest column on ties. Several rows may pick the same
/// column.
inline std::vector<NodeId> extract_top1(const Tensor& m) {
    std::vector<NodeId> out(m.rows(), -1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < m.cols(); ++j)
            if (m(i, j) > m(i, best)) best = j;
        if (m.cols() > 0) out[i] = static_cast<NodeId>(best);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Trained model bundle

struct Model {
    ModelConfig config;
    FeatureEncoder encoder;
    ParamStore params;

    static Model create(ModelConfig cfg, FeatureEncoder enc) {
        cfg.input_dim = enc.width();
        ParamStore params = init_params(cfg);
        return {cfg, std::move(enc), std::move(params)};
    }

    nlohmann::json meta() const { return {{"model", config}, {"encoder", encoder.to_json()}}; }

    /// Final prediction for one pair, evaluated without gradient bookkeeping.
    Tensor predict(const LabeledGraph& data, const LabeledGraph& query) const {
        return predict(make_graph_input(encoder, query), make_graph_input(encoder, data));
    }

    Tensor predict(const GraphInput& query, const GraphInput& data) const {
        ad::Tape tape;
        TapeParams p(tape, params, false);
        return model_forward(p, config, query, data).matrix.value();
    }
};

inline void save_model(const std::filesystem::path& path, const Model& m, nlohmann::json extra = nlohmann::json::object()) {
    nlohmann::json meta = m.meta();
    for (auto& [k, v] : extra.items()) meta[k] = v;
    save_checkpoint(path, m.params, meta);
}

inline Model model_from_checkpoint(const nlohmann::json& doc, nlohmann::json* meta_out = nullptr) {
    nlohmann::json meta;
    ParamStore params = checkpoint_from_json(doc, &meta);
    if (!meta.contains("model") || !meta.contains("encoder"))
        throw DataError("checkpoint carries no model configuration");
    Model m;
    try {
        m.config = meta.at("model").get<ModelConfig>();
        m.encoder = FeatureEncoder::from_json(meta.at("encoder"));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed model metadata: ") + e.what());
    }
    m.config.validate();
    const ParamStore expected = init_params(m.config);
    for (const auto& e : expected.entries()) {
        if (!params.contains(e.name)) throw DataError("checkpoint lacks parameter " + e.name);
        if (!params.value(e.name).same_shape(e.value)) throw DataError("checkpoint parameter " + e.name + " has wrong shape");
    }
    m.params = std::move(params);
    if (meta_out) *meta_out = std::move(meta);
    return m;
}

inline Model load_model(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open checkpoint " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const std::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return model_from_checkpoint(doc, meta_out);
}

}  // namespace aedmatch
