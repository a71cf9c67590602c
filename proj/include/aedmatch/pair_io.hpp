#pragma once

// Pair files: one JSON object per line.
//
//   {"data":  {"nodes": 4, "edges": [[0,1],[1,2]], "features": {...}, "edge_labels": [..]},
//    "query": {...same shape...},
//    "mappings": [[0,1,2], [2,1,0]],
//    "truncated": false}
//
// "features" is {"kind":"none"}, {"kind":"categorical","labels":[...]} or
// {"kind":"numerical","dim":d,"values":[... row-major ...]}. "edge_labels"
// is omitted for unlabeled edges and otherwise parallel to "edges". The
// matching matrix is never stored; it is rebuilt from "mappings" on read.

#include <aedmatch/errors.hpp>
#include <aedmatch/graph.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace aedmatch {

inline nlohmann::json graph_to_json(const LabeledGraph& g) {
    nlohmann::json j;
    j["nodes"] = g.num_nodes();
    auto edges = nlohmann::json::array();
    for (const Edge& e : g.edges()) edges.push_back({e.u, e.v});
    j["edges"] = std::move(edges);
    if (const auto* c = std::get_if<CategoricalFeatures>(&g.features()))
        j["features"] = {{"kind", "categorical"}, {"labels", c->labels}};
    else if (const auto* n = std::get_if<NumericalFeatures>(&g.features()))
        j["features"] = {{"kind", "numerical"}, {"dim", n->dim}, {"values", n->values}};
    else
        j["features"] = {{"kind", "none"}};
    if (g.has_edge_labels()) j["edge_labels"] = *g.edge_labels();
    return j;
}

inline LabeledGraph graph_from_json(const nlohmann::json& j) {
    const auto n = j.at("nodes").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw DataError("edge entries must be [u, v]");
        edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>()});
    }
    NodeFeatures feats = NoFeatures{};
    const auto& f = j.at("features");
    const auto kind = f.at("kind").get<std::string>();
    if (kind == "categorical")
        feats = CategoricalFeatures{f.at("labels").get<std::vector<int>>()};
    else if (kind == "numerical")
        feats = NumericalFeatures{f.at("dim").get<std::size_t>(), f.at("values").get<std::vector<double>>()};
    else if (kind != "none")
        throw DataError("unknown feature kind '" + kind + "'");
    std::optional<std::vector<int>> labels;
    if (j.contains("edge_labels")) labels = j.at("edge_labels").get<std::vector<int>>();
    return LabeledGraph(n, std::move(edges), std::move(feats), std::move(labels));
}

inline nlohmann::json pair_to_json(const MatchPair& p) {
    nlohmann::json j;
    j["data"] = graph_to_json(p.data_graph());
    j["query"] = graph_to_json(p.query_graph());
    auto maps = nlohmann::json::array();
    for (const Mapping& m : p.mappings()) maps.push_back(m.assignment);
    j["mappings"] = std::move(maps);
    j["truncated"] = p.truncated();
    return j;
}

inline MatchPair pair_from_json(const nlohmann::json& j) {
    std::vector<Mapping> mappings;
    for (const auto& m : j.at("mappings")) mappings.push_back(Mapping{m.get<std::vector<NodeId>>()});
    return MatchPair(graph_from_json(j.at("data")), graph_from_json(j.at("query")), std::move(mappings),
                     j.value("truncated", false));
}

inline void write_pairs(std::ostream& out, const std::vector<MatchPair>& pairs) {
    for (const MatchPair& p : pairs) out << pair_to_json(p).dump() << '\n';
}

inline void write_pairs(const std::filesystem::path& path, const std::vector<MatchPair>& pairs) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_pairs(out, pairs);
    if (!out) throw DataError("write failed for " + path.string());
}

/// Reads a pair stream. Any parse failure or invariant violation is reported
/// as a DataError naming the 1-based line.
inline std::vector<MatchPair> read_pairs(std::istream& in, const std::string& source = "<stream>") {
    std::vector<MatchPair> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            pairs.push_back(pair_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return pairs;
}

inline std::vector<MatchPair> read_pairs(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_pairs(in, path.string());
}

}  // namespace aedmatch
