#pragma once

#include <aedmatch/errors.hpp>
#include <aedmatch/graph.hpp>

#include <filesystem>
#include <type_traits>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace aedmatch {

namespace tud_detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

/// Non-empty lines split on commas, fields trimmed. Accepts "a,b" and "a, b".
inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        rows.push_back(std::move(fields));
    }
    return rows;
}

template <typename T>
T parse_number(const std::string& s, const std::filesystem::path& file, std::size_t line) {
    try {
        std::size_t used = 0;
        T value;
        if constexpr (std::is_same_v<T, double>)
            value = std::stod(s, &used);
        else
            value = static_cast<T>(std::stoll(s, &used));
        if (used != s.size()) throw std::invalid_argument(s);
        return value;
    } catch (const std::exception&) {
        throw DataError(file.filename().string() + ":" + std::to_string(line) + ": cannot parse '" + s + "'");
    }
}

/// Dataset prefix DS from the single "*_A.txt" in the directory.
inline std::string dataset_prefix(const std::filesystem::path& dir) {
    std::string prefix;
    if (!std::filesystem::is_directory(dir)) throw DataError(dir.string() + " is not a directory");
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = "_A.txt";
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0) {
            if (!prefix.empty()) throw DataError("more than one *_A.txt file in " + dir.string());
            prefix = name.substr(0, name.size() - suffix.size());
        }
    }
    if (prefix.empty()) throw DataError("missing mandatory file *_A.txt in " + dir.string());
    return prefix;
}

}  // namespace tud_detail

/// Loads a TUDataset-format directory: DS_A.txt, DS_graph_indicator.txt and
/// optionally DS_node_labels.txt or DS_node_attributes.txt plus
/// DS_edge_labels.txt. Global 1-based node ids become 0-based local ids.
inline std::vector<LabeledGraph> load_tudataset(const std::filesystem::path& dir) {
    using namespace tud_detail;
    const std::string ds = dataset_prefix(dir);
    const auto file = [&](const std::string& part) { return dir / (ds + "_" + part + ".txt"); };

    if (!std::filesystem::exists(file("graph_indicator")))
        throw DataError("missing mandatory file " + file("graph_indicator").string());

    // graph id per global node
    const auto indicator_rows = read_rows(file("graph_indicator"));
    std::vector<long long> graph_of;
    graph_of.reserve(indicator_rows.size());
    for (std::size_t i = 0; i < indicator_rows.size(); ++i)
        graph_of.push_back(parse_number<long long>(indicator_rows[i].at(0), file("graph_indicator"), i + 1));

    std::map<long long, std::size_t> graph_index;  // graph id -> position (ascending ids)
    for (long long gid : graph_of) graph_index.emplace(gid, 0);
    {
        std::size_t k = 0;
        for (auto& [gid, pos] : graph_index) pos = k++;
    }
    const std::size_t num_graphs = graph_index.size();
    std::vector<std::size_t> node_count(num_graphs, 0);
    std::vector<NodeId> local_id(graph_of.size());
    std::vector<std::size_t> owner(graph_of.size());
    for (std::size_t v = 0; v < graph_of.size(); ++v) {
        owner[v] = graph_index[graph_of[v]];
        local_id[v] = static_cast<NodeId>(node_count[owner[v]]++);
    }

    const bool has_labels = std::filesystem::exists(file("node_labels"));
    const bool has_attrs = std::filesystem::exists(file("node_attributes"));
    if (has_labels && has_attrs)
        throw DataError("both node_labels and node_attributes present; expected at most one");

    std::vector<CategoricalFeatures> cat(num_graphs);
    std::vector<NumericalFeatures> num(num_graphs);
    if (has_labels) {
        const auto rows = read_rows(file("node_labels"));
        if (rows.size() != graph_of.size())
            throw DataError("node_labels has " + std::to_string(rows.size()) + " rows, expected " +
                            std::to_string(graph_of.size()));
        for (std::size_t v = 0; v < rows.size(); ++v)
            cat[owner[v]].labels.push_back(parse_number<int>(rows[v].at(0), file("node_labels"), v + 1));
    } else if (has_attrs) {
        const auto rows = read_rows(file("node_attributes"));
        if (rows.size() != graph_of.size())
            throw DataError("node_attributes has " + std::to_string(rows.size()) + " rows, expected " +
                            std::to_string(graph_of.size()));
        const std::size_t dim = rows.empty() ? 0 : rows.front().size();
        for (std::size_t v = 0; v < rows.size(); ++v) {
            if (rows[v].size() != dim)
                throw DataError("node_attributes:" + std::to_string(v + 1) + ": ragged row with " +
                                std::to_string(rows[v].size()) + " fields, expected " + std::to_string(dim));
            auto& block = num[owner[v]];
            block.dim = dim;
            for (const auto& field : rows[v])
                block.values.push_back(parse_number<double>(field, file("node_attributes"), v + 1));
        }
    }

    const auto edge_rows = read_rows(file("A"));
    std::vector<int> edge_label_rows;
    const bool has_edge_labels = std::filesystem::exists(file("edge_labels"));
    if (has_edge_labels) {
        const auto rows = read_rows(file("edge_labels"));
        if (rows.size() != edge_rows.size())
            throw DataError("edge_labels has " + std::to_string(rows.size()) + " rows, A has " +
                            std::to_string(edge_rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            edge_label_rows.push_back(parse_number<int>(rows[i].at(0), file("edge_labels"), i + 1));
    }

    std::vector<std::vector<Edge>> edges(num_graphs);
    std::vector<std::vector<int>> edge_labels(num_graphs);
    std::vector<std::set<Edge>> seen(num_graphs);
    for (std::size_t i = 0; i < edge_rows.size(); ++i) {
        if (edge_rows[i].size() != 2)
            throw DataError("A:" + std::to_string(i + 1) + ": expected two node ids");
        const long long a = parse_number<long long>(edge_rows[i][0], file("A"), i + 1);
        const long long b = parse_number<long long>(edge_rows[i][1], file("A"), i + 1);
        const auto n = static_cast<long long>(graph_of.size());
        if (a < 1 || b < 1 || a > n || b > n)
            throw DataError("A:" + std::to_string(i + 1) + ": node id outside 1.." + std::to_string(n));
        const std::size_t ga = owner[a - 1], gb = owner[b - 1];
        if (ga != gb)
            throw DataError("A:" + std::to_string(i + 1) + ": edge joins nodes of different graphs");
        if (a == b) continue;  // self-loops are dropped
        Edge e{local_id[a - 1], local_id[b - 1]};
        if (e.u > e.v) std::swap(e.u, e.v);
        if (!seen[ga].insert(e).second) continue;
        edges[ga].push_back(e);
        if (has_edge_labels) edge_labels[ga].push_back(edge_label_rows[i]);
    }

    std::vector<LabeledGraph> graphs;
    graphs.reserve(num_graphs);
    for (std::size_t g = 0; g < num_graphs; ++g) {
        NodeFeatures feats = NoFeatures{};
        if (has_labels)
            feats = std::move(cat[g]);
        else if (has_attrs)
            feats = std::move(num[g]);
        std::optional<std::vector<int>> el;
        if (has_edge_labels) el = std::move(edge_labels[g]);
        graphs.emplace_back(node_count[g], std::move(edges[g]), std::move(feats), std::move(el));
    }
    return graphs;
}

}  // namespace aedmatch
