#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sbmcov/spectral.hpp"

namespace sbmcov {

/// Nullable binary covariate column.
struct CovariateColumn {
    std::string name;
    std::vector<std::optional<int>> values;
};

/// Compressed-row adjacency pattern of an undirected graph.
struct Adjacency {
    std::vector<std::int64_t> offsets;
    std::vector<std::int32_t> neighbors;

    int n() const { return static_cast<int>(offsets.size()) - 1; }
    AdjacencyOperator op(double shift = 0.0) const { return AdjacencyOperator(offsets, neighbors, shift); }
};

/// Undirected simple graph with a node covariate table.
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // u < v, sorted, unique
    std::vector<std::int64_t> node_ids;      // original identifiers
    std::vector<CovariateColumn> covariates;

    const CovariateColumn& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    Adjacency adjacency() const;
    double mean_degree() const { return n ? 2.0 * static_cast<double>(edges.size()) / n : 0.0; }
    /// Builds a graph from arbitrary pairs, dropping self-loops and duplicates.
    static Graph from_pairs(int n, const std::vector<std::pair<int, int>>& pairs);
};

struct EdgeListStats {
    long lines = 0;
    long duplicates = 0;
    long self_loops = 0;
};

/// Two integer ids per line, `#` comments; node indices follow ascending ids.
Graph read_edge_list(std::istream& in, EdgeListStats* stats = nullptr);
Graph read_edge_list(const std::string& path, EdgeListStats* stats = nullptr);
void write_edge_list(const Graph& g, std::ostream& out);
void write_edge_list(const Graph& g, const std::string& path);

/// Maps one source column to a binary column: 1 when the raw value is in
/// `ones`, missing when empty, "NA", or in `missing`, else 0.
struct BinarizeRule {
    std::string output;
    std::string source;
    std::vector<std::string> ones;
    std::vector<std::string> missing;

    /// Parses "OUT=COL==V1|V2[;missing=M1|M2]"; COL may be the keyword `value`
    /// meaning COL = OUT.
    static BinarizeRule parse(const std::string& text);
    std::optional<int> apply(const std::string& raw) const;
};

/// Raw delimited table (comma or tab, header row) keyed by node identifier.
struct CovariateTable {
    std::vector<std::string> header;
    std::vector<std::int64_t> ids;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;
};

CovariateTable read_covariate_table(std::istream& in);
CovariateTable read_covariate_table(const std::string& path);
/// Applies the rules and attaches the resulting columns to g by node id;
/// nodes absent from the table get missing cells.
void attach_covariates(Graph& g, const CovariateTable& table, const std::vector<BinarizeRule>& rules);
/// Attaches columns already holding 0/1 values (empty or "NA" = missing).
void attach_binary_columns(Graph& g, const CovariateTable& table, const std::vector<std::string>& columns);
void write_covariates(const Graph& g, std::ostream& out);
void write_covariates(const Graph& g, const std::string& path);

/// Subgraph induced by `keep` (sorted node indices), preserving order.
Graph induced_subgraph(const Graph& g, const std::vector<int>& keep);
/// Connected-component label per node.
std::vector<int> connected_components(const Graph& g);
/// Drops nodes missing any required column, then keeps the largest connected
/// component (ties to the component containing the lowest original id).
Graph drop_missing_and_lcc(const Graph& g, const std::vector<std::string>& required);

/// A + (gamma * mean_degree / n) J as an implicit operator over `adj`.
AdjacencyOperator regularize_degrees(const Adjacency& adj, double gamma);

}  // namespace sbmcov
