#include "sbmcov/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <queue>
#include <sstream>
#include <unordered_map>

#include "sbmcov/error.hpp"

namespace sbmcov {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

bool parse_int(const std::string& token, std::int64_t& value) {
    const char* first = token.data();
    const char* last = first + token.size();
    const auto res = std::from_chars(first, last, value);
    return res.ec == std::errc() && res.ptr == last;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::InvalidInput, "cannot open '" + path + "'");
    return in;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    return out;
}

}  // namespace

const CovariateColumn& Graph::column(const std::string& name) const {
    for (const auto& c : covariates) {
        if (c.name == name) return c;
    }
    fail(ErrorKind::ConfigError, "unknown covariate column '" + name + "'");
}

bool Graph::has_column(const std::string& name) const {
    return std::any_of(covariates.begin(), covariates.end(),
                       [&](const CovariateColumn& c) { return c.name == name; });
}

Adjacency Graph::adjacency() const {
    Adjacency adj;
    std::vector<std::int64_t> degree(n + 1, 0);
    for (const auto& [u, v] : edges) {
        ++degree[u + 1];
        ++degree[v + 1];
    }
    std::partial_sum(degree.begin(), degree.end(), degree.begin());
    adj.offsets = degree;
    adj.neighbors.resize(adj.offsets.back());
    std::vector<std::int64_t> cursor(adj.offsets.begin(), adj.offsets.end() - 1);
    for (const auto& [u, v] : edges) {
        adj.neighbors[cursor[u]++] = v;
        adj.neighbors[cursor[v]++] = u;
    }
    for (int i = 0; i < n; ++i) {
        std::sort(adj.neighbors.begin() + adj.offsets[i], adj.neighbors.begin() + adj.offsets[i + 1]);
    }
    return adj;
}

Graph Graph::from_pairs(int n, const std::vector<std::pair<int, int>>& pairs) {
    Graph g;
    g.n = n;
    g.node_ids.resize(n);
    std::iota(g.node_ids.begin(), g.node_ids.end(), 0);
    g.edges.reserve(pairs.size());
    for (auto [u, v] : pairs) {
        if (u < 0 || v < 0 || u >= n || v >= n) fail(ErrorKind::InvalidInput, "edge endpoint out of range");
        if (u == v) continue;
        if (u > v) std::swap(u, v);
        g.edges.emplace_back(u, v);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

Graph read_edge_list(std::istream& in, EdgeListStats* stats) {
    EdgeListStats local;
    std::unordered_map<std::int64_t, int> index;
    std::vector<std::int64_t> ids;
    std::vector<std::pair<int, int>> pairs;
    auto intern = [&](std::int64_t id) {
        auto [it, inserted] = index.emplace(id, static_cast<int>(ids.size()));
        if (inserted) ids.push_back(id);
        return it->second;
    };
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream is(line);
        std::vector<std::string> tokens;
        for (std::string t; is >> t;) tokens.push_back(t);
        if (tokens.empty()) continue;
        std::int64_t a = 0, b = 0;
        if (tokens.size() != 2 || !parse_int(tokens[0], a) || !parse_int(tokens[1], b)) {
            fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected two integer node ids");
        }
        ++local.lines;
        const int u = intern(a);
        const int v = intern(b);
        if (u == v) {
            ++local.self_loops;
            continue;
        }
        pairs.emplace_back(std::min(u, v), std::max(u, v));
    }
    // relabel so that indices follow ascending original ids
    std::vector<int> order(ids.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return ids[a] < ids[b]; });
    std::vector<int> rank(ids.size());
    for (size_t r = 0; r < order.size(); ++r) rank[order[r]] = static_cast<int>(r);
    for (auto& [u, v] : pairs) {
        const int a = rank[u], b = rank[v];
        u = std::min(a, b);
        v = std::max(a, b);
    }
    std::sort(ids.begin(), ids.end());
    std::sort(pairs.begin(), pairs.end());
    const auto unique_end = std::unique(pairs.begin(), pairs.end());
    local.duplicates = std::distance(unique_end, pairs.end());
    pairs.erase(unique_end, pairs.end());
    Graph g;
    g.n = static_cast<int>(ids.size());
    g.node_ids = std::move(ids);
    g.edges = std::move(pairs);
    if (stats) *stats = local;
    return g;
}

Graph read_edge_list(const std::string& path, EdgeListStats* stats) {
    auto in = open_in(path);
    return read_edge_list(in, stats);
}

void write_edge_list(const Graph& g, std::ostream& out) {
    for (const auto& [u, v] : g.edges) out << g.node_ids[u] << ' ' << g.node_ids[v] << '\n';
}

void write_edge_list(const Graph& g, const std::string& path) {
    auto out = open_out(path);
    write_edge_list(g, out);
}

BinarizeRule BinarizeRule::parse(const std::string& text) {
    BinarizeRule rule;
    std::string body = text;
    const auto semi = body.find(';');
    if (semi != std::string::npos) {
        const std::string opt = trim(body.substr(semi + 1));
        body.resize(semi);
        if (opt.rfind("missing=", 0) != 0) fail(ErrorKind::ConfigError, "bad binarize option '" + opt + "'");
        rule.missing = split(opt.substr(8), '|');
    }
    const auto eqeq = body.find("==");
    const auto eq = body.find('=');
    if (eqeq == std::string::npos || eq == std::string::npos || eq >= eqeq) {
        fail(ErrorKind::ConfigError, "binarize rule must look like OUT=COL==VALUE, got '" + text + "'");
    }
    rule.output = trim(body.substr(0, eq));
    rule.source = trim(body.substr(eq + 1, eqeq - eq - 1));
    if (rule.source == "value") rule.source = rule.output;
    rule.ones = split(body.substr(eqeq + 2), '|');
    for (auto& s : rule.ones) s = trim(s);
    for (auto& s : rule.missing) s = trim(s);
    if (rule.output.empty() || rule.source.empty() || rule.ones.empty()) {
        fail(ErrorKind::ConfigError, "incomplete binarize rule '" + text + "'");
    }
    return rule;
}

std::optional<int> BinarizeRule::apply(const std::string& raw) const {
    const std::string v = trim(raw);
    if (v.empty() || v == "NA") return std::nullopt;
    if (std::find(missing.begin(), missing.end(), v) != missing.end()) return std::nullopt;
    return std::find(ones.begin(), ones.end(), v) != ones.end() ? 1 : 0;
}

int CovariateTable::column_index(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    fail(ErrorKind::ConfigError, "unknown covariate column '" + name + "'");
}

CovariateTable read_covariate_table(std::istream& in) {
    CovariateTable table;
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::ParseError, "covariate file is empty");
    const char sep = line.find('\t') != std::string::npos ? '\t' : ',';
    for (auto& h : split(line, sep)) table.header.push_back(trim(h));
    int id_col = 0;
    for (size_t i = 0; i < table.header.size(); ++i) {
        if (table.header[i] == "id") id_col = static_cast<int>(i);
    }
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto cells = split(line, sep);
        if (cells.size() != table.header.size()) {
            fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": expected " +
                                            std::to_string(table.header.size()) + " fields");
        }
        std::int64_t id = 0;
        if (!parse_int(trim(cells[id_col]), id)) {
            fail(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": node id is not an integer");
        }
        table.ids.push_back(id);
        table.rows.push_back(std::move(cells));
    }
    return table;
}

CovariateTable read_covariate_table(const std::string& path) {
    auto in = open_in(path);
    return read_covariate_table(in);
}

void attach_covariates(Graph& g, const CovariateTable& table, const std::vector<BinarizeRule>& rules) {
    std::unordered_map<std::int64_t, size_t> row_of;
    for (size_t r = 0; r < table.ids.size(); ++r) row_of.emplace(table.ids[r], r);
    for (const auto& rule : rules) {
        const int col = table.column_index(rule.source);
        CovariateColumn out{rule.output, std::vector<std::optional<int>>(g.n)};
        for (int i = 0; i < g.n; ++i) {
            const auto it = row_of.find(g.node_ids[i]);
            if (it != row_of.end()) out.values[i] = rule.apply(table.rows[it->second][col]);
        }
        std::erase_if(g.covariates, [&](const CovariateColumn& c) { return c.name == rule.output; });
        g.covariates.push_back(std::move(out));
    }
}

void attach_binary_columns(Graph& g, const CovariateTable& table, const std::vector<std::string>& columns) {
    std::vector<BinarizeRule> rules;
    for (const auto& name : columns) {
        table.column_index(name);
        BinarizeRule rule{name, name, {"1"}, {}};
        rules.push_back(rule);
    }
    attach_covariates(g, table, rules);
    for (const auto& name : columns) {
        const int col = table.column_index(name);
        for (const auto& row : table.rows) {
            const std::string v = trim(row[col]);
            if (!v.empty() && v != "NA" && v != "0" && v != "1") {
                fail(ErrorKind::ParseError, "column '" + name + "' holds non-binary value '" + v + "'");
            }
        }
    }
}

void write_covariates(const Graph& g, std::ostream& out) {
    out << "id";
    for (const auto& c : g.covariates) out << '\t' << c.name;
    out << '\n';
    for (int i = 0; i < g.n; ++i) {
        out << g.node_ids[i];
        for (const auto& c : g.covariates) {
            out << '\t';
            if (c.values[i]) out << *c.values[i];
            else out << "NA";
        }
        out << '\n';
    }
}

void write_covariates(const Graph& g, const std::string& path) {
    auto out = open_out(path);
    write_covariates(g, out);
}

Graph induced_subgraph(const Graph& g, const std::vector<int>& keep) {
    std::vector<int> remap(g.n, -1);
    for (size_t i = 0; i < keep.size(); ++i) remap[keep[i]] = static_cast<int>(i);
    Graph sub;
    sub.n = static_cast<int>(keep.size());
    for (int old : keep) sub.node_ids.push_back(g.node_ids[old]);
    for (const auto& [u, v] : g.edges) {
        if (remap[u] >= 0 && remap[v] >= 0) sub.edges.emplace_back(remap[u], remap[v]);
    }
    std::sort(sub.edges.begin(), sub.edges.end());
    for (const auto& c : g.covariates) {
        CovariateColumn col{c.name, {}};
        col.values.reserve(keep.size());
        for (int old : keep) col.values.push_back(c.values[old]);
        sub.covariates.push_back(std::move(col));
    }
    return sub;
}

std::vector<int> connected_components(const Graph& g) {
    const Adjacency adj = g.adjacency();
    std::vector<int> label(g.n, -1);
    int next = 0;
    for (int s = 0; s < g.n; ++s) {
        if (label[s] >= 0) continue;
        std::queue<int> q;
        q.push(s);
        label[s] = next;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (auto p = adj.offsets[u]; p < adj.offsets[u + 1]; ++p) {
                const int v = adj.neighbors[p];
                if (label[v] < 0) {
                    label[v] = next;
                    q.push(v);
                }
            }
        }
        ++next;
    }
    return label;
}

Graph drop_missing_and_lcc(const Graph& g, const std::vector<std::string>& required) {
    std::vector<int> observed;
    for (int i = 0; i < g.n; ++i) {
        bool ok = true;
        for (const auto& name : required) ok = ok && g.column(name).values[i].has_value();
        if (ok) observed.push_back(i);
    }
    if (observed.empty()) fail(ErrorKind::EmptyGraph, "no node has all required covariates");
    const Graph filtered = induced_subgraph(g, observed);
    const auto label = connected_components(filtered);
    const int ncomp = *std::max_element(label.begin(), label.end()) + 1;
    std::vector<long> size(ncomp, 0);
    std::vector<std::int64_t> min_id(ncomp, std::numeric_limits<std::int64_t>::max());
    for (int i = 0; i < filtered.n; ++i) {
        ++size[label[i]];
        min_id[label[i]] = std::min(min_id[label[i]], filtered.node_ids[i]);
    }
    int best = 0;
    for (int c = 1; c < ncomp; ++c) {
        if (size[c] > size[best] || (size[c] == size[best] && min_id[c] < min_id[best])) best = c;
    }
    std::vector<int> keep;
    for (int i = 0; i < filtered.n; ++i) {
        if (label[i] == best) keep.push_back(i);
    }
    return induced_subgraph(filtered, keep);
}

AdjacencyOperator regularize_degrees(const Adjacency& adj, double gamma) {
    if (gamma < 0) fail(ErrorKind::InvalidInput, "gamma must be nonnegative");
    const int n = adj.n();
    if (n == 0) return adj.op(0.0);
    const double mean_degree = static_cast<double>(adj.neighbors.size()) / n;
    return adj.op(gamma * mean_degree / n);
}

}  // namespace sbmcov
