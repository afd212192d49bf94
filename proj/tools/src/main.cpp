#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "sbmcov/error.hpp"
#include "sbmcov/estimator.hpp"
#include "sbmcov/graph.hpp"
#include "sbmcov/random.hpp"
#include "sbmcov/simulate.hpp"
#include "sbmcov_app/config.hpp"
#include "sbmcov_app/report.hpp"

namespace {

using namespace sbmcov;

/// Exit codes: 0 success, 2 degenerate fit, 1 anything else.
int exit_code(ErrorKind kind) { return kind == ErrorKind::DegenerateFit ? 2 : 1; }

struct GraphArgs {
    std::string edges;
    std::string covariates;
    std::vector<std::string> columns;
    std::vector<std::string> binarize;
    bool lcc = false;
    std::optional<double> regularize;
};

void add_graph_flags(CLI::App* cmd, GraphArgs& g) {
    cmd->add_option("--edges", g.edges, "Edge list: two node ids per line, # comments")->required();
    cmd->add_option("--covariates", g.covariates, "Node table (comma or tab separated, header row)");
    cmd->add_option("--covariate", g.columns, "Binary covariate column to use (repeatable)");
    cmd->add_option("--binarize", g.binarize, "Rule OUT=COL==V1|V2[;missing=M1|M2] (repeatable)");
    cmd->add_flag("--lcc", g.lcc, "Drop nodes missing a used covariate, then keep the largest component");
    cmd->add_option("--regularize", g.regularize, "Add gamma * mean_degree / n to every entry")
        ->check(CLI::NonNegativeNumber);
}

class Stages {
public:
    explicit Stages(bool verbose) : verbose_(verbose) {}
    void begin(const std::string& name) {
        name_ = name;
        start_ = std::chrono::steady_clock::now();
    }
    void end() {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::cerr << "stage " << name_ << ": " << s << " s\n";
    }
    const std::string& current() const { return name_; }
    bool verbose() const { return verbose_; }

private:
    bool verbose_;
    std::string name_ = "setup";
    std::chrono::steady_clock::time_point start_;
};

Graph load_graph(const GraphArgs& a, const std::vector<std::string>& required, Stages& st) {
    st.begin("load");
    EdgeListStats stats;
    Graph g = read_edge_list(a.edges, &stats);
    if (stats.duplicates || stats.self_loops) {
        std::cerr << "warning: dropped " << stats.duplicates << " duplicate edges and " << stats.self_loops
                  << " self-loops\n";
    }
    if (!a.covariates.empty()) {
        const CovariateTable table = read_covariate_table(a.covariates);
        std::vector<BinarizeRule> rules;
        for (const auto& text : a.binarize) rules.push_back(BinarizeRule::parse(text));
        std::vector<std::string> plain;
        for (const auto& c : a.columns) {
            bool from_rule = false;
            for (const auto& r : rules) from_rule = from_rule || r.output == c;
            if (!from_rule) plain.push_back(c);
        }
        if (!rules.empty()) attach_covariates(g, table, rules);
        if (!plain.empty()) attach_binary_columns(g, table, plain);
    } else if (!a.columns.empty() || !a.binarize.empty()) {
        fail(ErrorKind::ConfigError, "--covariate and --binarize need --covariates");
    }
    st.end();
    if (a.lcc) {
        st.begin("preprocess");
        const int before = g.n;
        g = drop_missing_and_lcc(g, required);
        std::cerr << "kept " << g.n << " of " << before << " nodes\n";
        st.end();
    }
    if (g.n == 0) fail(ErrorKind::EmptyGraph, "graph has no nodes");
    return g;
}

template <class F>
int guarded(Stages& st, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        std::cerr << "error in stage " << st.current() << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error in stage " << st.current() << ": " << e.what() << '\n';
        return 1;
    }
}

std::ostream& output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) fail(ErrorKind::InvalidInput, "cannot write '" + path + "'");
    return file;
}

/// ARI of the fitted expanded blocks and latent groups against a truth table.
nlohmann::ordered_json truth_ari(const FitResult& r, const Graph& g, const CovariateTable& truth) {
    const int tau_col = truth.column_index("tau");
    const int block_col = truth.column_index("block");
    std::unordered_map<std::int64_t, size_t> row_of;
    for (size_t i = 0; i < truth.ids.size(); ++i) row_of.emplace(truth.ids[i], i);
    std::vector<int> tau(g.n), block(g.n), tau_hat(g.n);
    for (int i = 0; i < g.n; ++i) {
        const auto it = row_of.find(g.node_ids[i]);
        if (it == row_of.end()) fail(ErrorKind::InvalidInput, "node " + std::to_string(g.node_ids[i]) + " has no truth row");
        tau[i] = std::stoi(truth.rows[it->second][tau_col]);
        block[i] = std::stoi(truth.rows[it->second][block_col]);
        tau_hat[i] = r.block.psi[r.block.xi[i]];
    }
    nlohmann::ordered_json out;
    out["blocks"] = adjusted_rand_index(r.block.xi, block);
    out["latent"] = adjusted_rand_index(tau_hat, tau);
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral estimation of homophily in stochastic blockmodels with covariates"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Extra diagnostics on stderr");

    // fit
    GraphArgs fit_graph;
    int fit_k = 0;
    std::string link_name = "identity", estimator_name = "both", cluster_name = "gmm", out_path;
    std::optional<int> fit_d, latent_d, subgraph_d;
    int max_d = 0, bootstrap = 0;
    bool differential = false, sparse = false, no_se = false;
    std::string dim_rule = "elbow", truth_path;
    std::optional<double> rho;
    std::uint64_t seed = 1;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate homophily parameters from a network");
    add_graph_flags(fit_cmd, fit_graph);
    fit_cmd->add_option("--k", fit_k, "Number of latent blocks")->required()->check(CLI::PositiveNumber);
    fit_cmd->add_option("--link", link_name, "identity or logit");
    fit_cmd->add_option("--estimator", estimator_name, "both, simple, or weighted");
    fit_cmd->add_option("--cluster", cluster_name, "gmm or kmeans");
    fit_cmd->add_option("--d", fit_d, "Embedding dimension (skips selection)")->check(CLI::PositiveNumber);
    fit_cmd->add_option("--max-d", max_d, "Largest dimension considered by selection");
    fit_cmd->add_option("--dim-rule", dim_rule, "Dimension when --d is absent: elbow, elbow+1, or ktilde");
    fit_cmd->add_option("--latent-d", latent_d, "Dimension of the recovered latent positions");
    fit_cmd->add_option("--subgraph-d", subgraph_d, "Subgraph embedding dimension (differential)");
    fit_cmd->add_flag("--differential", differential, "Separate homophily for Z=0 and Z=1 pairs");
    fit_cmd->add_flag("--sparse", sparse, "Sparse-regime standard errors");
    fit_cmd->add_option("--rho", rho, "Known sparsity factor")->check(CLI::Range(0.0, 1.0));
    fit_cmd->add_flag("--no-se", no_se, "Skip plug-in standard errors");
    fit_cmd->add_option("--bootstrap", bootstrap, "Parametric bootstrap replicates (0 = off)");
    fit_cmd->add_option("--seed", seed, "Random seed");
    fit_cmd->add_option("--truth", truth_path, "Ground truth TSV (id, tau, block) for ARI in the report");
    fit_cmd->add_option("-o,--out", out_path, "Report path (JSON, default stdout)");

    // simulate
    std::string spec_path, prefix;
    int sim_n = 0;
    auto* sim_cmd = app.add_subcommand("simulate", "Sample a network from a model config");
    sim_cmd->add_option("--spec", spec_path, "Model config file")->required();
    sim_cmd->add_option("--n", sim_n, "Number of nodes")->required()->check(CLI::PositiveNumber);
    sim_cmd->add_option("--seed", seed, "Random seed");
    sim_cmd->add_option("--prefix", prefix, "Writes PREFIX.edges, PREFIX.covariates.tsv, PREFIX.truth.tsv")
        ->required();

    // montecarlo
    std::string design_path, runs_path;
    int jobs = 0;
    std::optional<int> replicates;
    std::vector<int> n_override;
    auto* mc_cmd = app.add_subcommand("montecarlo", "Run a Monte Carlo design");
    mc_cmd->add_option("--design", design_path, "Design config file")->required();
    mc_cmd->add_option("--jobs", jobs, "Worker threads (default from design)");
    mc_cmd->add_option("--replicates", replicates, "Override the replicate count");
    mc_cmd->add_option("--n", n_override, "Override the network sizes");
    mc_cmd->add_option("-o,--out", out_path, "Summary TSV path (default stdout)");
    mc_cmd->add_option("--runs", runs_path, "Per-replicate TSV path");

    // embed
    GraphArgs embed_graph;
    std::optional<int> embed_k;
    auto* embed_cmd = app.add_subcommand("embed", "Adjacency spectral embedding");
    add_graph_flags(embed_cmd, embed_graph);
    embed_cmd->add_option("--d", fit_d, "Embedding dimension (skips selection)")->check(CLI::PositiveNumber);
    embed_cmd->add_option("--max-d", max_d, "Largest dimension considered by selection");
    embed_cmd->add_option("--k", embed_k, "Expanded block count used for the default --max-d");
    embed_cmd->add_option("--seed", seed, "Random seed");
    embed_cmd->add_option("-o,--out", out_path, "Embedding TSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
        std::cerr << sub->help();
        return 1;
    }

    Stages st(verbose);
    if (*fit_cmd) {
        return guarded(st, [&] {
            st.begin("setup");
            FitOptions opts;
            opts.K = fit_k;
            opts.covariates = fit_graph.columns;
            opts.link = Link{parse_link(link_name)};
            opts.estimator = parse_estimator(estimator_name);
            if (cluster_name == "gmm") {
                opts.cluster = ClusterMethod::Gmm;
            } else if (cluster_name == "kmeans") {
                opts.cluster = ClusterMethod::KMeans;
            } else {
                fail(ErrorKind::ConfigError, "--cluster must be gmm or kmeans");
            }
            opts.d = fit_d;
            opts.max_d = max_d;
            opts.dim_rule = parse_dimension_rule(dim_rule);
            opts.latent_dim = latent_d;
            opts.subgraph_d = subgraph_d;
            opts.regularize = fit_graph.regularize;
            opts.regime = sparse ? Regime::Sparse : Regime::Dense;
            opts.rho = rho;
            opts.compute_se = !no_se;
            opts.gmm.seed = derive_seed(seed, 1);
            opts.kmeans.seed = derive_seed(seed, 2);
            opts.eigen.seed = derive_seed(seed, 3);
            if (differential && opts.covariates.size() != 1) {
                fail(ErrorKind::ConfigError, "--differential needs exactly one --covariate");
            }
            const Graph g = load_graph(fit_graph, opts.covariates, st);
            st.begin("fit");
            const FitResult r = differential ? fit_differential_homophily(g, opts) : fit(g, opts);
            st.end();
            for (const auto& [stage, secs] : r.timings) std::cerr << "  " << stage << ": " << secs << " s\n";
            std::optional<std::vector<double>> boot;
            if (bootstrap > 0) {
                if (differential) fail(ErrorKind::ConfigError, "--bootstrap is not available with --differential");
                st.begin("bootstrap");
                std::vector<std::vector<int>> z;
                for (const auto& name : opts.covariates) {
                    std::vector<int> v;
                    for (const auto& x : g.column(name).values) v.push_back(x.value_or(0));
                    z.push_back(std::move(v));
                }
                boot = bootstrap_se(r, z, opts, bootstrap, derive_seed(seed, 4));
                st.end();
            }
            auto report = app::fit_report(r, opts, boot);
            if (!truth_path.empty()) {
                st.begin("truth");
                report["fit"]["ari"] = truth_ari(r, g, read_covariate_table(truth_path));
                st.end();
            }
            st.begin("write");
            std::ofstream file;
            output(out_path, file) << report.dump(2) << '\n';
            st.end();
            return 0;
        });
    }
    if (*sim_cmd) {
        return guarded(st, [&] {
            st.begin("setup");
            const SbmSpec spec = app::read_spec(spec_path);
            st.begin("sample");
            const SampledGraph s = sample_graph(spec, sim_n, seed);
            st.end();
            st.begin("write");
            write_edge_list(s.graph, prefix + ".edges");
            write_covariates(s.graph, prefix + ".covariates.tsv");
            std::ofstream truth(prefix + ".truth.tsv");
            if (!truth) fail(ErrorKind::InvalidInput, "cannot write '" + prefix + ".truth.tsv'");
            truth << "id\ttau\tblock\n";
            for (int i = 0; i < sim_n; ++i) truth << s.graph.node_ids[i] << '\t' << s.tau[i] << '\t' << s.block[i] << '\n';
            st.end();
            std::cerr << "sampled " << s.graph.n << " nodes and " << s.graph.edges.size() << " edges\n";
            return 0;
        });
    }
    if (*mc_cmd) {
        return guarded(st, [&] {
            st.begin("setup");
            McDesign d = app::read_design(design_path);
            if (jobs > 0) d.jobs = jobs;
            if (replicates) d.replicates = *replicates;
            if (!n_override.empty()) d.n_values = n_override;
            st.begin("montecarlo");
            const McSummary s = run_design(d);
            st.end();
            st.begin("write");
            std::ofstream file;
            app::write_mc_summary(s, output(out_path, file));
            if (!runs_path.empty()) {
                std::ofstream runs(runs_path);
                if (!runs) fail(ErrorKind::InvalidInput, "cannot write '" + runs_path + "'");
                runs << "n\tid\tdiverged\tseconds\tari\testimator\tparameter\tvalue\tbias_hat\tse_hat\n";
                for (const auto& r : s.runs) {
                    if (r.diverged) {
                        runs << r.n << '\t' << r.id << "\t1\t" << r.seconds << "\tNA\tNA\tNA\tNA\tNA\tNA\n";
                        continue;
                    }
                    auto na = [](double x) {
                        std::ostringstream os;
                        if (std::isfinite(x)) {
                            os << x;
                        } else {
                            os << "NA";
                        }
                        return os.str();
                    };
                    auto emit = [&](const char* name, const std::vector<double>& v, const std::vector<double>& b,
                                    const std::vector<double>& se) {
                        for (size_t p = 0; p < v.size(); ++p) {
                            runs << r.n << '\t' << r.id << "\t0\t" << r.seconds << '\t' << r.ari << '\t' << name
                                 << '\t' << p + 1 << '\t' << v[p] << '\t' << na(b[p]) << '\t' << na(se[p]) << '\n';
                        }
                    };
                    emit("SimpleMean", r.simple, r.simple_bias, r.simple_se);
                    emit("WeightedMean", r.weighted, r.weighted_bias, r.weighted_se);
                }
            }
            st.end();
            return 0;
        });
    }
    return guarded(st, [&] {
        const Graph g = load_graph(embed_graph, {}, st);
        st.begin("embed");
        const Adjacency adj = g.adjacency();
        const AdjacencyOperator op = embed_graph.regularize ? regularize_degrees(adj, *embed_graph.regularize)
                                                            : adj.op();
        EigenOptions eo;
        eo.seed = derive_seed(seed, 3);
        Embedding e;
        if (fit_d) {
            e = ase(op, *fit_d, eo);
        } else {
            int m = max_d;
            if (m <= 0) {
                if (!embed_k) fail(ErrorKind::ConfigError, "embed needs --d, --max-d, or --k");
                m = default_max_dim(g.n, *embed_k);
            }
            const EigenSelection sel = top_eigenpairs(op, std::max(m, 2), eo);
            e = embedding_from(sel, select_dimension(sel.values, m));
        }
        st.end();
        std::cerr << "d_hat = " << e.Y.cols() << " signature (" << e.signature.d1 << "," << e.signature.d2 << ")\n";
        std::ofstream file;
        app::write_embedding(e.Y, output(out_path, file));
        return 0;
    });
}
