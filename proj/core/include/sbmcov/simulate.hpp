#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sbmcov/estimator.hpp"
#include "sbmcov/graph.hpp"
#include "sbmcov/model.hpp"

namespace sbmcov {

/// A sampled network with its ground truth.
struct SampledGraph {
    Graph graph;                  // covariate columns named z1, z2, ...
    std::vector<int> tau;         // latent block per node
    std::vector<int> block;       // expanded block per node
    std::vector<std::vector<int>> z;  // z[c][i]
};

/// Name of the c-th sampled covariate column (0-based).
std::string covariate_name(int c);

/// Draws tau, covariates given tau, then independent edges with
/// probability rho * h(score). Dense pairs are drawn one by one; when the
/// mean edge probability is below 0.05 each block pair draws a binomial
/// count and places that many distinct pairs uniformly.
SampledGraph sample_graph(const SbmSpec& spec, int n, std::uint64_t seed);

/// Edges of an SBM with fixed node blocks and block probabilities p (already scaled).
std::vector<std::pair<int, int>> sample_block_edges(const MatrixXd& p, const std::vector<int>& block,
                                                    std::uint64_t seed);

/// Two binary vectors with marginals b_z, b_w and the given Pearson correlation.
std::pair<std::vector<int>, std::vector<int>> sample_correlated_bernoulli(double b_z, double b_w,
                                                                          double correlation, int n,
                                                                          std::uint64_t seed);

/// Parametric bootstrap: resamples the network from the fitted block model
/// (node blocks and covariates held fixed) and refits; returns the standard
/// deviation of each estimate, ordered as fit.simple then fit.weighted.
std::vector<double> bootstrap_se(const FitResult& fit, const std::vector<std::vector<int>>& z,
                                 const FitOptions& opts, int replicates, std::uint64_t seed);

/// Monte Carlo design.
struct McDesign {
    std::string name = "design";
    SbmSpec spec;
    std::vector<int> n_values;
    int replicates = 1;
    EstimatorChoice estimators = EstimatorChoice::Both;
    std::uint64_t seed = 1;
    FitOptions fit;                        // K, link, and covariate names are filled from spec
    std::optional<double> rho_exponent;    // rho_n = n^{-a} when set
    int jobs = 1;
};

/// Outcome of one replicate.
struct McReplicate {
    int n = 0;
    int id = 0;
    bool diverged = false;
    std::string error;
    double seconds = 0.0;
    double ari = 0.0;
    std::vector<double> simple;            // per parameter
    std::vector<double> weighted;
    std::vector<double> simple_se;
    std::vector<double> weighted_se;
    std::vector<double> simple_bias;
    std::vector<double> weighted_bias;
};

/// Aggregate over replicates for one (n, estimator, parameter).
struct McRow {
    int n = 0;
    std::string estimator;
    int parameter = 0;                     // 1-based
    double truth = 0.0;
    double mean_abs_error = 0.0;
    std::optional<double> mcse;            // absent with one usable replicate
    double mean_estimate = 0.0;
    double mean_seconds = 0.0;
    double mean_ari = 0.0;
    int used = 0;
    int divergences = 0;
};

struct McSummary {
    std::string design;
    int replicates = 0;
    std::vector<McRow> rows;
    std::vector<McReplicate> runs;         // sorted by (n, id)
};

/// Seed of replicate `id` at size n.
std::uint64_t replicate_seed(std::uint64_t seed, int n, int id);
/// Runs one replicate (never throws for fit failures).
McReplicate run_replicate(const McDesign& d, int n, int id);
/// Runs all replicates, optionally on d.jobs threads, and aggregates.
McSummary run_design(const McDesign& d);
/// Rebuilds the aggregate rows from replicate records.
std::vector<McRow> summarize(const McDesign& d, const std::vector<McReplicate>& runs);

/// Designs 1-5 of the two-covariate logit study (K=2, nu=(-1.5,1), beta=(0.5,0.75)).
SbmSpec design_spec(int design);

}  // namespace sbmcov
