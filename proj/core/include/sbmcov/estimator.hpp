#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sbmcov/clustering.hpp"
#include "sbmcov/graph.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/spectral.hpp"

namespace sbmcov {

enum class EstimatorChoice { Both, Simple, Weighted };
enum class ClusterMethod { Gmm, KMeans };
enum class Regime { Dense, Sparse };
/// Embedding dimension when none is given: the profile-likelihood elbow, one
/// past it, or the expanded block count (the largest possible rank of theta_Z).
enum class DimensionRule { Elbow, ElbowPlusOne, Ktilde };

EstimatorChoice parse_estimator(const std::string& name);
DimensionRule parse_dimension_rule(const std::string& name);

struct FitOptions {
    int K = 1;
    std::vector<std::string> covariates;  // binary covariate columns, in order
    Link link;
    std::optional<int> d;                  // skip dimension selection when set
    int max_d = 0;                         // 0: min(n, 2 Ktilde, 50)
    DimensionRule dim_rule = DimensionRule::Elbow;
    std::optional<int> latent_dim;         // skip selection for the net-out positions
    std::optional<int> subgraph_d;         // differential homophily: subgraph embedding dimension
    EstimatorChoice estimator = EstimatorChoice::Both;
    ClusterMethod cluster = ClusterMethod::Gmm;
    GmmConfig gmm;
    KMeansConfig kmeans;
    EigenOptions eigen;
    double clip_epsilon = 1e-6;
    std::optional<double> regularize;      // gamma for A + (gamma dbar / n) J
    Regime regime = Regime::Dense;
    std::optional<double> rho;             // known sparsity factor; 1 when absent
    bool compute_se = true;
};

/// Clustering output and block-level estimates.
struct BlockFit {
    int n = 0;
    int K = 0;
    int covariates = 0;
    int Ktilde = 0;
    int d_hat = 0;
    SignatureMetric signature;
    VectorXd eigenvalues;                  // magnitudes-sorted values used for selection
    MatrixXd mu;                           // Ktilde x d centroids
    std::vector<int> xi;                   // block per node
    std::vector<long> sizes;
    std::vector<std::vector<long>> ones;   // ones[c][k]: nodes of block k with covariate c = 1
    MatrixXd theta_Z;                      // clipped estimate
    MatrixXd B_Z;                          // h^{-1}(theta_Z)
    int clip_count = 0;
    std::vector<int> psi;                  // latent group of each expanded block
    std::vector<std::vector<int>> z_theta; // majority covariate values, [k][c]
    Link link;
    double rho = 1.0;                      // sparsity factor applied before h^{-1}
};

enum class BetaVariant { SimpleMean, WeightedMean, SinglePair };

std::string to_string(BetaVariant v);

/// beta contribution weight * (B_{k,l} - B_{k,lp}).
struct PairTerm {
    int k = 0;
    int l = 0;
    int lp = 0;
    double weight = 0.0;
};

struct BetaEstimate {
    double value = 0.0;
    BetaVariant variant = BetaVariant::SimpleMean;
    int covariate = 0;
    std::vector<PairTerm> pairs_used;      // weights sum to 1
    double bias_hat = 0.0;
    double se_hat = 0.0;
    double diagonal_bias_hat = 0.0;        // zero-diagonal correction, separate from bias_hat
};

/// How pair sets treat covariate values.
enum class PairMode { Shared, DifferentialZero, DifferentialOne };

struct FitResult {
    BlockFit block;
    std::vector<BetaEstimate> simple;      // one per covariate (or per homophily parameter)
    std::vector<BetaEstimate> weighted;
    MatrixXd latent_positions;             // K x d_X
    SignatureMetric latent_signature;
    std::map<std::string, double> timings; // seconds per stage
};

/// Runs the full pipeline on a graph whose covariate columns are named in opts.
FitResult fit(const Graph& graph, const FitOptions& opts);
/// Same pipeline on any symmetric operator with covariate values z[c][i] in {0,1}.
FitResult fit_operator(const SymmetricOperator& op, const std::vector<std::vector<int>>& z,
                       const FitOptions& opts);
/// Test hook: the pipeline on a dense matrix such as an exact probability matrix.
FitResult fit_matrix(const MatrixXd& a, const std::vector<std::vector<int>>& z, const FitOptions& opts);

/// Steps 3-5 given an embedding and block assignments: centroids, theta, B, grouping.
/// `shift` is a constant added to every entry of the embedded matrix and removed from theta.
BlockFit block_fit_from(const Embedding& e, const std::vector<int>& xi, const MatrixXd& centroids,
                        const std::vector<std::vector<int>>& z, int K, const FitOptions& opts,
                        double shift = 0.0);

/// Majority label rule with ties to 0.
std::vector<std::vector<int>> majority_labels(const BlockFit& bf);

std::vector<PairTerm> simple_mean_pairs(const BlockFit& bf, int covariate, PairMode mode = PairMode::Shared);
/// Unnormalized weight (n0k n0l n1l' + n1k n1l n0l') / (nk nl nl') of one pair.
double pair_weight(const BlockFit& bf, int covariate, int k, int l, int lp, PairMode mode = PairMode::Shared);
std::vector<PairTerm> weighted_mean_pairs(const BlockFit& bf, int covariate, PairMode mode = PairMode::Shared);
double evaluate_pairs(const MatrixXd& B, const std::vector<PairTerm>& pairs);

BetaEstimate beta_simple_mean(const BlockFit& bf, int covariate = 0, PairMode mode = PairMode::Shared);
BetaEstimate beta_weighted_mean(const BlockFit& bf, int covariate = 0, PairMode mode = PairMode::Shared);

/// Latent positions from the beta-free cross-covariate K x K submatrix of B_Z.
struct LatentPositions {
    MatrixXd X;
    SignatureMetric signature;
    MatrixXd submatrix;
};
LatentPositions recover_latent_positions(const BlockFit& bf, std::optional<int> dim = std::nullopt);

/// Two-covariate pipeline (Ktilde = 4K); equivalent to fit with two columns.
FitResult fit_multi_covariate(const Graph& graph, const FitOptions& opts);

/// Differential homophily: latent blocks from the Z=0 and Z=1 induced subgraphs,
/// then the full-graph estimates of (beta_1, beta_2).
FitResult fit_differential_homophily(const Graph& graph, const FitOptions& opts);
FitResult fit_differential_matrix(const MatrixXd& a, const std::vector<int>& z, const FitOptions& opts);

}  // namespace sbmcov
