#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sbmcov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct GmmConfig {
    int max_iter = 500;
    double tol = 1e-10;
    int n_init = 4;
    /// k-means++ starts screened by inertia; EM runs from the n_init best distinct ones.
    int screen = 32;
    std::uint64_t seed = 1;
    /// Ridge added to each covariance, as a multiple of trace(cov(points))/d.
    double reg = 1e-9;
};

/// Full-covariance Gaussian mixture fitted by EM.
struct GmmFit {
    int K = 0;
    MatrixXd means;  // K x d
    std::vector<MatrixXd> covariances;
    VectorXd weights;
    std::vector<int> assignments;
    double loglik = 0.0;
    /// Penalized objective per EM iteration of the selected run (non-decreasing).
    std::vector<double> objective_trace;
    int iterations = 0;
};

GmmFit fit_gmm(const MatrixXd& points, int K, const GmmConfig& config = {});

struct KMeansConfig {
    int max_iter = 300;
    int n_init = 4;
    std::uint64_t seed = 1;
};

struct KMeansFit {
    MatrixXd means;  // K x d
    std::vector<int> assignments;
    double inertia = 0.0;
};

KMeansFit fit_kmeans(const MatrixXd& points, int K, const KMeansConfig& config = {});

/// Balanced 1-d grouping of Ktilde values into K equal groups of consecutive
/// sorted values; group 0 holds the largest values.
std::vector<int> cluster_diagonal(const VectorXd& diag, int K);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace sbmcov
