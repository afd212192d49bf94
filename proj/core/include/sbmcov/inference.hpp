#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "sbmcov/estimator.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/spectral.hpp"

namespace sbmcov {

/// Block-level moments entering the asymptotic bias and variance formulas.
struct SbmMoments {
    VectorXd eta;        // Ktilde
    MatrixXd mu;         // Ktilde x d, row k is mu_k
    MatrixXd theta;      // Ktilde x Ktilde
    MatrixXd Delta;      // sum_k eta_k mu_k mu_k^T
    MatrixXd Delta_inv;
    MatrixXd zeta;       // mu_k^T Delta^{-1} mu_l
    SignatureMetric signature;
    double condition = 0.0;
    Regime regime = Regime::Dense;

    int blocks() const { return static_cast<int>(eta.size()); }
};

/// Builds moments; throws NumericalFailure when cond(Delta) > 1e12.
SbmMoments make_moments(const VectorXd& eta, const MatrixXd& mu, const SignatureMetric& signature,
                        const MatrixXd& theta);
/// Moments of the exact expanded model: mu from the nonzero spectrum of theta_Z.
SbmMoments exact_moments(const ExpandedSbm& model);
/// Plug-in moments from a fit (eta = sizes / n, theta = clipped estimate); rho-free.
SbmMoments plugin_moments(const BlockFit& bf);
/// Same moments in the sparse regime: every theta(1 - theta) weight becomes theta.
SbmMoments sparse_moments(const SbmMoments& m);

/// Variance weight of a block pair: theta(1-theta) (Dense) or theta (Sparse).
double edge_weight(const SbmMoments& m, int a, int b);

double bias_psi(const SbmMoments& m, int k, int l);
/// First-order bias of n(theta_hat_kl - theta_kl) from the zero diagonal of A,
/// which psi does not include: -zeta_kl (theta_kk + theta_ll) + sum_r eta_r zeta_kr theta_rr zeta_rl.
double hollow_bias(const SbmMoments& m, int k, int l);
/// sigma^2_{kk} and sigma^2_{kl} written out term by term.
double variance_sigma2(const SbmMoments& m, int k, int l);
/// Asymptotic covariance of n(theta_hat_kl - theta_kl) and n(theta_hat_k'l' - theta_k'l').
double covariance_sigma(const SbmMoments& m, std::pair<int, int> a, std::pair<int, int> b);

struct DeltaMoments {
    double psi_tilde = 0.0;
    double sigma2_tilde = 0.0;
};
/// Transfers bias and variance of theta_hat_kl to h^{-1}(theta_hat_kl).
DeltaMoments delta_method(const SbmMoments& m, int k, int l, const Link& link);

struct BetaInference {
    double bias_hat = 0.0;
    double se_hat = 0.0;
    double psi_beta = 0.0;    // n-scale bias of the linear combination
    double sigma2_beta = 0.0; // n-scale variance
    double hollow_beta = 0.0; // n-scale zero-diagonal bias, not part of bias_hat
};

/// Bias and standard error of sum_t w_t (B_{k l} - B_{k l'}); the variance uses
/// the full covariance over all entries involved.
/// Dense: bias psi/n, se sigma/n. Sparse: bias psi/(n rho), se sigma/(n sqrt(rho)).
BetaInference beta_se(const SbmMoments& m, const std::vector<PairTerm>& pairs, const Link& link, double n,
                      double rho = 1.0);

/// Covariance matrix of n(theta_hat - theta) over the given entries.
MatrixXd entry_covariance(const SbmMoments& m, const std::vector<std::pair<int, int>>& entries);

}  // namespace sbmcov
