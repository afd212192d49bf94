#pragma once

#include <Eigen/Dense>
#include <array>
#include <string>
#include <vector>

namespace sbmcov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class LinkKind { Identity, Logit };

/// Known link h mapping scores to probabilities.
struct Link {
    LinkKind kind = LinkKind::Identity;

    double forward(double u) const;
    /// h^{-1}; throws InvalidInput outside the open domain of the link.
    double inverse(double p) const;
    /// (h^{-1})'(p); throws InvalidInput where undefined.
    double inverse_derivative(double p) const;

    static Link identity() { return Link{LinkKind::Identity}; }
    static Link logit() { return Link{LinkKind::Logit}; }
};

std::string to_string(LinkKind kind);
LinkKind parse_link(const std::string& name);

/// Law of binary covariate(s) conditional on the latent block.
struct CovariateLaw {
    enum class Kind { BernoulliPerBlock, BernoulliPair };
    Kind kind = Kind::BernoulliPerBlock;
    std::vector<double> b;     // BernoulliPerBlock: success probability per block
    double b_z = 0.5;          // BernoulliPair marginals and Pearson correlation
    double b_w = 0.5;
    double correlation = 0.0;

    static CovariateLaw per_block(std::vector<double> b);
    static CovariateLaw pair(double b_z, double b_w, double correlation);

    int arity() const { return kind == Kind::BernoulliPair ? 2 : 1; }
    /// Joint cell probabilities P(Z=0,W=0), P(1,0), P(0,1), P(1,1) of a pair law.
    std::array<double, 4> pair_cells() const;
    /// Probability of the bit pattern (bits[0..arity)) for a node in block tau.
    double probability(int tau, const int* bits) const;
};

enum class Homophily { Shared, Differential };

/// Generative stochastic blockmodel with binary nodal covariates.
struct SbmSpec {
    int K = 1;
    VectorXd pi;                          // block priors, length K
    MatrixXd nu;                          // K x d latent centroids (row k is nu_k)
    std::vector<CovariateLaw> covariates;
    std::vector<double> beta;             // one per covariate, or (beta_1, beta_2) if Differential
    Homophily homophily = Homophily::Shared;
    Link link;
    double rho = 1.0;

    int covariate_count() const;
    int latent_dim() const { return static_cast<int>(nu.cols()); }
    /// Checks priors, covariate laws, and parameter counts; throws InvalidModel.
    void validate() const;
};

/// Latent block and covariate values of one expanded block.
struct BlockLabel {
    int tau = 0;
    std::vector<int> z;

    bool operator==(const BlockLabel&) const = default;
};

/// Stochastic blockmodel over latent block x covariate pattern.
struct ExpandedSbm {
    int K = 0;
    int covariates = 0;
    int Ktilde = 0;
    MatrixXd scores;   // pre-link matrix B_Z
    MatrixXd theta_Z;  // h(B_Z), without the sparsity factor
    VectorXd eta;
    std::vector<BlockLabel> label_map;
};

/// Index of the expanded block (tau, z) in the fixed ordering
/// (tau=0, z=0..0), (tau=0, z=1 0..0), ... with z_1 the fastest bit.
int expanded_index(int tau, const std::vector<int>& z);

/// Entry (k,l) = h(nu_k^T nu_l).
MatrixXd theta_of_latents(const MatrixXd& nu, const Link& link);

ExpandedSbm expand_one_covariate(const SbmSpec& spec);
ExpandedSbm expand_two_covariates(const SbmSpec& spec);
ExpandedSbm expand_differential_homophily(const SbmSpec& spec);
/// Dispatches on the covariate count and homophily kind; any count >= 0.
ExpandedSbm expand(const SbmSpec& spec);

}  // namespace sbmcov
