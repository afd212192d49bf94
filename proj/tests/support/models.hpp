#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "sbmcov/model.hpp"

namespace sbmcov::testing {

inline SbmSpec two_block_identity() {
    SbmSpec s;
    s.K = 2;
    s.pi = VectorXd::Constant(2, 0.5);
    s.nu.resize(2, 1);
    s.nu << 0.1, 0.7;
    s.link = Link::identity();
    return s;
}

inline SbmSpec two_block_logit(double beta = 1.5) {
    SbmSpec s;
    s.K = 2;
    s.pi = VectorXd::Constant(2, 0.5);
    s.nu.resize(2, 1);
    s.nu << -1.5, 1.0;
    s.link = Link::logit();
    s.covariates.push_back(CovariateLaw::per_block({0.5, 0.5}));
    s.beta = {beta};
    return s;
}

inline SbmSpec two_dim_logit() {
    SbmSpec s = two_block_logit(0.5);
    s.nu.resize(2, 2);
    s.nu << -1.5, -1.0, 1.0, 0.5;
    return s;
}

/// Expanded block of each node: `per_block` consecutive nodes per block.
inline std::vector<int> equal_blocks(int Ktilde, int per_block) {
    std::vector<int> block(static_cast<std::size_t>(Ktilde) * per_block);
    for (std::size_t i = 0; i < block.size(); ++i) block[i] = static_cast<int>(i) / per_block;
    return block;
}

/// Covariate columns implied by the label map, z[c][i].
inline std::vector<std::vector<int>> covariates_of(const ExpandedSbm& m, const std::vector<int>& block) {
    std::vector<std::vector<int>> z(m.covariates, std::vector<int>(block.size()));
    for (std::size_t i = 0; i < block.size(); ++i) {
        for (int c = 0; c < m.covariates; ++c) z[c][i] = m.label_map[block[i]].z[c];
    }
    return z;
}

/// Exact probability matrix P_ij = rho * theta_Z(block_i, block_j), diagonal included.
inline MatrixXd exact_probability(const ExpandedSbm& m, const std::vector<int>& block, double rho = 1.0) {
    const auto n = static_cast<Eigen::Index>(block.size());
    MatrixXd p(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) p(i, j) = rho * m.theta_Z(block[i], block[j]);
    }
    return p;
}

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
};

inline Moments sample_moments(const std::vector<double>& x) {
    Moments out;
    const double n = static_cast<double>(x.size());
    out.mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - out.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    out.sd = std::sqrt(m2 * n / (n - 1.0));
    out.skewness = m3 / std::pow(m2, 1.5);
    out.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    return out;
}

inline double sample_covariance(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / (n - 1.0);
}

}  // namespace sbmcov::testing
