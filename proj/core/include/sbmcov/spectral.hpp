#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace sbmcov {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Read-only symmetric linear operator y = M x.
class SymmetricOperator {
public:
    virtual ~SymmetricOperator() = default;
    virtual Eigen::Index size() const = 0;
    virtual void apply(const VectorXd& x, VectorXd& y) const = 0;
    /// Dense copy; the default builds it column by column from apply().
    virtual MatrixXd to_dense() const;
};

/// Wraps a dense symmetric matrix (not copied; must outlive the operator).
class DenseOperator : public SymmetricOperator {
public:
    explicit DenseOperator(const MatrixXd& m) : m_(m) {}
    Eigen::Index size() const override { return m_.rows(); }
    void apply(const VectorXd& x, VectorXd& y) const override { y.noalias() = m_ * x; }
    MatrixXd to_dense() const override { return m_; }

private:
    const MatrixXd& m_;
};

/// 0/1 adjacency in compressed-row form plus an optional implicit c * J shift.
class AdjacencyOperator : public SymmetricOperator {
public:
    AdjacencyOperator(const std::vector<std::int64_t>& offsets,
                      const std::vector<std::int32_t>& neighbors, double shift = 0.0)
        : offsets_(offsets), neighbors_(neighbors), shift_(shift) {}
    Eigen::Index size() const override { return static_cast<Eigen::Index>(offsets_.size()) - 1; }
    void apply(const VectorXd& x, VectorXd& y) const override;
    double shift() const { return shift_; }

private:
    const std::vector<std::int64_t>& offsets_;
    const std::vector<std::int32_t>& neighbors_;
    double shift_;
};

/// Diagonal matrix I_{d1,d2}.
struct SignatureMetric {
    int d1 = 0;
    int d2 = 0;

    int dim() const { return d1 + d2; }
    VectorXd diagonal() const;
};

/// Top-|eigenvalue| eigenpairs, sorted descending by magnitude.
struct EigenSelection {
    VectorXd values;
    MatrixXd vectors;
    int d1 = 0;
    int d2 = 0;
    int matvecs = 0;
};

enum class EigenMethod { Auto, Dense, Iterative };

struct EigenOptions {
    EigenMethod method = EigenMethod::Auto;
    Eigen::Index dense_below = 256;
    double tol = 1e-10;
    int max_iter_per_dim = 300;
    std::uint64_t seed = 0x5eed;
};

EigenSelection top_eigenpairs(const SymmetricOperator& op, int d, const EigenOptions& opts = {});
/// Checks symmetry (InvalidInput beyond 1e-10) before solving.
EigenSelection top_eigenpairs(const MatrixXd& m, int d, const EigenOptions& opts = {});

/// Estimated latent positions Y = U |S|^{1/2}.
struct Embedding {
    MatrixXd Y;
    SignatureMetric signature;
    VectorXd values;

    SignatureMetric metric() const { return signature; }
};

Embedding embedding_from(const EigenSelection& sel, int d);
Embedding ase(const SymmetricOperator& op, int d, const EigenOptions& opts = {});
Embedding ase(const MatrixXd& a, int d, const EigenOptions& opts = {});

/// Y I_{d1,d2} Y^T.
MatrixXd reconstruct_p(const Embedding& e);

/// Profile log-likelihood of splitting the magnitudes after position q (1-based).
double profile_loglik(const std::vector<double>& magnitudes, int q);
/// Zhu-Ghodsi elbow over the first max_d magnitudes; returns q in [1, p-1].
int select_dimension(const VectorXd& eigenvalues, int max_d);

/// Default search width min(n, 2 * ktilde, 50).
int default_max_dim(Eigen::Index n, int ktilde);

}  // namespace sbmcov
