#include "sbmcov/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "sbmcov/error.hpp"

namespace sbmcov {

MatrixXd SymmetricOperator::to_dense() const {
    const Eigen::Index n = size();
    MatrixXd out(n, n);
    VectorXd e = VectorXd::Zero(n);
    VectorXd col(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        e[j] = 1.0;
        apply(e, col);
        out.col(j) = col;
        e[j] = 0.0;
    }
    return out;
}

void AdjacencyOperator::apply(const VectorXd& x, VectorXd& y) const {
    const Eigen::Index n = size();
    y.resize(n);
    const double shifted = shift_ != 0.0 ? shift_ * x.sum() : 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t p = offsets_[i]; p < offsets_[i + 1]; ++p) acc += x[neighbors_[p]];
        y[i] = acc + shifted;
    }
}

VectorXd SignatureMetric::diagonal() const {
    VectorXd diag(dim());
    diag.head(d1).setOnes();
    diag.tail(d2).setConstant(-1.0);
    return diag;
}

namespace {

/// Indices sorted by |value| descending, positive first on magnitude ties.
std::vector<int> magnitude_order(const VectorXd& values) {
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = std::abs(values[a]);
        const double mb = std::abs(values[b]);
        if (ma != mb) return ma > mb;
        return values[a] > values[b];
    });
    return order;
}

void fix_signs(MatrixXd& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0) vectors.col(j) *= -1.0;
    }
}

EigenSelection finish(const VectorXd& values, const MatrixXd& vectors, int d) {
    const auto order = magnitude_order(values);
    EigenSelection sel;
    sel.values.resize(d);
    sel.vectors.resize(vectors.rows(), d);
    for (int i = 0; i < d; ++i) {
        sel.values[i] = values[order[i]];
        sel.vectors.col(i) = vectors.col(order[i]);
        (sel.values[i] > 0 ? sel.d1 : sel.d2) += 1;
    }
    fix_signs(sel.vectors);
    return sel;
}

EigenSelection dense_solve(const MatrixXd& m, int d) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> solver(m);
    if (solver.info() != Eigen::Success) {
        fail(ErrorKind::NumericalFailure, "dense symmetric eigensolver did not converge");
    }
    return finish(solver.eigenvalues(), solver.eigenvectors(), d);
}

/// Thick-restart Lanczos with full reorthogonalization.
EigenSelection lanczos(const SymmetricOperator& op, int nev, const EigenOptions& opts) {
    const Eigen::Index n = op.size();
    const int m = static_cast<int>(std::min<Eigen::Index>(n - 1, std::max(2 * nev + 20, nev + 40)));
    const long budget = static_cast<long>(opts.max_iter_per_dim) * nev * m;
    MatrixXd V(n, m + 1);
    MatrixXd T = MatrixXd::Zero(m, m);
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss;

    auto random_orthogonal = [&](int against) {
        VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
        for (int pass = 0; pass < 2 && against > 0; ++pass) {
            v -= V.leftCols(against) * (V.leftCols(against).transpose() * v);
        }
        return VectorXd(v / v.norm());
    };

    V.col(0) = random_orthogonal(0);
    int kept = 0;
    long matvecs = 0;
    double beta = 0.0;
    VectorXd w(n);
    double worst = 0.0;
    while (true) {
        for (int j = kept; j < m; ++j) {
            op.apply(V.col(j), w);
            ++matvecs;
            VectorXd h = V.leftCols(j + 1).transpose() * w;
            w.noalias() -= V.leftCols(j + 1) * h;
            const VectorXd h2 = V.leftCols(j + 1).transpose() * w;
            w.noalias() -= V.leftCols(j + 1) * h2;
            h += h2;
            T.block(0, j, j + 1, 1) = h;
            T.block(j, 0, 1, j + 1) = h.transpose();
            beta = w.norm();
            const double scale = std::max(1.0, T.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff());
            if (beta <= 1e-13 * scale) {
                beta = 0.0;
                V.col(j + 1) = random_orthogonal(j + 1);
            } else {
                V.col(j + 1) = w / beta;
            }
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> small(T);
        const VectorXd& theta = small.eigenvalues();
        const MatrixXd& Y = small.eigenvectors();
        const auto order = magnitude_order(theta);
        const double scale = std::max(std::abs(theta[order[0]]), 1e-300);
        bool converged = true;
        worst = 0.0;
        for (int i = 0; i < nev; ++i) {
            const double res = std::abs(beta * Y(m - 1, order[i]));
            worst = std::max(worst, res / scale);
            if (res > opts.tol * scale) converged = false;
        }
        if (converged) {
            VectorXd values(nev);
            MatrixXd ritz(n, nev);
            for (int i = 0; i < nev; ++i) {
                values[i] = theta[order[i]];
                ritz.col(i) = V.leftCols(m) * Y.col(order[i]);
            }
            EigenSelection sel = finish(values, ritz, nev);
            sel.matvecs = static_cast<int>(matvecs);
            return sel;
        }
        if (matvecs >= budget) {
            std::ostringstream os;
            os << "Lanczos did not converge after " << matvecs << " matrix-vector products (nev=" << nev
               << ", basis=" << m << ", worst relative residual " << worst << ")";
            fail(ErrorKind::NumericalFailure, os.str());
        }
        const int keep = std::min(m - 1, nev + (m - nev) / 2);
        MatrixXd Yk(m, keep);
        T.setZero();
        for (int i = 0; i < keep; ++i) {
            Yk.col(i) = Y.col(order[i]);
            T(i, i) = theta[order[i]];
        }
        const VectorXd residual = V.col(m);
        V.leftCols(keep) = V.leftCols(m) * Yk;
        V.col(keep) = residual;
        kept = keep;
    }
}

}  // namespace

EigenSelection top_eigenpairs(const SymmetricOperator& op, int d, const EigenOptions& opts) {
    const Eigen::Index n = op.size();
    if (d < 1 || d > n) fail(ErrorKind::InvalidInput, "requested dimension must lie in [1, n]");
    const bool dense = opts.method == EigenMethod::Dense ||
                       (opts.method == EigenMethod::Auto && n < opts.dense_below) ||
                       n <= 2 * d + 2;
    if (dense) return dense_solve(op.to_dense(), d);
    return lanczos(op, d, opts);
}

EigenSelection top_eigenpairs(const MatrixXd& m, int d, const EigenOptions& opts) {
    if (m.rows() != m.cols()) fail(ErrorKind::InvalidInput, "matrix must be square");
    if (!m.allFinite()) fail(ErrorKind::InvalidInput, "matrix must be finite");
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10) fail(ErrorKind::InvalidInput, "matrix is not symmetric");
    return top_eigenpairs(DenseOperator(m), d, opts);
}

Embedding embedding_from(const EigenSelection& sel, int d) {
    Embedding e;
    e.values = sel.values.head(d);
    e.Y.resize(sel.vectors.rows(), d);
    std::vector<int> pos, neg;
    for (int i = 0; i < d; ++i) (sel.values[i] > 0 ? pos : neg).push_back(i);
    int col = 0;
    for (const auto& group : {pos, neg}) {
        for (int i : group) {
            e.Y.col(col) = sel.vectors.col(i) * std::sqrt(std::abs(sel.values[i]));
            e.values[col] = sel.values[i];
            ++col;
        }
    }
    e.signature.d1 = static_cast<int>(pos.size());
    e.signature.d2 = static_cast<int>(neg.size());
    return e;
}

Embedding ase(const SymmetricOperator& op, int d, const EigenOptions& opts) {
    return embedding_from(top_eigenpairs(op, d, opts), d);
}

Embedding ase(const MatrixXd& a, int d, const EigenOptions& opts) {
    return embedding_from(top_eigenpairs(a, d, opts), d);
}

MatrixXd reconstruct_p(const Embedding& e) {
    return e.Y * e.signature.diagonal().asDiagonal() * e.Y.transpose();
}

double profile_loglik(const std::vector<double>& x, int q) {
    const int p = static_cast<int>(x.size());
    auto mean = [&](int lo, int hi) {
        return std::accumulate(x.begin() + lo, x.begin() + hi, 0.0) / (hi - lo);
    };
    const double m1 = mean(0, q);
    const double m2 = mean(q, p);
    double ss = 0.0;
    for (int i = 0; i < p; ++i) {
        const double r = x[i] - (i < q ? m1 : m2);
        ss += r * r;
    }
    const double var = std::max(ss / std::max(p - 2, 1), 1e-12);
    constexpr double kLog2Pi = 1.8378770664093453;
    return -0.5 * p * (kLog2Pi + std::log(var)) - ss / (2.0 * var);
}

int select_dimension(const VectorXd& eigenvalues, int max_d) {
    const int p = static_cast<int>(std::min<Eigen::Index>(eigenvalues.size(), max_d));
    if (p < 2) fail(ErrorKind::InvalidInput, "dimension selection needs at least two eigenvalues");
    std::vector<double> mags(p);
    for (int i = 0; i < p; ++i) mags[i] = std::abs(eigenvalues[i]);
    int best = 1;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int q = 1; q < p; ++q) {
        const double ll = profile_loglik(mags, q);
        if (ll > best_ll) {
            best_ll = ll;
            best = q;
        }
    }
    return best;
}

int default_max_dim(Eigen::Index n, int ktilde) {
    return static_cast<int>(std::min<Eigen::Index>({n, 2 * static_cast<Eigen::Index>(ktilde), 50}));
}

}  // namespace sbmcov
