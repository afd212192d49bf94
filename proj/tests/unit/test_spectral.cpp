#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "models.hpp"
#include "sbmcov/error.hpp"
#include "sbmcov/graph.hpp"
#include "sbmcov/simulate.hpp"
#include "sbmcov/spectral.hpp"

using namespace sbmcov;
using namespace sbmcov::testing;

namespace {

MatrixXd random_symmetric(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) m(i, j) = m(j, i) = g(rng);
    }
    return m;
}

/// Reference: full dense decomposition sorted by magnitude, ties to positive.
VectorXd reference_values(const MatrixXd& m, int d, MatrixXd* vectors = nullptr) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m);
    std::vector<int> idx(m.rows());
    for (int i = 0; i < m.rows(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        const double x = eig.eigenvalues()[a], y = eig.eigenvalues()[b];
        if (std::abs(x) != std::abs(y)) return std::abs(x) > std::abs(y);
        return x > y;
    });
    VectorXd out(d);
    if (vectors) vectors->resize(m.rows(), d);
    for (int i = 0; i < d; ++i) {
        out[i] = eig.eigenvalues()[idx[i]];
        if (vectors) vectors->col(i) = eig.eigenvectors().col(idx[i]);
    }
    return out;
}

/// Largest principal angle between two column spaces with orthonormal bases.
double max_principal_angle(const MatrixXd& a, const MatrixXd& b) {
    Eigen::JacobiSVD<MatrixXd> svd(a.transpose() * b);
    const double smallest = std::clamp(svd.singularValues().minCoeff(), -1.0, 1.0);
    return std::acos(smallest);
}

/// Zhu-Ghodsi profile log-likelihood written out directly.
int brute_force_elbow(const std::vector<double>& x) {
    const int p = static_cast<int>(x.size());
    int best = 1;
    double best_ll = -INFINITY;
    for (int q = 1; q < p; ++q) {
        double m1 = 0, m2 = 0;
        for (int i = 0; i < q; ++i) m1 += x[i];
        for (int i = q; i < p; ++i) m2 += x[i];
        m1 /= q;
        m2 /= (p - q);
        double ss = 0;
        for (int i = 0; i < q; ++i) ss += (x[i] - m1) * (x[i] - m1);
        for (int i = q; i < p; ++i) ss += (x[i] - m2) * (x[i] - m2);
        const double var = std::max(ss / std::max(p - 2, 1), 1e-12);
        double ll = 0;
        for (int i = 0; i < q; ++i) ll += -0.5 * std::log(2 * M_PI * var) - (x[i] - m1) * (x[i] - m1) / (2 * var);
        for (int i = q; i < p; ++i) ll += -0.5 * std::log(2 * M_PI * var) - (x[i] - m2) * (x[i] - m2) / (2 * var);
        if (ll > best_ll) {
            best_ll = ll;
            best = q;
        }
    }
    return best;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("diagonal matrix") {
    MatrixXd m = MatrixXd::Zero(3, 3);
    m.diagonal() << 3, -2, 1;
    const EigenSelection sel = top_eigenpairs(m, 2);
    CHECK(sel.values[0] == doctest::Approx(3));
    CHECK(sel.values[1] == doctest::Approx(-2));
    CHECK(sel.d1 == 1);
    CHECK(sel.d2 == 1);
}

TEST_CASE("rank one block matrix") {
    const int n = 10;
    MatrixXd m(n, n);
    const double nu[2] = {0.1, 0.7};
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) m(i, j) = nu[i / 5] * nu[j / 5];
    }
    const EigenSelection sel = top_eigenpairs(m, 2);
    CHECK(sel.values[0] == doctest::Approx(n * (0.01 + 0.49) / 2));
    CHECK(std::abs(sel.values[1]) < 1e-10);
}

TEST_CASE("expanded logit model has one negative eigenvalue") {
    const ExpandedSbm model = expand(two_block_logit());
    const EigenSelection sel = top_eigenpairs(model.theta_Z, 4);
    CHECK(sel.d1 == 3);
    CHECK(sel.d2 == 1);
    CHECK(sel.values[3] < 0);
}

TEST_CASE("embedding of an exact probability matrix") {
    const ExpandedSbm model = expand(two_block_identity());
    const std::vector<int> block = equal_blocks(2, 20);
    const MatrixXd p = exact_probability(model, block);
    const Embedding e = ase(p, 1);
    CHECK(e.signature.d1 == 1);
    CHECK(e.signature.d2 == 0);
    const double a = e.Y(0, 0), b = e.Y(39, 0);
    for (int i = 0; i < 20; ++i) CHECK(e.Y(i, 0) == doctest::Approx(a).epsilon(1e-10));
    CHECK(a * a == doctest::Approx(0.01).epsilon(1e-10));
    CHECK(a * b == doctest::Approx(0.07).epsilon(1e-10));
    CHECK(b * b == doctest::Approx(0.49).epsilon(1e-10));
    CHECK((reconstruct_p(e) - p).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("indefinite reconstruction") {
    const ExpandedSbm model = expand(two_block_logit());
    const std::vector<int> block = equal_blocks(4, 6);
    const MatrixXd p = exact_probability(model, block);
    const Embedding e = ase(p, 4);
    CHECK(e.signature.d1 == 3);
    CHECK(e.signature.d2 == 1);
    CHECK((reconstruct_p(e) - p).cwiseAbs().maxCoeff() < 1e-8);

    EigenOptions iter;
    iter.method = EigenMethod::Iterative;
    const Embedding ei = ase(p, 4, iter);
    CHECK((reconstruct_p(ei) - p).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("hand-computed indefinite product") {
    Embedding e;
    e.Y.resize(2, 2);
    e.Y << 1, 1, 1, -1;
    e.signature = {1, 1};
    const MatrixXd p = reconstruct_p(e);
    CHECK(p(0, 1) == doctest::Approx(2.0));
    CHECK(p(0, 0) == doctest::Approx(0.0));

    const Embedding zero = ase(MatrixXd::Zero(5, 5), 1);
    CHECK(zero.Y.cwiseAbs().maxCoeff() == 0.0);
    CHECK(reconstruct_p(zero).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("iterative solver matches dense decomposition") {
    std::mt19937_64 rng(7);
    EigenOptions iter;
    iter.method = EigenMethod::Iterative;
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 8 + 5 * trial;
        const int d = 1 + trial % 4;
        MatrixXd m = random_symmetric(n, rng);
        MatrixXd ref_vectors;
        const VectorXd ref = reference_values(m, d, &ref_vectors);
        const EigenSelection sel = top_eigenpairs(m, d, iter);
        const EigenSelection dense = top_eigenpairs(m, d);
        for (int i = 0; i < d; ++i) {
            CHECK(sel.values[i] == doctest::Approx(ref[i]).epsilon(1e-8));
            CHECK(dense.values[i] == doctest::Approx(ref[i]).epsilon(1e-8));
        }
        CHECK(max_principal_angle(sel.vectors, ref_vectors) < 1e-6);
        CHECK((sel.vectors.transpose() * sel.vectors - MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-8);
        for (int i = 1; i < d; ++i) CHECK(std::abs(sel.values[i]) <= std::abs(sel.values[i - 1]));
        CHECK(sel.d1 + sel.d2 == d);
    }
}

TEST_CASE("sparse operator agrees with the dense adjacency") {
    const SampledGraph s = sample_graph(two_block_logit(), 300, 11);
    const Adjacency adj = s.graph.adjacency();
    MatrixXd dense = MatrixXd::Zero(300, 300);
    for (auto [u, v] : s.graph.edges) dense(u, v) = dense(v, u) = 1.0;
    EigenOptions iter;
    iter.method = EigenMethod::Iterative;
    const EigenSelection a = top_eigenpairs(adj.op(), 4, iter);
    const VectorXd ref = reference_values(dense, 4);
    for (int i = 0; i < 4; ++i) CHECK(a.values[i] == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("eigenvector sign convention") {
    std::mt19937_64 rng(3);
    const MatrixXd m = random_symmetric(20, rng);
    const EigenSelection sel = top_eigenpairs(m, 3);
    for (int j = 0; j < 3; ++j) {
        Eigen::Index at;
        sel.vectors.col(j).cwiseAbs().maxCoeff(&at);
        CHECK(sel.vectors(at, j) > 0);
    }
}

TEST_CASE("input validation") {
    MatrixXd m = MatrixXd::Identity(3, 3);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(top_eigenpairs(m, 1), Error);
    CHECK_THROWS_AS(top_eigenpairs(MatrixXd::Identity(3, 3), 4), Error);
    CHECK_THROWS_AS(top_eigenpairs(MatrixXd::Identity(3, 3), 0), Error);
}

TEST_CASE("profile likelihood elbow") {
    VectorXd a(6);
    a << 10, 9, 8, 0.5, 0.4, 0.3;
    CHECK(select_dimension(a, 6) == 3);
    CHECK(brute_force_elbow({10, 9, 8, 0.5, 0.4, 0.3}) == 3);
    VectorXd b(4);
    b << 100, 1, 1, 1;
    CHECK(select_dimension(b, 4) == 1);
    CHECK(brute_force_elbow({100, 1, 1, 1}) == 1);
    CHECK_THROWS_AS(select_dimension(VectorXd::Ones(1), 1), Error);

    std::mt19937_64 rng(5);
    std::exponential_distribution<double> ex(1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(3 + trial % 10);
        for (double& x : v) x = ex(rng);
        std::sort(v.rbegin(), v.rend());
        VectorXd e = Eigen::Map<VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
        CHECK(select_dimension(e, static_cast<int>(v.size())) == brute_force_elbow(v));
    }
    CHECK(default_max_dim(10000, 4) == 8);
    CHECK(default_max_dim(10000, 64) == 50);
    CHECK(default_max_dim(6, 4) == 6);
}

TEST_CASE("embedding error shrinks with n") {
    const SbmSpec spec = two_block_identity();
    double previous = INFINITY;
    for (int n : {500, 1000, 2000}) {
        const SampledGraph s = sample_graph(spec, n, 100 + n);
        const Adjacency adj = s.graph.adjacency();
        const Embedding e = ase(adj.op(), 1);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            err = std::max(err, std::abs(std::abs(e.Y(i, 0)) - spec.nu(s.tau[i], 0)));
        }
        CHECK(err < previous);
        previous = err;
    }
}

}
