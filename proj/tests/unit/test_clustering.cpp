#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sbmcov/clustering.hpp"
#include "sbmcov/error.hpp"

using namespace sbmcov;

namespace {

MatrixXd noisy_masses(const MatrixXd& masses, int copies, double noise, std::uint64_t seed,
                      std::vector<int>* truth) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, noise);
    MatrixXd pts(masses.rows() * copies, masses.cols());
    truth->clear();
    for (int k = 0; k < masses.rows(); ++k) {
        for (int c = 0; c < copies; ++c) {
            const int row = k * copies + c;
            for (int j = 0; j < masses.cols(); ++j) pts(row, j) = masses(k, j) + g(rng);
            truth->push_back(k);
        }
    }
    return pts;
}

double choose2(double x) { return x * (x - 1) / 2; }

/// Contingency-table formula written out directly.
double ari_by_formula(const std::vector<int>& a, const std::vector<int>& b) {
    const int ka = *std::max_element(a.begin(), a.end()) + 1;
    const int kb = *std::max_element(b.begin(), b.end()) + 1;
    std::vector<std::vector<double>> table(ka, std::vector<double>(kb, 0.0));
    for (size_t i = 0; i < a.size(); ++i) table[a[i]][b[i]] += 1;
    double sum_ij = 0, sum_a = 0, sum_b = 0;
    for (int i = 0; i < ka; ++i) {
        double row = 0;
        for (int j = 0; j < kb; ++j) {
            sum_ij += choose2(table[i][j]);
            row += table[i][j];
        }
        sum_a += choose2(row);
    }
    for (int j = 0; j < kb; ++j) {
        double col = 0;
        for (int i = 0; i < ka; ++i) col += table[i][j];
        sum_b += choose2(col);
    }
    const double expected = sum_a * sum_b / choose2(static_cast<double>(a.size()));
    return (sum_ij - expected) / (0.5 * (sum_a + sum_b) - expected);
}

/// Minimum within-group sum of squares over all balanced partitions (brute force).
std::vector<int> best_balanced_partition(const std::vector<double>& x, int K) {
    const int n = static_cast<int>(x.size());
    const int size = n / K;
    std::vector<int> labels(n), best;
    for (int i = 0; i < n; ++i) labels[i] = i / size;
    double best_cost = INFINITY;
    do {
        double cost = 0;
        for (int g = 0; g < K; ++g) {
            double m = 0;
            for (int i = 0; i < n; ++i) m += labels[i] == g ? x[i] : 0.0;
            m /= size;
            for (int i = 0; i < n; ++i) cost += labels[i] == g ? (x[i] - m) * (x[i] - m) : 0.0;
        }
        if (cost < best_cost - 1e-12) {
            best_cost = cost;
            best = labels;
        }
    } while (std::next_permutation(labels.begin(), labels.end()));
    return best;
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("gmm recovers separated point masses") {
    MatrixXd masses(2, 2);
    masses << 0.0, 1.0, 2.0, -1.0;
    std::vector<int> truth;
    const MatrixXd pts = noisy_masses(masses, 100, 1e-6, 1, &truth);
    const GmmFit g = fit_gmm(pts, 2);
    CHECK(adjusted_rand_index(g.assignments, truth) == 1.0);
    for (int k = 0; k < 2; ++k) {
        const int at = g.assignments[k * 100];
        CHECK((g.means.row(at) - masses.row(k)).norm() < 1e-3);
    }
    CHECK(g.weights.sum() == doctest::Approx(1.0));
    for (const auto& cov : g.covariances) {
        CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-14);
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
        CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    }
    const KMeansFit km = fit_kmeans(pts, 2);
    CHECK(adjusted_rand_index(km.assignments, g.assignments) == 1.0);
}

TEST_CASE("single component") {
    std::vector<int> truth;
    MatrixXd masses(3, 1);
    masses << 0.0, 1.0, 5.0;
    const MatrixXd pts = noisy_masses(masses, 5, 0.1, 2, &truth);
    const GmmFit g = fit_gmm(pts, 1);
    CHECK((g.means.row(0).transpose() - pts.colwise().mean().transpose()).norm() < 1e-12);
    CHECK(std::all_of(g.assignments.begin(), g.assignments.end(), [](int a) { return a == 0; }));

    const KMeansFit same = fit_kmeans(MatrixXd::Constant(6, 2, 3.0), 1);
    CHECK(same.inertia == doctest::Approx(0.0));
}

TEST_CASE("kmeans on a line") {
    MatrixXd pts(4, 1);
    pts << 0, 0, 1, 1;
    const KMeansFit km = fit_kmeans(pts, 2);
    std::vector<double> means = {km.means(0, 0), km.means(1, 0)};
    std::sort(means.begin(), means.end());
    CHECK(means[0] == doctest::Approx(0.0));
    CHECK(means[1] == doctest::Approx(1.0));
    CHECK(km.assignments[0] == km.assignments[1]);
    CHECK(km.assignments[0] != km.assignments[2]);
}

TEST_CASE("more clusters than points") {
    const MatrixXd pts = MatrixXd::Zero(2, 1);
    CHECK_THROWS_AS(fit_gmm(pts, 3), Error);
    CHECK_THROWS_AS(fit_kmeans(pts, 3), Error);
}

TEST_CASE("em objective never decreases") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    MatrixXd pts(300, 2);
    for (int i = 0; i < 300; ++i) {
        pts(i, 0) = g(rng) + (i % 3) * 1.5;
        pts(i, 1) = g(rng) * 0.5 - (i % 3);
    }
    GmmConfig cfg;
    cfg.n_init = 1;
    const GmmFit fit = fit_gmm(pts, 3, cfg);
    REQUIRE(fit.objective_trace.size() > 2);
    for (size_t i = 1; i < fit.objective_trace.size(); ++i) {
        CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1] - 1e-9 * std::abs(fit.objective_trace[i - 1]));
    }
}

TEST_CASE("gmm recovers separated clusters across seeds") {
    MatrixXd masses(3, 2);
    masses << 0, 0, 1, 0, 0, 1;
    int perfect = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::vector<int> truth;
        const MatrixXd pts = noisy_masses(masses, 40, 0.05, 100 + seed, &truth);
        GmmConfig cfg;
        cfg.seed = seed;
        cfg.n_init = 4;
        perfect += adjusted_rand_index(fit_gmm(pts, 3, cfg).assignments, truth) == 1.0;
    }
    CHECK(perfect == 20);
}

TEST_CASE("diagonal grouping") {
    VectorXd d(4);
    d << 3.75, 3.75, 2.5, 2.5;
    CHECK(cluster_diagonal(d, 2) == std::vector<int>{0, 0, 1, 1});

    VectorXd flat = VectorXd::Constant(4, 1.0);
    CHECK(cluster_diagonal(flat, 1) == std::vector<int>{0, 0, 0, 0});

    d << 5.1, 1.0, 5.0, 1.1;
    const std::vector<int> labels = cluster_diagonal(d, 2);
    CHECK(adjusted_rand_index(labels, best_balanced_partition({5.1, 1.0, 5.0, 1.1}, 2)) == 1.0);
    CHECK(labels == std::vector<int>{0, 1, 0, 1});

    CHECK_THROWS_AS(cluster_diagonal(VectorXd::Ones(5), 2), Error);
}

TEST_CASE("diagonal grouping is order invariant") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(8);
        for (double& v : x) v = u(rng);
        VectorXd d = Eigen::Map<VectorXd>(x.data(), 8);
        const std::vector<int> base = cluster_diagonal(d, 4);
        std::vector<int> perm(8);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        VectorXd shuffled(8);
        for (int i = 0; i < 8; ++i) shuffled[i] = d[perm[i]];
        const std::vector<int> moved = cluster_diagonal(shuffled, 4);
        for (int i = 0; i < 8; ++i) CHECK(moved[i] == base[perm[i]]);
        CHECK(adjusted_rand_index(base, best_balanced_partition(x, 4)) == doctest::Approx(1.0));
    }
}

TEST_CASE("adjusted rand index") {
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
    CHECK(adjusted_rand_index({0, 0, 1, 1}, {1, 1, 0, 0}) == 1.0);
    const std::vector<int> a = {0, 0, 1, 1}, b = {0, 1, 0, 1};
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(ari_by_formula(a, b)));
    CHECK(adjusted_rand_index(a, b) == doctest::Approx(-0.5));
    CHECK_THROWS_AS(adjusted_rand_index({0, 1}, {0}), Error);

    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> lab(0, 3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<int> x(50), y(50);
        for (int i = 0; i < 50; ++i) {
            x[i] = lab(rng);
            y[i] = lab(rng);
        }
        const double v = adjusted_rand_index(x, y);
        CHECK(v == doctest::Approx(ari_by_formula(x, y)).epsilon(1e-12));
        std::vector<int> relabeled(50);
        for (int i = 0; i < 50; ++i) relabeled[i] = (x[i] + 1) % 4;
        CHECK(adjusted_rand_index(relabeled, y) == doctest::Approx(v).epsilon(1e-12));
    }
}

}
