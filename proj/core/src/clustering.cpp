#include "sbmcov/clustering.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include "sbmcov/error.hpp"
#include "sbmcov/random.hpp"

namespace sbmcov {

namespace {

void check_sizes(const MatrixXd& points, int K) {
    if (K < 1) fail(ErrorKind::InvalidInput, "K must be positive");
    if (K > points.rows()) fail(ErrorKind::InvalidInput, "K exceeds the number of points");
    if (!points.allFinite()) fail(ErrorKind::InvalidInput, "points must be finite");
}

MatrixXd kmeanspp_seed(const MatrixXd& x, int K, std::mt19937_64& rng) {
    const Eigen::Index n = x.rows();
    MatrixXd centers(K, x.cols());
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    centers.row(0) = x.row(pick(rng));
    VectorXd dist = (x.rowwise() - centers.row(0)).rowwise().squaredNorm();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int k = 1; k < K; ++k) {
        const double total = dist.sum();
        Eigen::Index chosen = 0;
        if (total <= 0.0) {
            chosen = pick(rng);
        } else {
            double u = unif(rng) * total;
            for (chosen = 0; chosen < n - 1; ++chosen) {
                u -= dist[chosen];
                if (u <= 0.0) break;
            }
        }
        centers.row(k) = x.row(chosen);
        dist = dist.cwiseMin((x.rowwise() - centers.row(k)).rowwise().squaredNorm());
    }
    return centers;
}

KMeansFit lloyd(const MatrixXd& x, MatrixXd centers, int max_iter) {
    const Eigen::Index n = x.rows();
    const int K = static_cast<int>(centers.rows());
    std::vector<int> labels(n, -1);
    VectorXd best_dist(n);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i) {
            int arg = 0;
            double best = std::numeric_limits<double>::infinity();
            for (int k = 0; k < K; ++k) {
                const double dist = (x.row(i) - centers.row(k)).squaredNorm();
                if (dist < best) {
                    best = dist;
                    arg = k;
                }
            }
            best_dist[i] = best;
            if (labels[i] != arg) {
                labels[i] = arg;
                changed = true;
            }
        }
        MatrixXd sums = MatrixXd::Zero(K, x.cols());
        std::vector<Eigen::Index> counts(K, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(labels[i]) += x.row(i);
            ++counts[labels[i]];
        }
        for (int k = 0; k < K; ++k) {
            if (counts[k] > 0) {
                centers.row(k) = sums.row(k) / static_cast<double>(counts[k]);
                continue;
            }
            // Empty cluster: reseed from the point farthest from its center.
            Eigen::Index far = 0;
            best_dist.maxCoeff(&far);
            centers.row(k) = x.row(far);
            best_dist[far] = 0.0;
            labels[far] = k;
            changed = true;
        }
        if (!changed) break;
    }
    KMeansFit fit;
    fit.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        fit.inertia += (x.row(i) - centers.row(labels[i])).squaredNorm();
    }
    fit.means = std::move(centers);
    fit.assignments = std::move(labels);
    return fit;
}

struct EmRun {
    GmmFit fit;
    double objective = -std::numeric_limits<double>::infinity();
    bool ok = false;
};

/// Log-densities of every point under every component; false if a covariance
/// is not positive definite.
bool log_densities(const MatrixXd& x, const GmmFit& g, MatrixXd& logp) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    constexpr double kLog2Pi = 1.8378770664093453;
    logp.resize(n, g.K);
    for (int k = 0; k < g.K; ++k) {
        Eigen::LLT<MatrixXd> llt(g.covariances[k]);
        if (llt.info() != Eigen::Success) return false;
        const MatrixXd& L = llt.matrixL();
        double logdet = 0.0;
        for (Eigen::Index j = 0; j < d; ++j) logdet += 2.0 * std::log(L(j, j));
        if (!std::isfinite(logdet)) return false;
        MatrixXd centered = (x.rowwise() - g.means.row(k)).transpose();
        llt.matrixL().solveInPlace(centered);
        const VectorXd maha = centered.colwise().squaredNorm().transpose();
        logp.col(k) = (-0.5 * (d * kLog2Pi + logdet) - 0.5 * maha.array()).matrix();
        logp.col(k).array() += std::log(g.weights[k]);
    }
    return true;
}

EmRun run_em(const MatrixXd& x, int K, const std::vector<int>& init_labels, double ridge,
             const GmmConfig& cfg) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    // Ridge enters as a fixed prior term -c/2 tr(Sigma_k^{-1}); its maximizer adds c/N_k to
    // each diagonal, which is ridge for balanced components, and keeps EM monotone.
    const double c = ridge * static_cast<double>(n) / K;
    MatrixXd resp = MatrixXd::Zero(n, K);
    for (Eigen::Index i = 0; i < n; ++i) resp(i, init_labels[i]) = 1.0;

    EmRun run;
    GmmFit& g = run.fit;
    g.K = K;
    g.means.resize(K, d);
    g.covariances.assign(K, MatrixXd::Zero(d, d));
    g.weights.resize(K);
    MatrixXd logp;
    double previous = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < cfg.max_iter; ++iter) {
        // M-step.
        for (int k = 0; k < K; ++k) {
            const double nk = resp.col(k).sum();
            if (!(nk > 1e-8)) return run;
            g.weights[k] = nk / n;
            g.means.row(k) = (resp.col(k).transpose() * x) / nk;
            const MatrixXd centered = x.rowwise() - g.means.row(k);
            g.covariances[k] = (centered.transpose() * resp.col(k).asDiagonal() * centered) / nk;
            g.covariances[k].diagonal().array() += c / nk;
        }
        // E-step.
        if (!log_densities(x, g, logp)) return run;
        double loglik = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double mx = logp.row(i).maxCoeff();
            const double lse = mx + std::log((logp.row(i).array() - mx).exp().sum());
            resp.row(i) = (logp.row(i).array() - lse).exp().matrix();
            loglik += lse;
        }
        double penalty = 0.0;
        for (int k = 0; k < K; ++k) {
            penalty += 0.5 * c * g.covariances[k].inverse().trace();
        }
        const double objective = loglik - penalty;
        if (!std::isfinite(objective)) return run;
        g.objective_trace.push_back(objective);
        g.loglik = loglik;
        g.iterations = iter + 1;
        run.objective = objective;
        if (std::abs(objective - previous) <= cfg.tol * std::max(1.0, std::abs(objective))) break;
        previous = objective;
    }
    g.assignments.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index arg = 0;
        logp.row(i).maxCoeff(&arg);
        g.assignments[i] = static_cast<int>(arg);
    }
    run.ok = true;
    return run;
}

}  // namespace

GmmFit fit_gmm(const MatrixXd& points, int K, const GmmConfig& config) {
    check_sizes(points, K);
    const Eigen::Index d = points.cols();
    const MatrixXd centered = points.rowwise() - points.colwise().mean();
    const double trace = centered.colwise().squaredNorm().sum() / static_cast<double>(points.rows());
    double ridge = config.reg * trace / static_cast<double>(d);
    if (!(ridge > 0)) ridge = config.reg;

    const int inits = std::max(1, config.n_init);
    std::vector<KMeansFit> starts;
    for (int r = 0; r < std::max(inits, config.screen); ++r) {
        std::mt19937_64 rng(derive_seed(config.seed, r));
        starts.push_back(lloyd(points, kmeanspp_seed(points, K, rng), 100));
    }
    std::stable_sort(starts.begin(), starts.end(),
                     [](const KMeansFit& a, const KMeansFit& b) { return a.inertia < b.inertia; });

    EmRun best;
    std::vector<const KMeansFit*> used;
    for (const KMeansFit& start : starts) {
        if (static_cast<int>(used.size()) == inits) break;
        const bool repeat = std::any_of(used.begin(), used.end(), [&](const KMeansFit* u) {
            return adjusted_rand_index(u->assignments, start.assignments) == 1.0;
        });
        if (repeat) continue;
        used.push_back(&start);
        EmRun run = run_em(points, K, start.assignments, ridge, config);
        if (run.ok && run.objective > best.objective) best = std::move(run);
    }
    if (!best.ok) {
        fail(ErrorKind::NumericalFailure, "every EM initialization collapsed a mixture component");
    }
    return std::move(best.fit);
}

KMeansFit fit_kmeans(const MatrixXd& points, int K, const KMeansConfig& config) {
    check_sizes(points, K);
    KMeansFit best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, config.n_init); ++r) {
        std::mt19937_64 rng(derive_seed(config.seed, r));
        KMeansFit fit = lloyd(points, kmeanspp_seed(points, K, rng), config.max_iter);
        if (fit.inertia < best.inertia) best = std::move(fit);
    }
    return best;
}

std::vector<int> cluster_diagonal(const VectorXd& diag, int K) {
    const Eigen::Index kt = diag.size();
    if (K < 1 || kt == 0 || kt % K != 0) {
        fail(ErrorKind::InvalidInput, "diagonal length must be a positive multiple of K");
    }
    const Eigen::Index group = kt / K;
    std::vector<int> order(kt);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return diag[a] > diag[b]; });
    std::vector<int> labels(kt);
    for (Eigen::Index r = 0; r < kt; ++r) labels[order[r]] = static_cast<int>(r / group);
    return labels;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) fail(ErrorKind::InvalidInput, "label vectors differ in length");
    const double n = static_cast<double>(a.size());
    if (a.size() < 2) return 1.0;
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> rows, cols;
    for (size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        rows[a[i]] += 1;
        cols[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [key, v] : joint) index += c2(v);
    for (const auto& [key, v] : rows) sa += c2(v);
    for (const auto& [key, v] : cols) sb += c2(v);
    const double expected = sa * sb / c2(n);
    const double maximum = 0.5 * (sa + sb);
    if (maximum == expected) return 1.0;
    return (index - expected) / (maximum - expected);
}

}  // namespace sbmcov
