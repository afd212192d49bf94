#include "sbmcov/estimator.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "sbmcov/error.hpp"
#include "sbmcov/inference.hpp"

namespace sbmcov {

namespace {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double lap() {
        const auto now = std::chrono::steady_clock::now();
        const double s = std::chrono::duration<double>(now - start_).count();
        start_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point start_;
};

// Constant added by degree regularization, known exactly and removed from theta.
double operator_shift(const SymmetricOperator& op) {
    const auto* a = dynamic_cast<const AdjacencyOperator*>(&op);
    return a ? a->shift() : 0.0;
}

int pattern_of(const std::vector<int>& z) {
    int p = 0;
    for (size_t j = 0; j < z.size(); ++j) p += z[j] << j;
    return p;
}

std::vector<int> cluster_rows(const MatrixXd& Y, int k, const FitOptions& opts, MatrixXd& centroids) {
    if (opts.cluster == ClusterMethod::KMeans) {
        KMeansFit km = fit_kmeans(Y, k, opts.kmeans);
        centroids = km.means;
        return km.assignments;
    }
    GmmFit g = fit_gmm(Y, k, opts.gmm);
    centroids = g.means;
    return g.assignments;
}

void check_covariates(const std::vector<std::vector<int>>& z, Eigen::Index n) {
    for (size_t c = 0; c < z.size(); ++c) {
        if (static_cast<Eigen::Index>(z[c].size()) != n) {
            fail(ErrorKind::InvalidInput, "covariate " + std::to_string(c) + " has the wrong length");
        }
        long ones = 0;
        for (int v : z[c]) {
            if (v != 0 && v != 1) fail(ErrorKind::InvalidInput, "covariate values must be 0 or 1");
            ones += v;
        }
        if (ones == 0 || ones == n) {
            fail(ErrorKind::InvalidInput, "covariate " + std::to_string(c) + " is constant over nodes");
        }
    }
}

/// Dimension selection and embedding (step 1).
Embedding embed_step(const SymmetricOperator& op, int ktilde, const FitOptions& opts, VectorXd& spectrum) {
    const Eigen::Index n = op.size();
    if (opts.d || opts.dim_rule == DimensionRule::Ktilde) {
        const int d = opts.d ? *opts.d : static_cast<int>(std::min<Eigen::Index>(ktilde, n));
        const EigenSelection sel = top_eigenpairs(op, d, opts.eigen);
        spectrum = sel.values;
        return embedding_from(sel, d);
    }
    const int max_d = opts.max_d > 0 ? static_cast<int>(std::min<Eigen::Index>(opts.max_d, n))
                                     : default_max_dim(n, ktilde);
    const EigenSelection sel = top_eigenpairs(op, std::max(max_d, 2), opts.eigen);
    spectrum = sel.values;
    int d = select_dimension(sel.values, std::max(max_d, 2));
    if (opts.dim_rule == DimensionRule::ElbowPlusOne) d = std::min(d + 1, static_cast<int>(sel.values.size()));
    return embedding_from(sel, d);
}

void check_blocks(const BlockFit& bf) {
    for (int k = 0; k < bf.Ktilde; ++k) {
        if (bf.sizes[k] == 0) fail(ErrorKind::DegenerateFit, "expanded block " + std::to_string(k) + " is empty");
    }
}

void attach_inference(FitResult& r, const FitOptions& opts) {
    auto unavailable = [&] {
        for (auto* list : {&r.simple, &r.weighted}) {
            for (auto& b : *list) b.bias_hat = b.se_hat = b.diagonal_bias_hat = std::numeric_limits<double>::quiet_NaN();
        }
    };
    if (!opts.compute_se) {
        unavailable();
        return;
    }
    auto fill = [&](std::vector<BetaEstimate>& list, const SbmMoments& m) {
        for (auto& b : list) {
            const BetaInference inf = beta_se(m, b.pairs_used, r.block.link, r.block.n, r.block.rho);
            b.bias_hat = inf.bias_hat;
            b.se_hat = inf.se_hat;
            b.diagonal_bias_hat = inf.hollow_beta / r.block.n;
        }
    };
    try {
        SbmMoments m = plugin_moments(r.block);
        if (opts.regime == Regime::Sparse) m = sparse_moments(m);
        fill(r.simple, m);
        fill(r.weighted, m);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NumericalFailure && e.kind() != ErrorKind::InvalidInput) throw;
        unavailable();
    }
}

void run_estimators(FitResult& r, const FitOptions& opts, int count, const std::vector<PairMode>& modes) {
    for (int c = 0; c < count; ++c) {
        const int cov = modes[c] == PairMode::Shared ? c : 0;
        if (opts.estimator != EstimatorChoice::Weighted) r.simple.push_back(beta_simple_mean(r.block, cov, modes[c]));
        if (opts.estimator != EstimatorChoice::Simple) r.weighted.push_back(beta_weighted_mean(r.block, cov, modes[c]));
    }
}

}  // namespace

EstimatorChoice parse_estimator(const std::string& name) {
    if (name == "both") return EstimatorChoice::Both;
    if (name == "simple") return EstimatorChoice::Simple;
    if (name == "weighted") return EstimatorChoice::Weighted;
    fail(ErrorKind::ConfigError, "unknown estimator '" + name + "' (expected both|simple|weighted)");
}

DimensionRule parse_dimension_rule(const std::string& name) {
    if (name == "elbow") return DimensionRule::Elbow;
    if (name == "elbow+1") return DimensionRule::ElbowPlusOne;
    if (name == "ktilde") return DimensionRule::Ktilde;
    fail(ErrorKind::ConfigError, "unknown dimension rule '" + name + "' (expected elbow|elbow+1|ktilde)");
}

std::string to_string(BetaVariant v) {
    switch (v) {
        case BetaVariant::SimpleMean: return "SimpleMean";
        case BetaVariant::WeightedMean: return "WeightedMean";
        case BetaVariant::SinglePair: return "SinglePair";
    }
    return "Unknown";
}

std::vector<std::vector<int>> majority_labels(const BlockFit& bf) {
    std::vector<std::vector<int>> z(bf.Ktilde, std::vector<int>(bf.covariates, 0));
    for (int k = 0; k < bf.Ktilde; ++k) {
        for (int c = 0; c < bf.covariates; ++c) z[k][c] = 2 * bf.ones[c][k] > bf.sizes[k] ? 1 : 0;
    }
    return z;
}

BlockFit block_fit_from(const Embedding& e, const std::vector<int>& xi, const MatrixXd& centroids,
                        const std::vector<std::vector<int>>& z, int K, const FitOptions& opts,
                        double shift) {
    BlockFit bf;
    bf.n = static_cast<int>(xi.size());
    bf.K = K;
    bf.covariates = static_cast<int>(z.size());
    bf.Ktilde = static_cast<int>(centroids.rows());
    bf.d_hat = static_cast<int>(e.Y.cols());
    bf.signature = e.signature;
    bf.eigenvalues = e.values;
    bf.link = opts.link;
    bf.rho = opts.rho.value_or(1.0);
    if (bf.Ktilde % K != 0) fail(ErrorKind::InvalidInput, "Ktilde must be a multiple of K");

    bf.sizes.assign(bf.Ktilde, 0);
    bf.ones.assign(bf.covariates, std::vector<long>(bf.Ktilde, 0));
    for (int i = 0; i < bf.n; ++i) {
        ++bf.sizes[xi[i]];
        for (int c = 0; c < bf.covariates; ++c) bf.ones[c][xi[i]] += z[c][i];
    }
    const VectorXd metric = e.signature.diagonal();
    MatrixXd theta = (centroids * metric.asDiagonal() * centroids.transpose()).array() - shift;
    theta /= bf.rho;
    const double lo = opts.clip_epsilon;
    const double hi = 1.0 - opts.clip_epsilon;
    bf.clip_count = 0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        double& v = theta.data()[i];
        if (v < lo || v > hi) {
            v = std::clamp(v, lo, hi);
            ++bf.clip_count;
        }
    }
    MatrixXd B = theta.unaryExpr([&](double p) { return opts.link.inverse(p); });
    bf.z_theta.clear();
    bf.mu = centroids;
    bf.theta_Z = theta;
    bf.B_Z = B;
    auto z_theta = majority_labels(bf);
    const auto psi = cluster_diagonal(B.diagonal(), K);

    // Canonical order: latent group, then covariate pattern.
    std::vector<int> order(bf.Ktilde);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (psi[a] != psi[b]) return psi[a] < psi[b];
        return pattern_of(z_theta[a]) < pattern_of(z_theta[b]);
    });
    std::vector<int> rank(bf.Ktilde);
    for (int r = 0; r < bf.Ktilde; ++r) rank[order[r]] = r;
    bf.mu.resize(centroids.rows(), centroids.cols());
    bf.psi.resize(bf.Ktilde);
    bf.z_theta.resize(bf.Ktilde);
    std::vector<long> sizes(bf.Ktilde);
    std::vector<std::vector<long>> ones(bf.covariates, std::vector<long>(bf.Ktilde));
    for (int r = 0; r < bf.Ktilde; ++r) {
        const int k = order[r];
        bf.mu.row(r) = centroids.row(k);
        bf.psi[r] = psi[k];
        bf.z_theta[r] = z_theta[k];
        sizes[r] = bf.sizes[k];
        for (int c = 0; c < bf.covariates; ++c) ones[c][r] = bf.ones[c][k];
        for (int s = 0; s < bf.Ktilde; ++s) {
            bf.theta_Z(r, s) = theta(k, order[s]);
            bf.B_Z(r, s) = B(k, order[s]);
        }
    }
    bf.sizes = std::move(sizes);
    bf.ones = std::move(ones);
    bf.xi.resize(bf.n);
    for (int i = 0; i < bf.n; ++i) bf.xi[i] = rank[xi[i]];
    return bf;
}

std::vector<PairTerm> simple_mean_pairs(const BlockFit& bf, int c, PairMode mode) {
    std::vector<PairTerm> out;
    const auto& z = bf.z_theta;
    for (int k = 0; k < bf.Ktilde; ++k) {
        for (int l = 0; l < bf.Ktilde; ++l) {
            for (int lp = 0; lp < bf.Ktilde; ++lp) {
                if (l == lp || bf.psi[l] != bf.psi[lp]) continue;
                bool ok = false;
                if (mode == PairMode::Shared) {
                    ok = z[k][c] == z[l][c] && z[k][c] != z[lp][c];
                    for (int o = 0; ok && o < bf.covariates; ++o) {
                        if (o != c) ok = (z[k][o] == z[l][o]) == (z[k][o] == z[lp][o]);
                    }
                } else {
                    const int v = mode == PairMode::DifferentialZero ? 0 : 1;
                    ok = z[k][0] == v && z[l][0] == v && z[lp][0] != v;
                }
                if (ok) out.push_back({k, l, lp, 1.0});
            }
        }
    }
    for (auto& t : out) t.weight = 1.0 / static_cast<double>(out.size());
    return out;
}

double pair_weight(const BlockFit& bf, int c, int k, int l, int lp, PairMode mode) {
    const auto& n1 = bf.ones[c];
    const double nk = bf.sizes[k], nl = bf.sizes[l], nlp = bf.sizes[lp];
    const double a = (nk - n1[k]) * (nl - n1[l]) * n1[lp];
    const double b = n1[k] * n1[l] * (nlp - n1[lp]);
    double num = a + b;
    if (mode == PairMode::DifferentialZero) num = a;
    if (mode == PairMode::DifferentialOne) num = b;
    return num / (nk * nl * nlp);
}

std::vector<PairTerm> weighted_mean_pairs(const BlockFit& bf, int c, PairMode mode) {
    std::vector<PairTerm> out;
    const auto& z = bf.z_theta;
    double total = 0.0;
    for (int k = 0; k < bf.Ktilde; ++k) {
        for (int l = 0; l < bf.Ktilde; ++l) {
            for (int lp = 0; lp < bf.Ktilde; ++lp) {
                if (l == lp || bf.psi[l] != bf.psi[lp]) continue;
                bool same_other = true;
                for (int o = 0; o < bf.covariates; ++o) {
                    if (o != c) same_other = same_other && z[l][o] == z[lp][o];
                }
                if (!same_other || z[l][c] == z[lp][c]) continue;
                const double w = pair_weight(bf, c, k, l, lp, mode);
                if (w > 0) {
                    out.push_back({k, l, lp, w});
                    total += w;
                }
            }
        }
    }
    for (auto& t : out) t.weight /= total;
    return out;
}

double evaluate_pairs(const MatrixXd& B, const std::vector<PairTerm>& pairs) {
    double v = 0.0;
    for (const auto& t : pairs) v += t.weight * (B(t.k, t.l) - B(t.k, t.lp));
    return v;
}

BetaEstimate beta_simple_mean(const BlockFit& bf, int covariate, PairMode mode) {
    if (covariate < 0 || covariate >= bf.covariates) fail(ErrorKind::InvalidInput, "no such covariate");
    BetaEstimate est;
    est.variant = BetaVariant::SimpleMean;
    est.covariate = mode == PairMode::DifferentialOne ? 1 : covariate;
    est.pairs_used = simple_mean_pairs(bf, covariate, mode);
    if (est.pairs_used.empty()) {
        fail(ErrorKind::DegenerateFit, "simple-mean pair set is empty for covariate " + std::to_string(covariate));
    }
    est.value = evaluate_pairs(bf.B_Z, est.pairs_used);
    return est;
}

BetaEstimate beta_weighted_mean(const BlockFit& bf, int covariate, PairMode mode) {
    if (covariate < 0 || covariate >= bf.covariates) fail(ErrorKind::InvalidInput, "no such covariate");
    BetaEstimate est;
    est.variant = BetaVariant::WeightedMean;
    est.covariate = mode == PairMode::DifferentialOne ? 1 : covariate;
    est.pairs_used = weighted_mean_pairs(bf, covariate, mode);
    if (est.pairs_used.empty()) {
        fail(ErrorKind::DegenerateFit, "weighted-mean pair set is empty for covariate " + std::to_string(covariate));
    }
    est.value = evaluate_pairs(bf.B_Z, est.pairs_used);
    return est;
}

LatentPositions recover_latent_positions(const BlockFit& bf, std::optional<int> dim) {
    const int K = bf.K;
    MatrixXd sum = MatrixXd::Zero(K, K);
    MatrixXd count = MatrixXd::Zero(K, K);
    for (int k = 0; k < bf.Ktilde; ++k) {
        for (int l = 0; l < bf.Ktilde; ++l) {
            bool all_differ = true;
            for (int c = 0; c < bf.covariates; ++c) all_differ = all_differ && bf.z_theta[k][c] != bf.z_theta[l][c];
            if (!all_differ) continue;
            sum(bf.psi[k], bf.psi[l]) += bf.B_Z(k, l);
            count(bf.psi[k], bf.psi[l]) += 1;
        }
    }
    if ((count.array() == 0).any()) {
        fail(ErrorKind::DegenerateFit, "no covariate-free entry for some pair of latent blocks");
    }
    LatentPositions out;
    const MatrixXd raw = sum.cwiseQuotient(count);
    out.submatrix = 0.5 * (raw + raw.transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.submatrix);
    VectorXd vals = eig.eigenvalues();
    std::vector<int> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (std::abs(vals[a]) != std::abs(vals[b])) return std::abs(vals[a]) > std::abs(vals[b]);
        return vals[a] > vals[b];
    });
    EigenSelection sel;
    sel.values.resize(K);
    sel.vectors.resize(K, K);
    for (int i = 0; i < K; ++i) {
        sel.values[i] = vals[order[i]];
        sel.vectors.col(i) = eig.eigenvectors().col(order[i]);
        Eigen::Index arg = 0;
        sel.vectors.col(i).cwiseAbs().maxCoeff(&arg);
        if (sel.vectors(arg, i) < 0) sel.vectors.col(i) *= -1.0;
    }
    int d = 1;
    if (dim) {
        d = std::clamp(*dim, 1, K);
    } else if (K >= 2) {
        d = std::min(select_dimension(sel.values, K), K);
    }
    const Embedding e = embedding_from(sel, d);
    out.X = e.Y;
    out.signature = e.signature;
    return out;
}

FitResult fit_operator(const SymmetricOperator& op, const std::vector<std::vector<int>>& z,
                       const FitOptions& opts) {
    Stopwatch watch;
    const Eigen::Index n = op.size();
    if (opts.K < 1) fail(ErrorKind::InvalidInput, "K must be positive");
    check_covariates(z, n);
    const int c = static_cast<int>(z.size());
    const int ktilde = opts.K << c;
    if (ktilde > n) fail(ErrorKind::InvalidInput, "more expanded blocks than nodes");

    FitResult r;
    VectorXd spectrum;
    const Embedding e = embed_step(op, ktilde, opts, spectrum);
    r.timings["embed"] = watch.lap();

    MatrixXd centroids;
    const std::vector<int> xi = cluster_rows(e.Y, ktilde, opts, centroids);
    r.timings["cluster"] = watch.lap();

    r.block = block_fit_from(e, xi, centroids, z, opts.K, opts, operator_shift(op));
    r.block.eigenvalues = spectrum;
    check_blocks(r.block);
    run_estimators(r, opts, c, std::vector<PairMode>(c, PairMode::Shared));
    const LatentPositions lp = recover_latent_positions(r.block, opts.latent_dim);
    r.latent_positions = lp.X;
    r.latent_signature = lp.signature;
    r.timings["estimate"] = watch.lap();

    attach_inference(r, opts);
    r.timings["inference"] = watch.lap();
    return r;
}

FitResult fit_matrix(const MatrixXd& a, const std::vector<std::vector<int>>& z, const FitOptions& opts) {
    return fit_operator(DenseOperator(a), z, opts);
}

namespace {

std::vector<std::vector<int>> covariate_values(const Graph& graph, const std::vector<std::string>& names) {
    std::vector<std::vector<int>> z;
    for (const auto& name : names) {
        const auto& col = graph.column(name);
        std::vector<int> v(graph.n);
        for (int i = 0; i < graph.n; ++i) {
            if (!col.values[i]) {
                fail(ErrorKind::InvalidInput, "covariate '" + name + "' is missing for node " +
                                                  std::to_string(graph.node_ids[i]) + "; drop missing nodes first");
            }
            v[i] = *col.values[i];
        }
        z.push_back(std::move(v));
    }
    return z;
}

}  // namespace

FitResult fit(const Graph& graph, const FitOptions& opts) {
    if (graph.n == 0) fail(ErrorKind::EmptyGraph, "graph has no nodes");
    const auto z = covariate_values(graph, opts.covariates);
    const Adjacency adj = graph.adjacency();
    const AdjacencyOperator op = opts.regularize ? regularize_degrees(adj, *opts.regularize) : adj.op();
    return fit_operator(op, z, opts);
}

FitResult fit_multi_covariate(const Graph& graph, const FitOptions& opts) {
    if (opts.covariates.size() != 2) fail(ErrorKind::InvalidInput, "fit_multi_covariate needs two covariates");
    return fit(graph, opts);
}

namespace {

/// Minimum-cost perfect matching on a square cost matrix (Hungarian method).
std::vector<int> hungarian(const MatrixXd& cost) {
    const int n = static_cast<int>(cost.rows());
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(n);
    for (int j = 1; j <= n; ++j) match[p[j] - 1] = j - 1;
    return match;
}

using SubEmbed = std::function<Embedding(const std::vector<int>&)>;

FitResult differential_core(const SymmetricOperator& full, const std::vector<int>& z, const SubEmbed& sub_embed,
                            const FitOptions& opts) {
    Stopwatch watch;
    const Eigen::Index n = full.size();
    check_covariates({z}, n);
    const int K = opts.K;
    std::vector<int> nodes[2];
    for (int i = 0; i < n; ++i) nodes[z[i]].push_back(i);
    FitResult r;
    std::vector<int> labels[2];
    for (int v = 0; v < 2; ++v) {
        if (static_cast<int>(nodes[v].size()) < std::max(2 * K, K * 2)) {
            fail(ErrorKind::InvalidInput, "subgraph with Z=" + std::to_string(v) + " is too small");
        }
        const Embedding e = sub_embed(nodes[v]);
        if (static_cast<Eigen::Index>(nodes[v].size()) < K * (e.Y.cols() + 1)) {
            fail(ErrorKind::InvalidInput, "subgraph with Z=" + std::to_string(v) + " is too small");
        }
        MatrixXd cent;
        labels[v] = cluster_rows(e.Y, K, opts, cent);
    }
    r.timings["subgraphs"] = watch.lap();

    VectorXd spectrum;
    const Embedding e = embed_step(full, 2 * K, opts, spectrum);
    r.timings["embed"] = watch.lap();

    // Block means of the full embedding per (Z, subgraph label).
    const Eigen::Index d = e.Y.cols();
    MatrixXd means[2];
    for (int v = 0; v < 2; ++v) {
        means[v] = MatrixXd::Zero(K, d);
        std::vector<long> cnt(K, 0);
        for (size_t t = 0; t < nodes[v].size(); ++t) {
            means[v].row(labels[v][t]) += e.Y.row(nodes[v][t]);
            ++cnt[labels[v][t]];
        }
        for (int k = 0; k < K; ++k) {
            if (cnt[k] == 0) fail(ErrorKind::DegenerateFit, "subgraph block is empty");
            means[v].row(k) /= static_cast<double>(cnt[k]);
        }
    }
    // Align Z=1 blocks to Z=0 blocks: scores toward the Z=0 blocks differ only by a constant.
    const VectorXd metric = e.signature.diagonal();
    auto to_score = [&](double p) {
        return opts.link.inverse(std::clamp(p, opts.clip_epsilon, 1.0 - opts.clip_epsilon));
    };
    const MatrixXd w00 = (means[0] * metric.asDiagonal() * means[0].transpose()).unaryExpr(to_score);
    const MatrixXd w01 = (means[0] * metric.asDiagonal() * means[1].transpose()).unaryExpr(to_score);
    MatrixXd cost(K, K);
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
            VectorXd diff = w00.row(a).transpose() - w01.col(b);
            diff.array() -= diff.mean();
            cost(a, b) = diff.squaredNorm();
        }
    }
    const std::vector<int> match = hungarian(cost);
    std::vector<int> inverse(K);
    for (int a = 0; a < K; ++a) inverse[match[a]] = a;

    std::vector<int> xi(n);
    for (size_t t = 0; t < nodes[0].size(); ++t) xi[nodes[0][t]] = 2 * labels[0][t];
    for (size_t t = 0; t < nodes[1].size(); ++t) xi[nodes[1][t]] = 2 * inverse[labels[1][t]] + 1;
    MatrixXd centroids = MatrixXd::Zero(2 * K, d);
    std::vector<long> cnt(2 * K, 0);
    for (int i = 0; i < n; ++i) {
        centroids.row(xi[i]) += e.Y.row(i);
        ++cnt[xi[i]];
    }
    for (int k = 0; k < 2 * K; ++k) centroids.row(k) /= static_cast<double>(std::max(cnt[k], 1L));
    r.timings["cluster"] = watch.lap();

    const double shift = operator_shift(full);
    r.block = block_fit_from(e, xi, centroids, {z}, K, opts, shift);
    // Latent groups come from the subgraph labels rather than the diagonal.
    std::vector<int> order(2 * K);
    for (int k = 0; k < 2 * K; ++k) order[k] = k;
    BlockFit& bf = r.block;
    {
        MatrixXd theta = (centroids * metric.asDiagonal() * centroids.transpose()).array() - shift;
        theta /= bf.rho;
        bf.clip_count = 0;
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            double& v = theta.data()[i];
            if (v < opts.clip_epsilon || v > 1.0 - opts.clip_epsilon) {
                v = std::clamp(v, opts.clip_epsilon, 1.0 - opts.clip_epsilon);
                ++bf.clip_count;
            }
        }
        bf.mu = centroids;
        bf.theta_Z = theta;
        bf.B_Z = theta.unaryExpr([&](double p) { return opts.link.inverse(p); });
        bf.xi = xi;
        bf.sizes.assign(2 * K, 0);
        bf.ones.assign(1, std::vector<long>(2 * K, 0));
        for (int i = 0; i < n; ++i) {
            ++bf.sizes[xi[i]];
            bf.ones[0][xi[i]] += z[i];
        }
        bf.psi.resize(2 * K);
        bf.z_theta.assign(2 * K, std::vector<int>(1));
        for (int k = 0; k < 2 * K; ++k) {
            bf.psi[k] = k / 2;
            bf.z_theta[k][0] = k % 2;
        }
    }
    bf.eigenvalues = spectrum;
    check_blocks(bf);
    run_estimators(r, opts, 2, {PairMode::DifferentialZero, PairMode::DifferentialOne});
    const LatentPositions lp = recover_latent_positions(bf, opts.latent_dim);
    r.latent_positions = lp.X;
    r.latent_signature = lp.signature;
    r.timings["estimate"] = watch.lap();
    attach_inference(r, opts);
    r.timings["inference"] = watch.lap();
    return r;
}

FitOptions subgraph_options(const FitOptions& opts) {
    FitOptions sub = opts;
    sub.d = opts.subgraph_d;
    sub.max_d = 0;
    return sub;
}

}  // namespace

FitResult fit_differential_homophily(const Graph& graph, const FitOptions& opts) {
    if (opts.covariates.size() != 1) fail(ErrorKind::InvalidInput, "differential homophily needs one covariate");
    if (graph.n == 0) fail(ErrorKind::EmptyGraph, "graph has no nodes");
    const auto z = covariate_values(graph, opts.covariates);
    const Adjacency adj = graph.adjacency();
    const AdjacencyOperator op = opts.regularize ? regularize_degrees(adj, *opts.regularize) : adj.op();
    const FitOptions sub = subgraph_options(opts);
    auto sub_embed = [&](const std::vector<int>& nodes) {
        const Graph g = induced_subgraph(graph, nodes);
        const Adjacency a = g.adjacency();
        const AdjacencyOperator o = opts.regularize ? regularize_degrees(a, *opts.regularize) : a.op();
        VectorXd spectrum;
        return embed_step(o, opts.K, sub, spectrum);
    };
    return differential_core(op, z[0], sub_embed, opts);
}

FitResult fit_differential_matrix(const MatrixXd& a, const std::vector<int>& z, const FitOptions& opts) {
    const FitOptions sub = subgraph_options(opts);
    auto sub_embed = [&](const std::vector<int>& nodes) {
        const Eigen::Index m = static_cast<Eigen::Index>(nodes.size());
        MatrixXd s(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) s(i, j) = a(nodes[i], nodes[j]);
        }
        VectorXd spectrum;
        return embed_step(DenseOperator(s), opts.K, sub, spectrum);
    };
    return differential_core(DenseOperator(a), z, sub_embed, opts);
}

}  // namespace sbmcov
