#include "sbmcov/inference.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <sstream>

#include "sbmcov/error.hpp"

namespace sbmcov {

SbmMoments make_moments(const VectorXd& eta, const MatrixXd& mu, const SignatureMetric& signature,
                        const MatrixXd& theta) {
    const Eigen::Index K = eta.size();
    if (mu.rows() != K || theta.rows() != K || theta.cols() != K || mu.cols() != signature.dim()) {
        fail(ErrorKind::InvalidInput, "moment dimensions are inconsistent");
    }
    SbmMoments m;
    m.eta = eta;
    m.mu = mu;
    m.theta = theta;
    m.signature = signature;
    m.Delta = mu.transpose() * eta.asDiagonal() * mu;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(m.Delta);
    const VectorXd& lam = eig.eigenvalues();
    const double lo = lam.cwiseAbs().minCoeff();
    const double hi = lam.cwiseAbs().maxCoeff();
    m.condition = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lam.minCoeff() > 0) || m.condition > 1e12) {
        std::ostringstream os;
        os << "Delta is singular or ill-conditioned (condition number " << m.condition << ")";
        fail(ErrorKind::NumericalFailure, os.str());
    }
    m.Delta_inv = eig.eigenvectors() * lam.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    m.zeta = mu * m.Delta_inv * mu.transpose();
    m.zeta = 0.5 * (m.zeta + m.zeta.transpose());
    return m;
}

SbmMoments exact_moments(const ExpandedSbm& model) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(model.theta_Z);
    const VectorXd& lam = eig.eigenvalues();
    const double cutoff = 1e-10 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
    std::vector<int> pos, neg;
    for (int i = static_cast<int>(lam.size()) - 1; i >= 0; --i) {
        if (lam[i] > cutoff) pos.push_back(i);
    }
    for (int i = 0; i < lam.size(); ++i) {
        if (lam[i] < -cutoff) neg.push_back(i);
    }
    SignatureMetric sig{static_cast<int>(pos.size()), static_cast<int>(neg.size())};
    MatrixXd mu(model.Ktilde, sig.dim());
    int col = 0;
    for (const auto& group : {pos, neg}) {
        for (int i : group) mu.col(col++) = eig.eigenvectors().col(i) * std::sqrt(std::abs(lam[i]));
    }
    return make_moments(model.eta, mu, sig, model.theta_Z);
}

SbmMoments plugin_moments(const BlockFit& bf) {
    VectorXd eta(bf.Ktilde);
    for (int k = 0; k < bf.Ktilde; ++k) eta[k] = static_cast<double>(bf.sizes[k]) / bf.n;
    return make_moments(eta, bf.mu / std::sqrt(bf.rho), bf.signature, bf.theta_Z);
}

SbmMoments sparse_moments(const SbmMoments& m) {
    SbmMoments s = m;
    s.regime = Regime::Sparse;
    return s;
}

double edge_weight(const SbmMoments& m, int a, int b) {
    const double t = m.theta(a, b);
    return m.regime == Regime::Dense ? t * (1.0 - t) : t;
}

namespace {

MatrixXd weights(const SbmMoments& m) {
    const int K = m.blocks();
    MatrixXd w(K, K);
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) w(a, b) = edge_weight(m, a, b);
    }
    return w;
}

}  // namespace

double bias_psi(const SbmMoments& m, int k, int l) {
    const int K = m.blocks();
    const MatrixXd w = weights(m);
    const MatrixXd G = m.Delta_inv * m.signature.diagonal().asDiagonal() * m.Delta_inv;
    const MatrixXd g = m.mu * G * m.mu.transpose();
    double first = 0.0;
    for (int r = 0; r < K; ++r) first += m.eta[r] * (w(k, r) + w(l, r));
    first *= g(k, l);
    double second = 0.0;
    for (int r = 0; r < K; ++r) {
        for (int s = 0; s < K; ++s) {
            second += m.eta[r] * m.eta[s] * w(s, r) *
                      (g(s, l) * m.zeta(k, s) + g(s, k) * m.zeta(l, s));
        }
    }
    return first - second;
}

double hollow_bias(const SbmMoments& m, int k, int l) {
    double v = -m.zeta(k, l) * (m.theta(k, k) + m.theta(l, l));
    for (int r = 0; r < m.blocks(); ++r) v += m.eta[r] * m.zeta(k, r) * m.theta(r, r) * m.zeta(r, l);
    return v;
}

double variance_sigma2(const SbmMoments& m, int k, int l) {
    const int K = m.blocks();
    const MatrixXd w = weights(m);
    const MatrixXd& z = m.zeta;
    const VectorXd& eta = m.eta;
    if (k == l) {
        double v = 4.0 * w(k, k) * z(k, k) * z(k, k);
        for (int r = 0; r < K; ++r) {
            v += 4.0 * eta[r] * w(k, r) * z(k, r) * z(k, r) * (1.0 / eta[k] - 2.0 * z(k, k));
        }
        for (int r = 0; r < K; ++r) {
            for (int s = 0; s < K; ++s) {
                v += 2.0 * eta[r] * eta[s] * w(r, s) * z(k, r) * z(k, r) * z(k, s) * z(k, s);
            }
        }
        return v;
    }
    double v = (w(k, k) + w(l, l)) * z(k, l) * z(k, l) + 2.0 * w(k, l) * z(k, k) * z(l, l);
    for (int r = 0; r < K; ++r) {
        v += eta[r] * w(k, r) * z(l, r) * z(l, r) * (1.0 / eta[k] - 2.0 * z(k, k));
        v += eta[r] * w(l, r) * z(k, r) * z(k, r) * (1.0 / eta[l] - 2.0 * z(l, l));
        v -= 2.0 * eta[r] * (w(k, r) + w(l, r)) * z(k, r) * z(r, l) * z(k, l);
    }
    for (int r = 0; r < K; ++r) {
        for (int s = 0; s < K; ++s) {
            const double t = z(k, r) * z(l, s) + z(l, r) * z(k, s);
            v += 0.5 * eta[r] * eta[s] * w(r, s) * t * t;
        }
    }
    return v;
}

namespace {

/// Influence of the edge pair (a, b) on theta_hat_kl, summed over both orientations.
MatrixXd influence(const SbmMoments& m, int k, int l) {
    const int K = m.blocks();
    const MatrixXd& z = m.zeta;
    MatrixXd g(K, K);
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) {
            double v = -z(a, k) * z(b, l);
            if (b == k) v += z(a, l) / m.eta[k];
            if (b == l) v += z(a, k) / m.eta[l];
            g(a, b) = v;
        }
    }
    return g + g.transpose();
}

}  // namespace

double covariance_sigma(const SbmMoments& m, std::pair<int, int> p, std::pair<int, int> q) {
    const int K = m.blocks();
    const MatrixXd w = weights(m);
    const MatrixXd c1 = influence(m, p.first, p.second);
    const MatrixXd c2 = influence(m, q.first, q.second);
    double v = 0.0;
    for (int a = 0; a < K; ++a) {
        for (int b = 0; b < K; ++b) v += m.eta[a] * m.eta[b] * w(a, b) * c1(a, b) * c2(a, b);
    }
    return 0.5 * v;
}

MatrixXd entry_covariance(const SbmMoments& m, const std::vector<std::pair<int, int>>& entries) {
    const MatrixXd w = weights(m);
    std::vector<MatrixXd> infl;
    infl.reserve(entries.size());
    for (const auto& e : entries) infl.push_back(influence(m, e.first, e.second));
    const MatrixXd ew = (m.eta * m.eta.transpose()).cwiseProduct(w);
    const Eigen::Index E = static_cast<Eigen::Index>(entries.size());
    MatrixXd cov(E, E);
    for (Eigen::Index i = 0; i < E; ++i) {
        const MatrixXd wi = ew.cwiseProduct(infl[i]);
        for (Eigen::Index j = i; j < E; ++j) {
            cov(i, j) = cov(j, i) = 0.5 * wi.cwiseProduct(infl[j]).sum();
        }
    }
    return cov;
}

DeltaMoments delta_method(const SbmMoments& m, int k, int l, const Link& link) {
    const double slope = link.inverse_derivative(m.theta(k, l));
    return {bias_psi(m, k, l) * slope, variance_sigma2(m, k, l) * slope * slope};
}

BetaInference beta_se(const SbmMoments& m, const std::vector<PairTerm>& pairs, const Link& link, double n,
                      double rho) {
    std::map<std::pair<int, int>, double> coef;
    auto key = [](int a, int b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    for (const auto& t : pairs) {
        coef[key(t.k, t.l)] += t.weight;
        coef[key(t.k, t.lp)] -= t.weight;
    }
    std::vector<std::pair<int, int>> entries;
    std::vector<double> c;
    for (const auto& [e, v] : coef) {
        if (std::abs(v) > 1e-15) {
            entries.push_back(e);
            c.push_back(v);
        }
    }
    BetaInference out;
    if (entries.empty()) return out;
    const Eigen::Index E = static_cast<Eigen::Index>(entries.size());
    VectorXd slope(E), cv(E);
    for (Eigen::Index i = 0; i < E; ++i) {
        slope[i] = link.inverse_derivative(m.theta(entries[i].first, entries[i].second));
        cv[i] = c[i] * slope[i];
        out.psi_beta += cv[i] * bias_psi(m, entries[i].first, entries[i].second);
        out.hollow_beta += cv[i] * hollow_bias(m, entries[i].first, entries[i].second);
    }
    const MatrixXd cov = entry_covariance(m, entries);
    out.sigma2_beta = std::max(0.0, cv.dot(cov * cv));
    if (m.regime == Regime::Dense) {
        out.bias_hat = out.psi_beta / n;
        out.se_hat = std::sqrt(out.sigma2_beta) / n;
    } else {
        out.bias_hat = out.psi_beta / (n * rho);
        out.se_hat = std::sqrt(out.sigma2_beta) / (n * std::sqrt(rho));
    }
    return out;
}

}  // namespace sbmcov
