#include "sbmcov/model.hpp"

#include <cmath>
#include <sstream>

#include "sbmcov/error.hpp"

namespace sbmcov {

double Link::forward(double u) const {
    if (kind == LinkKind::Identity) return u;
    if (u >= 0) return 1.0 / (1.0 + std::exp(-u));
    const double e = std::exp(u);
    return e / (1.0 + e);
}

double Link::inverse(double p) const {
    if (kind == LinkKind::Identity) return p;
    if (!(p > 0.0 && p < 1.0)) {
        fail(ErrorKind::InvalidInput, "logit inverse undefined at p=" + std::to_string(p));
    }
    return std::log(p / (1.0 - p));
}

double Link::inverse_derivative(double p) const {
    if (kind == LinkKind::Identity) return 1.0;
    if (!(p > 0.0 && p < 1.0)) {
        fail(ErrorKind::InvalidInput, "logit derivative undefined at p=" + std::to_string(p));
    }
    return 1.0 / (p * (1.0 - p));
}

std::string to_string(LinkKind kind) {
    return kind == LinkKind::Identity ? "identity" : "logit";
}

LinkKind parse_link(const std::string& name) {
    if (name == "identity") return LinkKind::Identity;
    if (name == "logit") return LinkKind::Logit;
    fail(ErrorKind::ConfigError, "unknown link '" + name + "'");
}

CovariateLaw CovariateLaw::per_block(std::vector<double> b) {
    CovariateLaw law;
    law.kind = Kind::BernoulliPerBlock;
    law.b = std::move(b);
    return law;
}

CovariateLaw CovariateLaw::pair(double b_z, double b_w, double correlation) {
    CovariateLaw law;
    law.kind = Kind::BernoulliPair;
    law.b_z = b_z;
    law.b_w = b_w;
    law.correlation = correlation;
    return law;
}

std::array<double, 4> CovariateLaw::pair_cells() const {
    const double p11 =
        b_z * b_w + correlation * std::sqrt(b_z * (1 - b_z) * b_w * (1 - b_w));
    return {1.0 - b_z - b_w + p11, b_z - p11, b_w - p11, p11};
}

double CovariateLaw::probability(int tau, const int* bits) const {
    if (kind == Kind::BernoulliPerBlock) {
        return bits[0] ? b[tau] : 1.0 - b[tau];
    }
    return pair_cells()[bits[0] + 2 * bits[1]];
}

int SbmSpec::covariate_count() const {
    int c = 0;
    for (const auto& law : covariates) c += law.arity();
    return c;
}

void SbmSpec::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::InvalidModel, what); };
    if (K < 1) bad("K must be positive");
    if (pi.size() != K) bad("pi must have length K");
    if (nu.rows() != K || nu.cols() < 1) bad("nu must be K x d with d >= 1");
    if (!nu.allFinite()) bad("nu must be finite");
    double total = 0;
    for (int k = 0; k < K; ++k) {
        if (!(pi[k] > 0)) bad("pi entries must be positive");
        total += pi[k];
    }
    if (std::abs(total - 1.0) > 1e-12) bad("pi must sum to 1");
    for (const auto& law : covariates) {
        if (law.kind == CovariateLaw::Kind::BernoulliPerBlock) {
            if (static_cast<int>(law.b.size()) != K) bad("per-block covariate law needs K probabilities");
            for (double b : law.b) {
                if (!(b > 0 && b < 1)) bad("covariate probabilities must lie in (0,1)");
            }
        } else {
            if (!(law.b_z > 0 && law.b_z < 1 && law.b_w > 0 && law.b_w < 1)) {
                bad("pair marginals must lie in (0,1)");
            }
            if (law.correlation < -1 || law.correlation > 1) bad("correlation must lie in [-1,1]");
            for (double cell : law.pair_cells()) {
                if (cell < -1e-12) bad("correlation infeasible for the given marginals");
            }
        }
    }
    const int c = covariate_count();
    if (homophily == Homophily::Differential) {
        if (c != 1 || beta.size() != 2) bad("differential homophily needs one covariate and (beta_1, beta_2)");
    } else if (static_cast<int>(beta.size()) != c) {
        bad("need one beta per covariate");
    }
    if (!(rho >= 0 && rho <= 1)) bad("rho must lie in [0,1]");
    if (link.kind == LinkKind::Identity) {
        const MatrixXd gram = nu * nu.transpose();
        Eigen::FullPivLU<MatrixXd> lu(gram);
        lu.setThreshold(1e-10);
        if (lu.rank() != nu.cols()) bad("rank of nu nu^T must equal d for the identity link");
    }
}

int expanded_index(int tau, const std::vector<int>& z) {
    int idx = 0;
    for (size_t j = 0; j < z.size(); ++j) idx += z[j] << j;
    return (tau << z.size()) + idx;
}

namespace {

void check_probability(const MatrixXd& theta, const char* what) {
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
        for (Eigen::Index j = 0; j < theta.cols(); ++j) {
            const double v = theta(i, j);
            if (!(v >= 0.0 && v <= 1.0)) {
                std::ostringstream os;
                os << what << " entry (" << i << "," << j << ") = " << v << " lies outside [0,1]";
                fail(ErrorKind::InvalidModel, os.str());
            }
        }
    }
}

}  // namespace

MatrixXd theta_of_latents(const MatrixXd& nu, const Link& link) {
    if (!nu.allFinite()) fail(ErrorKind::InvalidModel, "centroids must be finite");
    MatrixXd theta = (nu * nu.transpose()).unaryExpr([&](double u) { return link.forward(u); });
    check_probability(theta, "theta");
    return theta;
}

ExpandedSbm expand(const SbmSpec& spec) {
    spec.validate();
    const int c = spec.covariate_count();
    const int m = 1 << c;
    ExpandedSbm out;
    out.K = spec.K;
    out.covariates = c;
    out.Ktilde = spec.K * m;
    out.label_map.resize(out.Ktilde);
    out.eta.resize(out.Ktilde);
    for (int tau = 0; tau < spec.K; ++tau) {
        for (int pattern = 0; pattern < m; ++pattern) {
            BlockLabel label;
            label.tau = tau;
            label.z.resize(c);
            for (int j = 0; j < c; ++j) label.z[j] = (pattern >> j) & 1;
            double p = spec.pi[tau];
            int offset = 0;
            for (const auto& law : spec.covariates) {
                p *= law.probability(tau, label.z.data() + offset);
                offset += law.arity();
            }
            const int idx = expanded_index(tau, label.z);
            out.eta[idx] = p;
            out.label_map[idx] = std::move(label);
        }
    }
    const MatrixXd latent = spec.nu * spec.nu.transpose();
    out.scores.resize(out.Ktilde, out.Ktilde);
    for (int a = 0; a < out.Ktilde; ++a) {
        for (int b = 0; b < out.Ktilde; ++b) {
            const auto& la = out.label_map[a];
            const auto& lb = out.label_map[b];
            double s = latent(la.tau, lb.tau);
            if (spec.homophily == Homophily::Differential) {
                if (la.z[0] == 0 && lb.z[0] == 0) s += spec.beta[0];
                if (la.z[0] == 1 && lb.z[0] == 1) s += spec.beta[1];
            } else {
                for (int j = 0; j < c; ++j) {
                    if (la.z[j] == lb.z[j]) s += spec.beta[j];
                }
            }
            out.scores(a, b) = s;
        }
    }
    out.theta_Z = out.scores.unaryExpr([&](double u) { return spec.link.forward(u); });
    check_probability(out.theta_Z, "theta_Z");
    return out;
}

ExpandedSbm expand_one_covariate(const SbmSpec& spec) {
    if (spec.covariate_count() != 1 || spec.homophily != Homophily::Shared) {
        fail(ErrorKind::InvalidModel, "expand_one_covariate needs exactly one covariate and scalar beta");
    }
    return expand(spec);
}

ExpandedSbm expand_two_covariates(const SbmSpec& spec) {
    if (spec.covariate_count() != 2 || spec.homophily != Homophily::Shared) {
        fail(ErrorKind::InvalidModel, "expand_two_covariates needs exactly two covariates");
    }
    return expand(spec);
}

ExpandedSbm expand_differential_homophily(const SbmSpec& spec) {
    if (spec.homophily != Homophily::Differential) {
        fail(ErrorKind::InvalidModel, "spec is not a differential-homophily model");
    }
    return expand(spec);
}

}  // namespace sbmcov
