#include "sbmcov_app/report.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>

namespace sbmcov::app {

namespace {

using nlohmann::ordered_json;

ordered_json matrix_json(const MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

ordered_json number_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json estimate_json(const BetaEstimate& e, const FitOptions& opts, std::optional<double> boot) {
    ordered_json j;
    j["variant"] = to_string(e.variant);
    j["parameter"] = e.covariate + 1;
    if (e.covariate < static_cast<int>(opts.covariates.size()) && opts.covariates.size() > 1) {
        j["covariate"] = opts.covariates[e.covariate];
    } else if (!opts.covariates.empty()) {
        j["covariate"] = opts.covariates.front();
    }
    j["value"] = e.value;
    j["bias_hat"] = number_or_null(e.bias_hat);
    j["se_hat"] = number_or_null(e.se_hat);
    j["diagonal_bias_hat"] = number_or_null(e.diagonal_bias_hat);
    if (boot) j["bootstrap_se"] = number_or_null(*boot);
    j["pairs"] = e.pairs_used.size();
    return j;
}

}  // namespace

ordered_json fit_report(const FitResult& r, const FitOptions& opts, const std::optional<std::vector<double>>& bootstrap) {
    const BlockFit& b = r.block;
    ordered_json rep;
    ordered_json fit;
    fit["n"] = b.n;
    fit["K"] = b.K;
    fit["covariates"] = opts.covariates;
    fit["Ktilde"] = b.Ktilde;
    fit["link"] = to_string(b.link.kind);
    fit["rho"] = b.rho;
    fit["d_hat"] = b.d_hat;
    fit["signature"] = {b.signature.d1, b.signature.d2};
    fit["eigenvalues"] = std::vector<double>(b.eigenvalues.data(), b.eigenvalues.data() + b.eigenvalues.size());
    fit["block_sizes"] = b.sizes;
    fit["latent_group"] = b.psi;
    fit["block_covariates"] = b.z_theta;
    fit["theta_Z"] = matrix_json(b.theta_Z);
    fit["B_Z"] = matrix_json(b.B_Z);
    fit["clip_count"] = b.clip_count;
    ordered_json est = ordered_json::array();
    size_t t = 0;
    auto boot_at = [&](size_t i) -> std::optional<double> {
        if (bootstrap && i < bootstrap->size()) return (*bootstrap)[i];
        return std::nullopt;
    };
    for (const auto& e : r.simple) est.push_back(estimate_json(e, opts, boot_at(t++)));
    for (const auto& e : r.weighted) est.push_back(estimate_json(e, opts, boot_at(t++)));
    fit["estimates"] = est;
    fit["latent_positions"] = matrix_json(r.latent_positions);
    fit["latent_signature"] = {r.latent_signature.d1, r.latent_signature.d2};
    rep["fit"] = fit;
    ordered_json timings;
    for (const auto& [stage, secs] : r.timings) timings[stage] = secs;
    rep["timings"] = timings;
    return rep;
}

void write_mc_summary(const McSummary& s, std::ostream& out) {
    int params = 0;
    for (const auto& row : s.rows) params = std::max(params, row.parameter);
    out << "design\tn\testimator";
    for (int p = 1; p <= params; ++p) out << "\tabs_err_beta" << p << "\tmcse_beta" << p;
    out << "\ttime\tari\tused\tdivergences\n";
    std::map<std::pair<int, std::string>, std::vector<const McRow*>> groups;
    std::vector<std::pair<int, std::string>> order;
    for (const auto& row : s.rows) {
        const auto key = std::make_pair(row.n, row.estimator);
        if (!groups.count(key)) order.push_back(key);
        groups[key].push_back(&row);
    }
    out << std::setprecision(6);
    for (const auto& key : order) {
        const auto& rows = groups[key];
        out << s.design << '\t' << key.first << '\t' << key.second;
        for (const McRow* row : rows) {
            out << '\t' << row->mean_abs_error << '\t';
            if (row->mcse) {
                out << *row->mcse;
            } else {
                out << "NA";
            }
        }
        out << '\t' << rows.front()->mean_seconds << '\t' << rows.front()->mean_ari << '\t' << rows.front()->used
            << '\t' << rows.front()->divergences << '\n';
    }
}

void write_embedding(const MatrixXd& Y, std::ostream& out) {
    out << std::setprecision(12);
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
        for (Eigen::Index j = 0; j < Y.cols(); ++j) out << (j ? "\t" : "") << Y(i, j);
        out << '\n';
    }
}

}  // namespace sbmcov::app
