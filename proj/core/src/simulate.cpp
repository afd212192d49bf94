#include "sbmcov/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_set>

#include "sbmcov/error.hpp"
#include "sbmcov/random.hpp"

namespace sbmcov {

namespace {

using Rng = std::mt19937_64;

int draw_categorical(Rng& rng, const double* p, int m) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    for (int i = 0; i < m - 1; ++i) {
        if (x < p[i]) return i;
        x -= p[i];
    }
    return m - 1;
}

/// m distinct values from [0, N) (Floyd's algorithm).
std::vector<std::int64_t> distinct_sample(Rng& rng, std::int64_t N, std::int64_t m) {
    std::unordered_set<std::int64_t> chosen;
    chosen.reserve(static_cast<size_t>(m) * 2);
    std::vector<std::int64_t> out;
    out.reserve(m);
    for (std::int64_t j = N - m; j < N; ++j) {
        std::uniform_int_distribution<std::int64_t> pick(0, j);
        const std::int64_t t = pick(rng);
        const std::int64_t v = chosen.insert(t).second ? t : j;
        if (v == j) chosen.insert(j);
        out.push_back(v);
    }
    return out;
}

}  // namespace

std::string covariate_name(int c) { return "z" + std::to_string(c + 1); }

std::vector<std::pair<int, int>> sample_block_edges(const MatrixXd& p, const std::vector<int>& block,
                                                    std::uint64_t seed) {
    const int n = static_cast<int>(block.size());
    const int kt = static_cast<int>(p.rows());
    Rng rng(seed);
    std::vector<std::pair<int, int>> edges;
    if (n < 2) return edges;
    std::vector<std::vector<int>> members(kt);
    for (int i = 0; i < n; ++i) members[block[i]].push_back(i);
    double mean_p = 0.0;
    for (int a = 0; a < kt; ++a) {
        for (int b = 0; b < kt; ++b) {
            mean_p += p(a, b) * static_cast<double>(members[a].size()) * static_cast<double>(members[b].size());
        }
    }
    mean_p /= static_cast<double>(n) * n;

    if (mean_p >= 0.05) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                if (u(rng) < p(block[i], block[j])) edges.emplace_back(i, j);
            }
        }
        return edges;
    }
    for (int a = 0; a < kt; ++a) {
        for (int b = a; b < kt; ++b) {
            const auto& ma = members[a];
            const auto& mb = members[b];
            const std::int64_t na = static_cast<std::int64_t>(ma.size());
            const std::int64_t nb = static_cast<std::int64_t>(mb.size());
            const std::int64_t pairs = a == b ? na * (na - 1) / 2 : na * nb;
            if (pairs == 0 || p(a, b) <= 0.0) continue;
            std::binomial_distribution<std::int64_t> count(pairs, std::min(p(a, b), 1.0));
            const std::int64_t m = count(rng);
            for (std::int64_t t : distinct_sample(rng, pairs, m)) {
                int u = 0, v = 0;
                if (a == b) {
                    // Row r of the strict upper triangle holds na - 1 - r pairs.
                    std::int64_t r = static_cast<std::int64_t>(
                        (2.0 * na - 1.0 - std::sqrt((2.0 * na - 1.0) * (2.0 * na - 1.0) - 8.0 * t)) / 2.0);
                    auto start = [&](std::int64_t row) { return row * (2 * na - row - 1) / 2; };
                    while (r > 0 && start(r) > t) --r;
                    while (start(r + 1) <= t) ++r;
                    u = ma[r];
                    v = ma[r + 1 + (t - start(r))];
                } else {
                    u = ma[t / nb];
                    v = mb[t % nb];
                }
                edges.emplace_back(std::min(u, v), std::max(u, v));
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

SampledGraph sample_graph(const SbmSpec& spec, int n, std::uint64_t seed) {
    const ExpandedSbm model = expand(spec);
    if (n < model.Ktilde) fail(ErrorKind::InvalidInput, "n must be at least the number of expanded blocks");
    Rng rng(derive_seed(seed, 0));
    SampledGraph s;
    const int c = model.covariates;
    s.tau.resize(n);
    s.block.resize(n);
    s.z.assign(c, std::vector<int>(n, 0));
    std::vector<double> pi(spec.pi.data(), spec.pi.data() + spec.K);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        const int tau = draw_categorical(rng, pi.data(), spec.K);
        s.tau[i] = tau;
        int offset = 0;
        std::vector<int> bits(c);
        for (const auto& law : spec.covariates) {
            if (law.kind == CovariateLaw::Kind::BernoulliPerBlock) {
                bits[offset] = u(rng) < law.b[tau] ? 1 : 0;
            } else {
                const auto cells = law.pair_cells();
                const int cell = draw_categorical(rng, cells.data(), 4);
                bits[offset] = cell & 1;
                bits[offset + 1] = cell >> 1;
            }
            offset += law.arity();
        }
        for (int j = 0; j < c; ++j) s.z[j][i] = bits[j];
        s.block[i] = expanded_index(tau, bits);
    }
    const MatrixXd p = spec.rho * model.theta_Z;
    s.graph = Graph::from_pairs(n, sample_block_edges(p, s.block, derive_seed(seed, 1)));
    for (int j = 0; j < c; ++j) {
        CovariateColumn col;
        col.name = covariate_name(j);
        col.values.assign(s.z[j].begin(), s.z[j].end());
        s.graph.covariates.push_back(std::move(col));
    }
    return s;
}

std::pair<std::vector<int>, std::vector<int>> sample_correlated_bernoulli(double b_z, double b_w,
                                                                          double correlation, int n,
                                                                          std::uint64_t seed) {
    SbmSpec probe;
    probe.K = 1;
    probe.pi = VectorXd::Ones(1);
    probe.nu = MatrixXd::Constant(1, 1, 0.5);
    probe.covariates = {CovariateLaw::pair(b_z, b_w, correlation)};
    probe.beta = {0.0, 0.0};
    probe.validate();
    const auto cells = probe.covariates[0].pair_cells();
    Rng rng(seed);
    std::vector<int> z(n), w(n);
    for (int i = 0; i < n; ++i) {
        const int cell = draw_categorical(rng, cells.data(), 4);
        z[i] = cell & 1;
        w[i] = cell >> 1;
    }
    return {z, w};
}

std::vector<double> bootstrap_se(const FitResult& fit, const std::vector<std::vector<int>>& z,
                                 const FitOptions& opts, int replicates, std::uint64_t seed) {
    const BlockFit& bf = fit.block;
    const MatrixXd p = bf.rho * bf.theta_Z;
    FitOptions local = opts;
    local.compute_se = false;
    local.d = bf.d_hat;
    const size_t count = fit.simple.size() + fit.weighted.size();
    std::vector<std::vector<double>> draws(count);
    for (int r = 0; r < replicates; ++r) {
        const Graph g = Graph::from_pairs(bf.n, sample_block_edges(p, bf.xi, derive_seed(seed, r)));
        const Adjacency adj = g.adjacency();
        try {
            const FitResult b = fit_operator(adj.op(), z, local);
            size_t t = 0;
            for (const auto& e : b.simple) draws[t++].push_back(e.value);
            for (const auto& e : b.weighted) draws[t++].push_back(e.value);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateFit && e.kind() != ErrorKind::NumericalFailure) throw;
        }
    }
    std::vector<double> se(count, std::numeric_limits<double>::quiet_NaN());
    for (size_t t = 0; t < count; ++t) {
        const auto& v = draws[t];
        if (v.size() < 2) continue;
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        se[t] = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    return se;
}

std::uint64_t replicate_seed(std::uint64_t seed, int n, int id) {
    return derive_seed(derive_seed(seed, static_cast<std::uint64_t>(n)), static_cast<std::uint64_t>(id));
}

namespace {

FitOptions design_fit_options(const McDesign& d, const SbmSpec& spec) {
    FitOptions o = d.fit;
    o.K = spec.K;
    o.link = spec.link;
    o.estimator = d.estimators;
    o.covariates.clear();
    for (int j = 0; j < spec.covariate_count(); ++j) o.covariates.push_back(covariate_name(j));
    if (spec.rho < 1.0 && !o.rho) o.rho = spec.rho;
    return o;
}

SbmSpec spec_at(const McDesign& d, int n) {
    SbmSpec spec = d.spec;
    if (d.rho_exponent) spec.rho = std::pow(static_cast<double>(n), -*d.rho_exponent);
    return spec;
}

}  // namespace

McReplicate run_replicate(const McDesign& d, int n, int id) {
    McReplicate r;
    r.n = n;
    r.id = id;
    const SbmSpec spec = spec_at(d, n);
    FitOptions opts = design_fit_options(d, spec);
    const std::uint64_t seed = replicate_seed(d.seed, n, id);
    opts.gmm.seed = derive_seed(seed, 11);
    opts.kmeans.seed = derive_seed(seed, 12);
    opts.eigen.seed = derive_seed(seed, 13);
    const SampledGraph s = sample_graph(spec, n, seed);
    const auto start = std::chrono::steady_clock::now();
    try {
        const FitResult f = spec.homophily == Homophily::Differential ? fit_differential_homophily(s.graph, opts)
                                                                      : fit(s.graph, opts);
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.ari = adjusted_rand_index(s.block, f.block.xi);
        for (const auto& e : f.simple) {
            r.simple.push_back(e.value);
            r.simple_se.push_back(e.se_hat);
            r.simple_bias.push_back(e.bias_hat);
        }
        for (const auto& e : f.weighted) {
            r.weighted.push_back(e.value);
            r.weighted_se.push_back(e.se_hat);
            r.weighted_bias.push_back(e.bias_hat);
        }
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateFit && e.kind() != ErrorKind::NumericalFailure) throw;
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.diverged = true;
        r.error = e.what();
    }
    return r;
}

std::vector<McRow> summarize(const McDesign& d, const std::vector<McReplicate>& runs) {
    std::vector<McRow> rows;
    for (int n : d.n_values) {
        for (int which = 0; which < 2; ++which) {
            if (which == 0 && d.estimators == EstimatorChoice::Weighted) continue;
            if (which == 1 && d.estimators == EstimatorChoice::Simple) continue;
            for (size_t param = 0; param < d.spec.beta.size(); ++param) {
                McRow row;
                row.n = n;
                row.estimator = which == 0 ? "SimpleMean" : "WeightedMean";
                row.parameter = static_cast<int>(param) + 1;
                row.truth = d.spec.beta[param];
                std::vector<double> err;
                double est = 0.0, secs = 0.0, ari = 0.0;
                for (const auto& r : runs) {
                    if (r.n != n) continue;
                    if (r.diverged) {
                        ++row.divergences;
                        continue;
                    }
                    const auto& v = which == 0 ? r.simple : r.weighted;
                    err.push_back(std::abs(v[param] - row.truth));
                    est += v[param];
                    secs += r.seconds;
                    ari += r.ari;
                }
                row.used = static_cast<int>(err.size());
                if (row.used > 0) {
                    const double m = static_cast<double>(row.used);
                    double mean = 0.0;
                    for (double e : err) mean += e;
                    mean /= m;
                    row.mean_abs_error = mean;
                    row.mean_estimate = est / m;
                    row.mean_seconds = secs / m;
                    row.mean_ari = ari / m;
                    if (row.used > 1) {
                        double ss = 0.0;
                        for (double e : err) ss += (e - mean) * (e - mean);
                        row.mcse = std::sqrt(ss / (m - 1.0) / m);
                    }
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

McSummary run_design(const McDesign& d) {
    if (d.replicates < 1) fail(ErrorKind::ConfigError, "replicates must be at least 1");
    if (d.n_values.empty()) fail(ErrorKind::ConfigError, "design needs at least one network size");
    for (int n : d.n_values) {
        if (n <= 0) fail(ErrorKind::ConfigError, "network sizes must be positive");
    }
    d.spec.validate();
    std::vector<std::pair<int, int>> jobs;
    for (int n : d.n_values) {
        for (int id = 0; id < d.replicates; ++id) jobs.emplace_back(n, id);
    }
    std::vector<McReplicate> runs(jobs.size());
    const int threads = std::max(1, std::min<int>(d.jobs, static_cast<int>(jobs.size())));
    if (threads == 1) {
        for (size_t t = 0; t < jobs.size(); ++t) runs[t] = run_replicate(d, jobs[t].first, jobs[t].second);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < threads; ++w) {
            pool.emplace_back([&] {
                for (size_t t = next++; t < jobs.size(); t = next++) {
                    try {
                        runs[t] = run_replicate(d, jobs[t].first, jobs[t].second);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (!first_error) first_error = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (first_error) std::rethrow_exception(first_error);
    }
    McSummary s;
    s.design = d.name;
    s.replicates = d.replicates;
    s.runs = std::move(runs);
    s.rows = summarize(d, s.runs);
    return s;
}

SbmSpec design_spec(int design) {
    struct Row {
        double pi1, bz, bw, corr;
    };
    static const Row rows[] = {
        {0.5, 0.5, 0.5, 0.0}, {0.5, 0.5, 0.5, 0.3}, {0.3, 0.5, 0.5, 0.0}, {0.3, 0.4, 0.6, 0.0}, {0.3, 0.4, 0.6, 0.3},
    };
    if (design < 1 || design > 5) fail(ErrorKind::ConfigError, "design must be 1..5");
    const Row& r = rows[design - 1];
    SbmSpec spec;
    spec.K = 2;
    spec.pi.resize(2);
    spec.pi << r.pi1, 1.0 - r.pi1;
    spec.nu.resize(2, 1);
    spec.nu << -1.5, 1.0;
    spec.covariates = {CovariateLaw::pair(r.bz, r.bw, r.corr)};
    spec.beta = {0.5, 0.75};
    spec.link = Link::logit();
    return spec;
}

}  // namespace sbmcov
