#include <doctest.h>

#include <cmath>
#include <set>

#include "models.hpp"
#include "sbmcov/error.hpp"
#include "sbmcov/estimator.hpp"
#include "sbmcov/simulate.hpp"

using namespace sbmcov;
using namespace sbmcov::testing;

namespace {

/// Largest standardized deviation of per-block-pair edge frequencies from rho * theta_Z.
double max_block_pair_z(const SbmSpec& spec, const SampledGraph& s) {
    const ExpandedSbm m = expand(spec);
    const int kt = m.Ktilde;
    std::vector<double> size(kt, 0.0);
    for (int b : s.block) size[b] += 1;
    MatrixXd count = MatrixXd::Zero(kt, kt);
    for (auto [u, v] : s.graph.edges) {
        const int a = std::min(s.block[u], s.block[v]), b = std::max(s.block[u], s.block[v]);
        count(a, b) += 1;
    }
    double worst = 0.0;
    for (int a = 0; a < kt; ++a) {
        for (int b = a; b < kt; ++b) {
            const double pairs = a == b ? size[a] * (size[a] - 1) / 2 : size[a] * size[b];
            if (pairs == 0) continue;
            const double p = spec.rho * m.theta_Z(a, b);
            const double sd = std::sqrt(pairs * p * (1 - p));
            if (sd == 0) {
                CHECK(count(a, b) == 0);
                continue;
            }
            worst = std::max(worst, std::abs(count(a, b) - pairs * p) / sd);
        }
    }
    return worst;
}

McDesign small_design(int replicates, int jobs) {
    McDesign d;
    d.name = "small";
    d.spec = two_block_logit();
    d.n_values = {300};
    d.replicates = replicates;
    d.seed = 99;
    d.jobs = jobs;
    d.fit.dim_rule = DimensionRule::Ktilde;
    return d;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("erdos-renyi density") {
    SbmSpec s;
    s.K = 1;
    s.pi = VectorXd::Ones(1);
    s.nu = MatrixXd::Constant(1, 1, std::sqrt(0.3));
    const int n = 2000;
    const SampledGraph g = sample_graph(s, n, 1);
    const double pairs = n * (n - 1) / 2.0;
    const double expected = 0.3 * pairs;
    CHECK(std::abs(g.graph.edges.size() - expected) < 3 * std::sqrt(pairs * 0.3 * 0.7));
}

TEST_CASE("zero sparsity gives an empty graph") {
    SbmSpec s = two_block_logit();
    s.rho = 0.0;
    const SampledGraph g = sample_graph(s, 500, 2);
    CHECK(g.graph.edges.empty());
    CHECK(g.graph.n == 500);
}

TEST_CASE("sampled graphs are simple") {
    SbmSpec s = two_block_logit();
    s.rho = 0.02;
    for (const SbmSpec& spec : {two_block_logit(), s}) {
        const SampledGraph g = sample_graph(spec, 1000, 3);
        std::set<std::pair<int, int>> seen;
        for (auto [u, v] : g.graph.edges) {
            CHECK(u < v);
            CHECK(v < 1000);
            CHECK(seen.insert({u, v}).second);
        }
    }
}

TEST_CASE("edge frequencies match the block model") {
    SbmSpec sparse = two_block_logit();
    sparse.rho = 0.03;
    SbmSpec pair = design_spec(5);
    for (const SbmSpec& spec : {two_block_identity(), two_block_logit(), sparse, pair}) {
        const SampledGraph g = sample_graph(spec, 4000, 10);
        CHECK(max_block_pair_z(spec, g) < 4.0);
    }
}

TEST_CASE("covariates follow their conditional law") {
    SbmSpec s = two_block_logit();
    s.covariates[0] = CovariateLaw::per_block({0.3, 0.7});
    const int n = 10000;
    const SampledGraph g = sample_graph(s, n, 4);
    double chi2 = 0.0;
    for (int k = 0; k < 2; ++k) {
        double nk = 0, ones = 0;
        for (int i = 0; i < n; ++i) {
            if (g.tau[i] != k) continue;
            nk += 1;
            ones += g.z[0][i];
            CHECK(g.block[i] == expanded_index(k, {g.z[0][i]}));
        }
        const double b = s.covariates[0].b[k];
        chi2 += (ones - nk * b) * (ones - nk * b) / (nk * b) +
                (ones - nk * b) * (ones - nk * b) / (nk * (1 - b));
    }
    CHECK(chi2 < 13.82);
    for (int i = 0; i < 5; ++i) CHECK(g.graph.column(covariate_name(0)).values[i] == g.z[0][i]);
}

TEST_CASE("correlated bernoulli pairs") {
    const int n = 10000;
    auto [z, w] = sample_correlated_bernoulli(0.5, 0.5, 0.0, n, 1);
    std::vector<double> a(z.begin(), z.end()), b(w.begin(), w.end());
    const double r = sample_covariance(a, b) / std::sqrt(sample_covariance(a, a) * sample_covariance(b, b));
    CHECK(std::abs(r) < 3.0 / std::sqrt(n));

    auto [z3, w3] = sample_correlated_bernoulli(0.5, 0.5, 0.3, n, 2);
    double both = 0;
    for (int i = 0; i < n; ++i) both += z3[i] && w3[i];
    CHECK(std::abs(both / n - 0.325) < 3 * std::sqrt(0.325 * 0.675 / n));

    auto [z1, w1] = sample_correlated_bernoulli(0.4, 0.4, 1.0, 1000, 3);
    CHECK(z1 == w1);

    try {
        sample_correlated_bernoulli(0.1, 0.9, 0.9, 10, 4);
        FAIL("expected InvalidModel");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::InvalidModel);
    }
}

TEST_CASE("invalid specs are rejected") {
    SbmSpec s = two_block_logit();
    s.beta.clear();
    CHECK_THROWS_AS(sample_graph(s, 100, 1), Error);
}

TEST_CASE("single replicate summary") {
    const McDesign d = small_design(1, 1);
    const McSummary sum = run_design(d);
    REQUIRE(sum.runs.size() == 1);
    const McReplicate& rep = sum.runs[0];
    for (const McRow& row : sum.rows) {
        CHECK(!row.mcse.has_value());
        CHECK(row.used == 1);
        const double est = row.estimator == "SimpleMean" ? rep.simple[row.parameter - 1] : rep.weighted[row.parameter - 1];
        CHECK(row.mean_estimate == est);
        CHECK(row.mean_abs_error == doctest::Approx(std::abs(est - 1.5)));
    }

    const SampledGraph g = sample_graph(d.spec, 300, replicate_seed(d.seed, 300, 0));
    FitOptions o;
    o.K = 2;
    o.covariates = {"z1"};
    o.link = Link::logit();
    o.dim_rule = DimensionRule::Ktilde;
    o.compute_se = false;
    CHECK(std::abs(fit(g.graph, o).simple[0].value - rep.simple[0]) < 1e-6);
}

TEST_CASE("runs are deterministic and independent of threading") {
    const McSummary a = run_design(small_design(4, 1));
    const McSummary b = run_design(small_design(4, 2));
    REQUIRE(a.rows.size() == b.rows.size());
    for (size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(a.rows[i].mean_abs_error == b.rows[i].mean_abs_error);
        CHECK(a.rows[i].mcse == b.rows[i].mcse);
        CHECK(a.rows[i].mean_ari == b.rows[i].mean_ari);
        CHECK(a.rows[i].divergences <= 4);
    }
    const McReplicate one = run_replicate(small_design(4, 1), 300, 2);
    CHECK(one.simple == a.runs[2].simple);
    CHECK(replicate_seed(1, 300, 0) != replicate_seed(1, 300, 1));
    CHECK(replicate_seed(1, 300, 0) != replicate_seed(1, 301, 0));
}

TEST_CASE("divergent replicates are counted and dropped") {
    McDesign d = small_design(2, 1);
    d.fit.dim_rule = DimensionRule::Elbow;
    d.fit.d = 1;
    const McSummary s = run_design(d);
    for (const McRow& row : s.rows) {
        CHECK(row.divergences + row.used == 2);
    }
    for (const McReplicate& r : s.runs) {
        if (r.diverged) CHECK(!r.error.empty());
    }
}

TEST_CASE("design table") {
    for (int k = 1; k <= 5; ++k) {
        const SbmSpec s = design_spec(k);
        CHECK_NOTHROW(s.validate());
        CHECK(s.beta == std::vector<double>{0.5, 0.75});
        CHECK(expand(s).Ktilde == 8);
    }
    CHECK(design_spec(2).covariates[0].correlation == 0.3);
    CHECK(design_spec(3).pi[0] == doctest::Approx(0.3));
    CHECK_THROWS_AS(design_spec(6), Error);
}

}
