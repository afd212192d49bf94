#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sbmcov/error.hpp"
#include "sbmcov_app/config.hpp"

using namespace sbmcov;
using namespace sbmcov::app;

namespace {

KeyValues kv(const std::string& text) {
    std::istringstream in(text);
    return read_key_values(in);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("key value syntax") {
    const KeyValues a = kv("# header\nK = 2\n\ncovariate = bernoulli 0.5 # trailing\ncovariate = bernoulli 0.4\n");
    CHECK(a.get("K") == "2");
    CHECK(a.all("covariate").size() == 2);
    CHECK(a.all("covariate")[0] == "bernoulli 0.5");
    CHECK_THROWS_AS(a.get("covariate"), Error);
    CHECK_THROWS_AS(a.get("missing"), Error);
    CHECK_THROWS_AS(kv("no equals sign\n"), Error);
    CHECK(parse_numbers("1, 2 3") == std::vector<double>{1, 2, 3});
}

TEST_CASE("spec keys") {
    const SbmSpec s = spec_from(kv("K = 2\npi = 0.3 0.7\nnu = -1.5 -1 ; 1 0.5\nlink = logit\n"
                                   "covariate = bernoulli 0.4 0.6\nbeta = 0.5\nrho = 0.5\n"));
    CHECK(s.K == 2);
    CHECK(s.pi[0] == doctest::Approx(0.3));
    CHECK(s.nu.rows() == 2);
    CHECK(s.nu.cols() == 2);
    CHECK(s.nu(1, 1) == doctest::Approx(0.5));
    CHECK(s.link.kind == LinkKind::Logit);
    CHECK(s.covariates[0].b == std::vector<double>{0.4, 0.6});
    CHECK(s.rho == 0.5);

    const SbmSpec u = spec_from(kv("K = 2\nnu = 0.1 ; 0.7\n"));
    CHECK(u.pi[1] == doctest::Approx(0.5));
    CHECK(u.link.kind == LinkKind::Identity);

    const SbmSpec one = spec_from(kv("K = 2\nnu = 0 ; 1\nlink = logit\ncovariate = bernoulli 0.5\nbeta = 1\n"));
    CHECK(one.covariates[0].b == std::vector<double>{0.5, 0.5});

    const SbmSpec d = spec_from(kv("K = 2\nnu = -1.5 ; 1\nlink = logit\ncovariate = bernoulli 0.5\n"
                                   "homophily = differential\nbeta = 0.4 0.9\n"));
    CHECK(d.homophily == Homophily::Differential);

    const SbmSpec preset = spec_from(kv("design = 2\n"));
    CHECK(preset.covariates[0].kind == CovariateLaw::Kind::BernoulliPair);
    CHECK(preset.covariates[0].correlation == doctest::Approx(0.3));
}

TEST_CASE("spec errors") {
    const std::string path = "config_unknown_key.spec";
    {
        std::ofstream out(path);
        out << "K = 2\nnu = 0.1 ; 0.7\ncolour = red\n";
    }
    CHECK_THROWS_AS(read_spec(path), Error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_spec("no/such/file.spec"), Error);
    CHECK_THROWS_AS(spec_from(kv("K = 2\nnu = 0.1\n")), Error);
    CHECK_THROWS_AS(spec_from(kv("K = 2\nnu = 0.1 ; 0.7\nlink = probit\n")), Error);
    CHECK_THROWS_AS(spec_from(kv("K = 2\nnu = 0.1 ; 0.7\ncovariate = poisson 2\nbeta = 1\n")), Error);
}

TEST_CASE("design keys") {
    const McDesign d = design_from(kv("design = 1\nname = d1\nn = 2000 5000\nreplicates = 10\nseed = 5\n"
                                      "estimator = simple\njobs = 2\ndim_rule = ktilde\ncluster = kmeans\n"));
    CHECK(d.name == "d1");
    CHECK(d.n_values == std::vector<int>{2000, 5000});
    CHECK(d.replicates == 10);
    CHECK(d.seed == 5);
    CHECK(d.estimators == EstimatorChoice::Simple);
    CHECK(d.jobs == 2);
    CHECK(d.fit.dim_rule == DimensionRule::Ktilde);
    CHECK(d.fit.cluster == ClusterMethod::KMeans);
    CHECK_THROWS_AS(design_from(kv("design = 1\nn = 100\nreplicates = 0\n")), Error);
    CHECK_THROWS_AS(design_from(kv("design = 1\nreplicates = 2\n")), Error);
}

}
