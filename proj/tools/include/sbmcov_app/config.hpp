#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "sbmcov/model.hpp"
#include "sbmcov/simulate.hpp"

namespace sbmcov::app {

/// Ordered `key = value` entries; repeated keys keep every value.
struct KeyValues {
    std::vector<std::pair<std::string, std::string>> entries;
    int line_of_first(const std::string& key) const;
    bool has(const std::string& key) const;
    std::string get(const std::string& key) const;
    std::vector<std::string> all(const std::string& key) const;
};

/// Reads `key = value` lines; `#` starts a comment. Throws ConfigError.
KeyValues read_key_values(std::istream& in);
KeyValues read_key_values_file(const std::string& path);

/// Builds a model from the keys K, pi, nu, link, rho, homophily, covariate, beta,
/// or from the preset `design = 1..5`.
SbmSpec spec_from(const KeyValues& kv);
/// Builds a Monte Carlo design: spec keys plus name, n, replicates, seed,
/// estimator, jobs, rho_exponent, d, cluster, n_init.
McDesign design_from(const KeyValues& kv);

SbmSpec read_spec(const std::string& path);
McDesign read_design(const std::string& path);

/// Whitespace- or comma-separated numbers.
std::vector<double> parse_numbers(const std::string& text);

}  // namespace sbmcov::app
