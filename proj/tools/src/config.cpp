#include "sbmcov_app/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "sbmcov/error.hpp"

namespace sbmcov::app {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> words(const std::string& text) {
    std::string t = text;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::istringstream is(t);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

double to_double(const std::string& key, const std::string& s) {
    try {
        size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(ErrorKind::ConfigError, "key '" + key + "': '" + s + "' is not a number");
    }
}

long to_long(const std::string& key, const std::string& s) {
    const double v = to_double(key, s);
    if (v != static_cast<double>(static_cast<long>(v))) {
        fail(ErrorKind::ConfigError, "key '" + key + "': '" + s + "' is not an integer");
    }
    return static_cast<long>(v);
}

const std::vector<std::string> spec_keys = {"K", "pi", "nu", "link", "rho", "homophily", "covariate", "beta", "design"};
const std::vector<std::string> design_keys = {"name", "n", "replicates", "seed", "estimator", "jobs",
                                              "rho_exponent", "d", "dim_rule", "n_init", "cluster", "compute_se"};

void reject_unknown(const KeyValues& kv, bool design) {
    for (const auto& [k, v] : kv.entries) {
        const bool known = std::find(spec_keys.begin(), spec_keys.end(), k) != spec_keys.end() ||
                           (design && std::find(design_keys.begin(), design_keys.end(), k) != design_keys.end());
        if (!known) fail(ErrorKind::ConfigError, "unknown key '" + k + "'");
    }
}

}  // namespace

int KeyValues::line_of_first(const std::string& key) const {
    for (size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].first == key) return static_cast<int>(i);
    }
    return -1;
}

bool KeyValues::has(const std::string& key) const { return line_of_first(key) >= 0; }

std::string KeyValues::get(const std::string& key) const {
    const auto v = all(key);
    if (v.empty()) fail(ErrorKind::ConfigError, "missing key '" + key + "'");
    if (v.size() > 1) fail(ErrorKind::ConfigError, "key '" + key + "' is given more than once");
    return v.front();
}

std::vector<std::string> KeyValues::all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries) {
        if (k == key) out.push_back(v);
    }
    return out;
}

KeyValues read_key_values(std::istream& in) {
    KeyValues kv;
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            fail(ErrorKind::ConfigError, "line " + std::to_string(number) + ": expected 'key = value'");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) fail(ErrorKind::ConfigError, "line " + std::to_string(number) + ": empty key");
        kv.entries.emplace_back(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues read_key_values_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::ConfigError, "cannot open config file '" + path + "'");
    return read_key_values(in);
}

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    for (const auto& w : words(text)) out.push_back(to_double("list", w));
    return out;
}

SbmSpec spec_from(const KeyValues& kv) {
    SbmSpec spec;
    if (kv.has("design")) {
        spec = design_spec(static_cast<int>(to_long("design", kv.get("design"))));
        if (kv.has("rho")) spec.rho = to_double("rho", kv.get("rho"));
        spec.validate();
        return spec;
    }
    spec.K = static_cast<int>(to_long("K", kv.get("K")));
    if (spec.K < 1) fail(ErrorKind::ConfigError, "K must be positive");
    if (kv.has("pi")) {
        const auto pi = parse_numbers(kv.get("pi"));
        spec.pi = Eigen::Map<const VectorXd>(pi.data(), static_cast<Eigen::Index>(pi.size()));
    } else {
        spec.pi = VectorXd::Constant(spec.K, 1.0 / spec.K);
    }
    std::vector<std::vector<double>> rows;
    std::istringstream rs(kv.get("nu"));
    for (std::string row; std::getline(rs, row, ';');) rows.push_back(parse_numbers(row));
    if (static_cast<int>(rows.size()) != spec.K) fail(ErrorKind::ConfigError, "nu needs K rows separated by ';'");
    const size_t d = rows.front().size();
    if (d == 0) fail(ErrorKind::ConfigError, "nu rows must be non-empty");
    spec.nu.resize(spec.K, static_cast<Eigen::Index>(d));
    for (int k = 0; k < spec.K; ++k) {
        if (rows[k].size() != d) fail(ErrorKind::ConfigError, "nu rows must have equal length");
        for (size_t j = 0; j < d; ++j) spec.nu(k, static_cast<Eigen::Index>(j)) = rows[k][j];
    }
    spec.link = Link{kv.has("link") ? parse_link(kv.get("link")) : LinkKind::Identity};
    if (kv.has("rho")) spec.rho = to_double("rho", kv.get("rho"));
    if (kv.has("homophily")) {
        const std::string h = kv.get("homophily");
        if (h == "shared") {
            spec.homophily = Homophily::Shared;
        } else if (h == "differential") {
            spec.homophily = Homophily::Differential;
        } else {
            fail(ErrorKind::ConfigError, "homophily must be shared or differential");
        }
    }
    for (const auto& text : kv.all("covariate")) {
        const auto w = words(text);
        if (w.empty()) fail(ErrorKind::ConfigError, "empty covariate entry");
        std::vector<double> v;
        for (size_t i = 1; i < w.size(); ++i) v.push_back(to_double("covariate", w[i]));
        if (w[0] == "bernoulli") {
            if (v.size() == 1) v.assign(spec.K, v[0]);
            if (static_cast<int>(v.size()) != spec.K) {
                fail(ErrorKind::ConfigError, "bernoulli covariate takes one probability or one per block");
            }
            spec.covariates.push_back(CovariateLaw::per_block(v));
        } else if (w[0] == "pair") {
            if (v.size() != 3) fail(ErrorKind::ConfigError, "pair covariate takes b_z b_w correlation");
            spec.covariates.push_back(CovariateLaw::pair(v[0], v[1], v[2]));
        } else {
            fail(ErrorKind::ConfigError, "unknown covariate law '" + w[0] + "'");
        }
    }
    if (kv.has("beta")) spec.beta = parse_numbers(kv.get("beta"));
    spec.validate();
    return spec;
}

McDesign design_from(const KeyValues& kv) {
    McDesign d;
    d.spec = spec_from(kv);
    if (kv.has("name")) d.name = kv.get("name");
    for (double v : parse_numbers(kv.get("n"))) {
        if (v <= 0 || v != static_cast<double>(static_cast<int>(v))) {
            fail(ErrorKind::ConfigError, "n values must be positive integers");
        }
        d.n_values.push_back(static_cast<int>(v));
    }
    if (kv.has("replicates")) d.replicates = static_cast<int>(to_long("replicates", kv.get("replicates")));
    if (d.replicates < 1) fail(ErrorKind::ConfigError, "replicates must be at least 1");
    if (kv.has("seed")) d.seed = static_cast<std::uint64_t>(to_long("seed", kv.get("seed")));
    if (kv.has("estimator")) d.estimators = parse_estimator(kv.get("estimator"));
    if (kv.has("jobs")) d.jobs = static_cast<int>(to_long("jobs", kv.get("jobs")));
    if (kv.has("rho_exponent")) d.rho_exponent = to_double("rho_exponent", kv.get("rho_exponent"));
    if (kv.has("d")) d.fit.d = static_cast<int>(to_long("d", kv.get("d")));
    if (kv.has("dim_rule")) d.fit.dim_rule = parse_dimension_rule(kv.get("dim_rule"));
    if (kv.has("n_init")) {
        d.fit.gmm.n_init = static_cast<int>(to_long("n_init", kv.get("n_init")));
        d.fit.kmeans.n_init = d.fit.gmm.n_init;
    }
    if (kv.has("cluster")) {
        const std::string c = kv.get("cluster");
        if (c == "gmm") {
            d.fit.cluster = ClusterMethod::Gmm;
        } else if (c == "kmeans") {
            d.fit.cluster = ClusterMethod::KMeans;
        } else {
            fail(ErrorKind::ConfigError, "cluster must be gmm or kmeans");
        }
    }
    if (kv.has("compute_se")) d.fit.compute_se = kv.get("compute_se") != "false";
    return d;
}

SbmSpec read_spec(const std::string& path) {
    const KeyValues kv = read_key_values_file(path);
    reject_unknown(kv, false);
    return spec_from(kv);
}

McDesign read_design(const std::string& path) {
    const KeyValues kv = read_key_values_file(path);
    reject_unknown(kv, true);
    return design_from(kv);
}

}  // namespace sbmcov::app
