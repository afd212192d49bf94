#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sbmcov/estimator.hpp"
#include "sbmcov/simulate.hpp"

namespace sbmcov::app {

/// Report of one fit; timings live under the separate "timings" key.
nlohmann::ordered_json fit_report(const FitResult& r, const FitOptions& opts,
                                  const std::optional<std::vector<double>>& bootstrap = std::nullopt);

/// Tab-separated summary: design, n, estimator, then per parameter
/// |beta_hat - beta| and mcse, then mean seconds, mean ARI, used, divergences.
void write_mc_summary(const McSummary& s, std::ostream& out);

/// One row per node, one column per embedding dimension.
void write_embedding(const MatrixXd& Y, std::ostream& out);

}  // namespace sbmcov::app
