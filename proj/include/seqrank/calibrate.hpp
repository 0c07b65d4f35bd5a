#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "seqrank/session.hpp"

namespace seqrank {

struct CalibrationEntry {
  std::int64_t horizon = 0;
  double threshold = 0.0;  // L_{alpha,N}
  double reject_rate_ville = 0.0;  // P(max M >= 1/alpha) up to the horizon
  std::map<std::string, double> max_quantiles;  // quantiles of the running max
};

struct CalibrationTable {
  std::string fingerprint;
  double alpha = 0.05;
  std::int64_t reps = 0;
  std::uint64_t seed = 0;
  bool low_rep_warning = false;  // set when reps < 1000
  std::vector<CalibrationEntry> entries;

  std::string to_json() const;
  static CalibrationTable from_json(std::string_view payload);
};

// Hash of the session config modulo seed, threshold, and sample budget:
// everything that shapes the null law of the aggregate martingale path.
std::string config_fingerprint(const SessionConfig& cfg);

// Running maximum of the aggregate martingale over one synthetic null path
// of length N. Null paths draw the randomized ranks directly as iid
// uniforms, which is exact by distribution-freeness and skips the rank
// engines.
double simulate_null_running_max(const SessionConfig& cfg, std::int64_t n,
                                 std::uint64_t seed);

// Monte Carlo estimate of L_{alpha,N} on common random paths across the
// horizons. The quantile is the ceil((1-alpha)*reps) order statistic.
CalibrationTable calibrate(const SessionConfig& cfg, double alpha,
                           std::span<const std::int64_t> horizons,
                           std::int64_t reps, int threads = 0);

// Looks up L_{alpha,N} for a calibrated-threshold config; throws
// ConfigError when the table does not cover (config, alpha, N).
double resolve_threshold(const SessionConfig& cfg,
                         const CalibrationTable& table);

}  // namespace seqrank
