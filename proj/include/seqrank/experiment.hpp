#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "seqrank/baseline_sr.hpp"
#include "seqrank/scenarios.hpp"
#include "seqrank/session.hpp"

namespace seqrank {

// One replication row of a power/stopping-time experiment.
struct ReplicationRecord {
  std::int64_t rep = 0;
  bool rejected = false;
  std::int64_t stop_n = 0;       // rejection time, or the budget if none
  double final_log10_m = 0.0;
};

struct ExperimentResult {
  ScenarioSpec scenario;
  std::int64_t reps = 0;
  std::int64_t budget = 0;
  double threshold = 0.0;
  double rejection_rate = 0.0;
  double mean_stop_rejecting = 0.0;    // over rejecting paths only
  double median_stop_rejecting = 0.0;
  double mean_stop_imputed = 0.0;      // budget imputed for non-rejecting
  std::vector<ReplicationRecord> records;

  std::string to_csv() const;           // one row per replication
  std::string summary_json() const;
  // Rejection-rate-vs-N curve P(tau <= N) on horizons 1..budget (at the
  // given stride).
  std::string curve_csv(std::int64_t stride = 1) const;
};

// Truncated sequential test on `reps` independent scenario streams.
// Per-replication seeds derive from (scenario seed, rep) and
// (session seed, rep); the reduction is deterministic.
ExperimentResult run_experiment(const ScenarioSpec& spec,
                                const SessionConfig& session_cfg,
                                std::int64_t reps, std::int64_t budget,
                                int threads = 0);

// Same harness for the paired-betting baseline.
ExperimentResult run_sr_experiment(const ScenarioSpec& spec,
                                   const SrConfig& sr_cfg, double threshold,
                                   std::int64_t reps, std::int64_t budget,
                                   int threads = 0);

}  // namespace seqrank
