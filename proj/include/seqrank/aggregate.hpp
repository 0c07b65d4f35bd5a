#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqrank/errors.hpp"

namespace seqrank {

// Weighting across discretization depths. eta = 0 mixes densities with a
// constant floor w0; eta = 1 mixes martingales; general eta interpolates
// with weights proportional to w_d * (M^(d))^eta.
struct AggregatorConfig {
  std::vector<int> depths;
  std::vector<double> weights;  // normalized to sum 1 on construction
  double w0 = 0.0;              // used only when eta == 0
  double eta = 0.0;
};

// Depths 2,4,8,16; eta = 0: w0 = 0.2 and per-depth weight 0.25 (effective
// weight 0.2 per depth); eta = 1: equal weights 1/4.
AggregatorConfig default_aggregator_config(double eta = 0.0);

class Aggregator {
 public:
  explicit Aggregator(AggregatorConfig cfg);

  // One step: per-depth log density increments (0 for inactive depths),
  // aligned with config().depths. Returns the aggregate log increment.
  double step(std::span<const double> per_depth_log_density);

  double log_m() const { return log_m_; }
  std::span<const double> per_depth_log_m() const { return log_m_d_; }
  const AggregatorConfig& config() const { return cfg_; }

  void set_state(std::span<const double> per_depth_log_m, double log_m_agg);

 private:
  AggregatorConfig cfg_;
  std::vector<double> log_w_;    // log of normalized weights
  std::vector<double> log_m_d_;  // per-depth log martingale ledger
  std::vector<double> scratch_;
  double log_m_ = 0.0;
};

}  // namespace seqrank
