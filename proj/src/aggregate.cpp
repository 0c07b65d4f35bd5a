#include "seqrank/aggregate.hpp"

#include <algorithm>
#include <cmath>

#include "seqrank/util.hpp"

namespace seqrank {

AggregatorConfig default_aggregator_config(double eta) {
  AggregatorConfig cfg;
  cfg.depths = {2, 4, 8, 16};
  cfg.weights = {0.25, 0.25, 0.25, 0.25};
  cfg.w0 = (eta == 0.0) ? 0.2 : 0.0;
  cfg.eta = eta;
  return cfg;
}

Aggregator::Aggregator(AggregatorConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.depths.empty()) throw ConfigError("no depths configured");
  std::vector<int> sorted = cfg_.depths;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] < 1) throw ConfigError("depths must be positive");
    if (i > 0 && sorted[i] == sorted[i - 1]) {
      throw ConfigError("depths must be distinct");
    }
  }
  if (cfg_.weights.empty()) {
    cfg_.weights.assign(cfg_.depths.size(),
                        1.0 / static_cast<double>(cfg_.depths.size()));
  }
  if (cfg_.weights.size() != cfg_.depths.size()) {
    throw ConfigError("weights and depths must have equal length");
  }
  double total = 0.0;
  for (double w : cfg_.weights) {
    if (!(w > 0.0)) throw ConfigError("weights must be positive");
    total += w;
  }
  for (double& w : cfg_.weights) w /= total;
  if (!(cfg_.w0 >= 0.0 && cfg_.w0 < 1.0)) {
    throw ConfigError("w0 must lie in [0,1)");
  }
  if (!(cfg_.eta >= 0.0)) throw ConfigError("eta must be non-negative");

  log_w_.resize(cfg_.weights.size());
  for (std::size_t i = 0; i < cfg_.weights.size(); ++i) {
    log_w_[i] = std::log(cfg_.weights[i]);
  }
  log_m_d_.assign(cfg_.depths.size(), 0.0);
  scratch_.resize(cfg_.depths.size());
}

double Aggregator::step(std::span<const double> per_depth_log_density) {
  if (per_depth_log_density.size() != log_m_d_.size()) {
    throw InvalidInput("per-depth input length does not match depths");
  }
  double inc;
  if (cfg_.eta == 0.0) {
    double mix = 0.0;
    for (std::size_t i = 0; i < log_m_d_.size(); ++i) {
      mix += cfg_.weights[i] * std::exp(per_depth_log_density[i]);
    }
    inc = std::log(cfg_.w0 + (1.0 - cfg_.w0) * mix);
  } else {
    // log-sum-exp over log w_d + eta log M_{n-1}^(d) (+ log f_d)
    for (std::size_t i = 0; i < log_m_d_.size(); ++i) {
      scratch_[i] = log_w_[i] + cfg_.eta * log_m_d_[i];
    }
    const double denom = log_sum_exp(scratch_);
    for (std::size_t i = 0; i < log_m_d_.size(); ++i) {
      scratch_[i] += per_depth_log_density[i];
    }
    inc = log_sum_exp(scratch_) - denom;
  }
  for (std::size_t i = 0; i < log_m_d_.size(); ++i) {
    log_m_d_[i] += per_depth_log_density[i];
  }
  log_m_ += inc;
  return inc;
}

void Aggregator::set_state(std::span<const double> per_depth_log_m,
                           double log_m_agg) {
  if (per_depth_log_m.size() != log_m_d_.size()) {
    throw CorruptSnapshot("per-depth ledger length mismatch");
  }
  std::copy(per_depth_log_m.begin(), per_depth_log_m.end(), log_m_d_.begin());
  log_m_ = log_m_agg;
}

}  // namespace seqrank
