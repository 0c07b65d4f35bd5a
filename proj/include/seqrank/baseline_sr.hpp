#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include <Eigen/Core>

#include "seqrank/rank_engine.hpp"

namespace seqrank {

// log(1 + lambda * payoff), the multiplicative increment of the betting
// martingale.
double sr_increment(double lambda, double payoff);

struct SrConfig {
  double grid_spacing = 0.025;  // witness grid on the rank scale
  double lambda_max = 0.5;
};

// Paired betting baseline: observations are consumed in pairs, the payoff
// compares the indicator witness g(x,y) = 1{rank(x) <= u, rank(y) <= v} on
// the observed pairing against the Y-swapped pairing. The bet lambda follows
// an online Newton step on the log-wealth objective, clipped to
// [-lambda_max, lambda_max]; the witness maximizes cumulative payoff
// magnitude over the grid. Both are updated only after the current payoff,
// so every increment has conditional mean one under independence.
class SrState {
 public:
  explicit SrState(SrConfig cfg = {});

  // Buffers odd observations; on even ones returns the log increment.
  std::optional<double> observe(double x, double y);

  double log_m() const { return log_m_; }
  std::int64_t n_obs() const { return n_obs_; }
  std::int64_t n_pairs() const { return n_pairs_; }
  double lambda() const { return lambda_; }
  std::pair<double, double> witness() const;

 private:
  SrConfig cfg_;
  RankState rank_x_;
  RankState rank_y_;
  bool have_pending_ = false;
  double pend_x_ = 0.0;
  double pend_y_ = 0.0;
  std::int64_t n_obs_ = 0;
  std::int64_t n_pairs_ = 0;
  double log_m_ = 0.0;
  double lambda_ = 0.0;
  double ons_a_ = 1.0;
  int grid_n_ = 0;
  int best_i_ = 0;  // witness grid indices (0-based)
  int best_j_ = 0;
  Eigen::ArrayXXd err_;  // cumulative payoff per witness grid point
};

}  // namespace seqrank
