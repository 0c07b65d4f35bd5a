#include "seqrank/baseline_sr.hpp"

#include <algorithm>
#include <cmath>

namespace seqrank {

namespace {
// ONS learning rate 2 / (2 - log 3).
const double kOnsRate = 2.0 / (2.0 - std::log(3.0));
}  // namespace

double sr_increment(double lambda, double payoff) {
  return std::log1p(lambda * payoff);
}

SrState::SrState(SrConfig cfg) : cfg_(cfg) {
  if (!(cfg_.grid_spacing > 0.0 && cfg_.grid_spacing < 0.5)) {
    throw ConfigError("grid spacing must lie in (0, 0.5)");
  }
  if (!(cfg_.lambda_max > 0.0 && cfg_.lambda_max < 1.0)) {
    throw ConfigError("lambda_max must lie in (0,1)");
  }
  grid_n_ = static_cast<int>(std::round(1.0 / cfg_.grid_spacing)) - 1;
  err_ = Eigen::ArrayXXd::Zero(grid_n_, grid_n_);
  best_i_ = grid_n_ / 2;
  best_j_ = grid_n_ / 2;
}

std::pair<double, double> SrState::witness() const {
  return {(best_i_ + 1) * cfg_.grid_spacing, (best_j_ + 1) * cfg_.grid_spacing};
}

std::optional<double> SrState::observe(double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InvalidObservation("non-finite observation");
  }
  rank_x_.insert_and_rank(x);
  rank_y_.insert_and_rank(y);
  n_obs_ += 1;
  if (!have_pending_) {
    pend_x_ = x;
    pend_y_ = y;
    have_pending_ = true;
    return std::nullopt;
  }
  have_pending_ = false;

  // Ranks of all four coordinates at the current time; the swap symmetry
  // needs both pairings evaluated against the same empirical CDFs.
  const double nn = static_cast<double>(n_obs_);
  const double r1 = static_cast<double>(rank_x_.le(pend_x_)) / nn;
  const double r2 = static_cast<double>(rank_x_.le(x)) / nn;
  const double s1 = static_cast<double>(rank_y_.le(pend_y_)) / nn;
  const double s2 = static_cast<double>(rank_y_.le(y)) / nn;

  const auto [u, v] = witness();
  const double ax = (r1 <= u ? 1.0 : 0.0) - (r2 <= u ? 1.0 : 0.0);
  const double ay = (s1 <= v ? 1.0 : 0.0) - (s2 <= v ? 1.0 : 0.0);
  const double payoff = ax * ay;

  const double inc = sr_increment(lambda_, payoff);
  log_m_ += inc;
  n_pairs_ += 1;

  // Online Newton step on the log-wealth objective, then the witness scan;
  // both use only information up to and including this pair.
  const double z = -payoff / (1.0 + lambda_ * payoff);
  ons_a_ += z * z;
  lambda_ = std::clamp(lambda_ - kOnsRate * z / ons_a_, -cfg_.lambda_max,
                       cfg_.lambda_max);

  const double x_lo = std::min(r1, r2);
  const double x_hi = std::max(r1, r2);
  const double y_lo = std::min(s1, s2);
  const double y_hi = std::max(s1, s2);
  if (x_lo < x_hi && y_lo < y_hi) {
    const double band = ((r1 < r2) == (s1 < s2)) ? 1.0 : -1.0;
    for (int i = 0; i < grid_n_; ++i) {
      const double ui = (i + 1) * cfg_.grid_spacing;
      if (ui < x_lo || ui >= x_hi) continue;
      for (int j = 0; j < grid_n_; ++j) {
        const double vj = (j + 1) * cfg_.grid_spacing;
        if (vj < y_lo || vj >= y_hi) continue;
        err_(i, j) += band;
      }
    }
    double best = std::abs(err_(best_i_, best_j_));
    for (int j = 0; j < grid_n_; ++j) {
      for (int i = 0; i < grid_n_; ++i) {
        const double a = std::abs(err_(i, j));
        if (a > best) {
          best = a;
          best_i_ = i;
          best_j_ = j;
        }
      }
    }
  }
  return inc;
}

}  // namespace seqrank
