#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seqrank/derandomize.hpp"
#include "seqrank/errors.hpp"

namespace seqrank {

// One cross-interaction on the 2^k x 2^k grid: the sign function
//   sigma(r,s) = prod_{i in a} rad_i(r) * prod_{j in b} rad_j(s)
// over nonempty digit subsets a, b of {1..k}, where rad_i flips sign with
// the i-th binary digit of the rank. A1 = {sigma = +1} covers half the grid.
struct InteractionRegion {
  int k = 1;
  std::uint32_t a_mask = 1;  // bit i-1 <-> digit i of the first coordinate
  std::uint32_t b_mask = 1;

  int d() const { return 1 << k; }
  bool cell_in_a1(int cx, int cy) const;
  bool in_a1(double r, double s) const;
  int sign(double r, double s) const { return in_a1(r, s) ? 1 : -1; }
};

// The (2^k - 1)^2 cross-interactions for depth d = 2^k.
std::vector<InteractionRegion> interaction_regions(int k);

// Sequential binary expansion test state: one two-bin martingale per
// interaction (Bernoulli(1/2) null, initial count c0), averaged pointwise
// with equal weights. Buffering and batch-rank back-fill mirror GridState.
class BetState {
 public:
  explicit BetState(int k, double c0 = 1.0, std::int64_t n_act = -1);

  // Randomized-mode step; returns the averaged log martingale after the
  // update (0 while buffering).
  double update(double r, double s);

  // Derandomized step from axis overlaps of the rank rectangle.
  double update_expected(const AxisOverlap& ox, const AxisOverlap& oy);

  double log_m_avg() const { return log_m_avg_; }
  bool active() const { return n_seen_ >= n_act_; }
  std::int64_t n_seen() const { return n_seen_; }
  std::int64_t n_act() const { return n_act_; }
  int k() const { return k_; }
  int d() const { return d_; }
  double c0() const { return c0_; }

  const std::vector<InteractionRegion>& regions() const { return regions_; }
  std::span<const double> per_interaction_log_m() const { return log_m_m_; }
  std::span<const double> count_a1() const { return count_a1_; }
  const std::vector<std::pair<double, double>>& buffered() const {
    return buffer_;
  }

  void set_state(std::vector<double> count_a1, std::vector<double> log_m_m,
                 std::int64_t n_seen,
                 std::vector<std::pair<double, double>> buffer);

 private:
  void backfill_from_buffer();
  void count_point(int cx, int cy, double w);
  void refresh_average();

  int k_;
  int d_;
  double c0_;
  std::int64_t n_act_;
  std::int64_t n_seen_ = 0;
  std::vector<InteractionRegion> regions_;
  std::vector<double> count_a1_;  // per-interaction mass in A1
  std::vector<double> log_m_m_;   // per-interaction log martingale
  std::vector<double> p1_scratch_;
  double log_m_avg_ = 0.0;
  std::vector<std::pair<double, double>> buffer_;
};

}  // namespace seqrank
