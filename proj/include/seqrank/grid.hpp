#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "seqrank/errors.hpp"

namespace seqrank {

struct BinIndex {
  int k = 0;  // x-axis cell
  int l = 0;  // y-axis cell
};

// Cell index for a rank in [0,1] on the depth-d grid. Cells are left-open,
// right-closed, with the bottom cell closed at 0; a value exactly on an
// interior edge belongs to the lower-index cell.
int bin_index_1d(double r, int d);
BinIndex bin_index(double r, double s, int d);

// Histogram density estimator and log test martingale for one depth d.
//
// counts excludes the c0 pseudo-counts; those enter at evaluation time. In
// randomized mode counts holds integers, in derandomized mode expected
// (fractional) counts. The first n_act observations are buffered and, once
// n_act is reached, back-filled as the batch ranks of the buffer; increments
// are zero until then.
class GridState {
 public:
  explicit GridState(int d, double c0 = 1.0, std::int64_t n_act = -1);

  // Randomized-mode step: log density at the cell of (r,s) evaluated before
  // the count increment. Returns 0 while buffering.
  double update(double r, double s);

  // d^2 * (counts[cell] + c0) / (n_seen + c0 * d^2)
  double density_at(BinIndex cell) const;

  bool active() const { return n_seen_ >= n_act_; }
  int d() const { return d_; }
  double c0() const { return c0_; }
  std::int64_t n_act() const { return n_act_; }
  std::int64_t n_seen() const { return n_seen_; }
  double log_m() const { return log_m_; }
  const Eigen::ArrayXXd& counts() const { return counts_; }

  // Pseudo-count cell probabilities (counts + c0) / (n_seen + c0 d^2);
  // the Sinkhorn correction projects this matrix.
  void pseudo_probabilities(Eigen::ArrayXXd& out) const;

  // Low-level hooks for expected-count (derandomized) updates.
  void deposit(int k, int l, double w) { counts_(k, l) += w; }
  void commit_step(double log_increment) {
    n_seen_ += 1;
    log_m_ += log_increment;
  }

  const std::vector<std::pair<double, double>>& buffered() const {
    return buffer_;
  }

  void set_state(Eigen::ArrayXXd counts, std::int64_t n_seen, double log_m,
                 std::vector<std::pair<double, double>> buffer);

 private:
  void backfill_from_buffer();

  int d_;
  double c0_;
  std::int64_t n_act_;
  std::int64_t n_seen_ = 0;
  double log_m_ = 0.0;
  Eigen::ArrayXXd counts_;
  std::vector<std::pair<double, double>> buffer_;
};

// log of the closed-form martingale value
//   d^{2N} (d^2-1)! / (N-1+d^2)! * prod_kl b_kl!
// for integer counts summing to N (c0 = 1). Oracle for accumulated updates.
double closed_form_log_m(const Eigen::ArrayXXd& counts, std::int64_t n, int d);

}  // namespace seqrank
