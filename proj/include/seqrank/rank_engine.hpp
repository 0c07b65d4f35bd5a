#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "seqrank/errors.hpp"

namespace seqrank {

// Sequential rank of one observation at its arrival time, stored as exact
// integer counts. Floating point enters only at the randomization boundary.
struct RankPair {
  std::int64_t le = 0;  // #{i <= n : x_i <= x}
  std::int64_t lt = 0;  // #{i <= n : x_i <  x}
  std::int64_t n = 0;

  double fhat() const { return static_cast<double>(le) / static_cast<double>(n); }
  double fhat_minus() const { return static_cast<double>(lt) / static_cast<double>(n); }
  std::int64_t multiplicity() const { return le - lt; }
  bool tied() const { return le - lt > 1; }
};

// Axis-aligned rectangle on [0,1]^2 over which the randomized rank pair is
// uniform given the sequential ranks (continuous data).
struct RankRectangle {
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
};

// Streaming empirical CDF for one coordinate. Order-statistic treap with
// per-node multiplicities; insert and count queries are O(log n).
class RankState {
 public:
  RankState() = default;

  // Inserts x and returns its sequential rank counts with n post-insert.
  RankPair insert_and_rank(double x);

  std::int64_t below(double x) const;  // #{stored values < x}
  std::int64_t at(double x) const;     // multiplicity of x
  std::int64_t le(double x) const { return below(x) + at(x); }
  std::int64_t size() const { return n_; }

  // Sorted distinct values with multiplicities (snapshot format).
  std::vector<std::pair<double, std::int64_t>> sorted_values() const;
  static RankState from_sorted_values(
      std::span<const std::pair<double, std::int64_t>> values);

 private:
  struct Node {
    double key;
    std::uint64_t prio;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int64_t mult = 1;
    std::int64_t size = 1;  // subtree total including multiplicities
  };

  std::int32_t insert_node(std::int32_t t, double x, bool& fresh);
  std::int32_t rotate_left(std::int32_t t);
  std::int32_t rotate_right(std::int32_t t);
  void update_size(std::int32_t t);
  std::int32_t build_balanced(
      std::span<const std::pair<double, std::int64_t>> values);

  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
  std::int64_t n_ = 0;
  std::uint64_t prio_counter_ = 0;
};

// R = u * fhat + (1 - u) * fhat_minus, for u in (0,1). Result lies in (0,1).
double randomize(const RankPair& pair, double u);

// Rectangle [fhat_x - 1/n, fhat_x] x [fhat_y - 1/n, fhat_y]; requires
// tie-free ranks on both coordinates.
RankRectangle rank_rectangle(const RankPair& px, const RankPair& py);

// Non-sequential ranks F_d(x_i) = #{j : x_j <= x_i} / d of a whole batch.
std::vector<double> batch_ranks(std::span<const double> values);

}  // namespace seqrank
