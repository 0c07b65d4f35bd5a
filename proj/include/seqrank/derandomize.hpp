#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "seqrank/errors.hpp"
#include "seqrank/grid.hpp"
#include "seqrank/rank_engine.hpp"
#include "seqrank/sinkhorn.hpp"

namespace seqrank {

// Overlap of an interval [lo,hi] in [0,1] with the depth-d cells, as
// fractions of the interval length. Closed-form interval intersections,
// never sampled.
struct AxisOverlap {
  int first = 0;
  std::vector<double> weights;

  void compute(double lo, double hi, int d);
  int size() const { return static_cast<int>(weights.size()); }
};

// Cell probabilities of a rank rectangle: area overlap / rectangle area.
Eigen::ArrayXXd bin_probabilities(const RankRectangle& rect, int d);

// Derandomized log increment log[ d^2/(n+c0 d^2) * sum_kl p_kl (h_kl + c0) ]
// with h the grid's expected counts and n its current n_seen. Does not
// advance the grid.
double expected_increment(const GridState& grid, const AxisOverlap& ox,
                          const AxisOverlap& oy);

// Sinkhorn-corrected variant: log sum_kl p_kl * d^2 * c_proj[kl].
double corrected_expected_increment(const CellMatrix& c_proj,
                                    const AxisOverlap& ox,
                                    const AxisOverlap& oy, int d);

// h += p over the overlap block. Pair with GridState::commit_step.
void deposit_expected(GridState& grid, const AxisOverlap& ox,
                      const AxisOverlap& oy);

enum class MergeMethod { arithmetic, geometric };

struct MergedPValue {
  MergeMethod method = MergeMethod::arithmetic;
  int b = 0;
  double value = 1.0;  // clamped to (0,1]
};

// Merges anytime p-values 1/max_b across B randomization seeds.
MergedPValue merge_pvalues(std::span<const double> per_seed_running_max,
                           MergeMethod method);

}  // namespace seqrank
