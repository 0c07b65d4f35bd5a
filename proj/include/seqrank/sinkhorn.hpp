#pragma once

#include <Eigen/Core>

#include "seqrank/errors.hpp"
#include "seqrank/grid.hpp"

namespace seqrank {

using CellMatrix = Eigen::ArrayXXd;

// Iterative proportional fitting onto uniform margins 1/d. One iteration is
// a full row sweep followed by a column sweep; the margin check runs after
// each full sweep. The output is renormalized to total mass 1, which keeps
// the corrected density integrating to one.
CellMatrix project_uniform_margins(const CellMatrix& c, int max_iter = 20,
                                   double tol_factor = 1.001);

// d^2 * c_proj[cell]
double corrected_density(const CellMatrix& c_proj, BinIndex cell, int d);

// Stateful projector that starts each projection from the previous run's
// diagonal scalings. The output is always diag(row) * c * diag(col), so
// cross-ratios of the input are preserved exactly.
class SinkhornProjector {
 public:
  explicit SinkhornProjector(int d);

  const CellMatrix& project(const CellMatrix& c, int max_iter = 20,
                            double tol_factor = 1.001);
  const CellMatrix& last() const { return work_; }

  const Eigen::ArrayXd& row_scale() const { return row_scale_; }
  const Eigen::ArrayXd& col_scale() const { return col_scale_; }
  void set_scales(Eigen::ArrayXd row, Eigen::ArrayXd col);

 private:
  int d_;
  Eigen::ArrayXd row_scale_;
  Eigen::ArrayXd col_scale_;
  Eigen::ArrayXd row_sums_;
  Eigen::ArrayXd col_sums_;
  CellMatrix work_;
};

}  // namespace seqrank
