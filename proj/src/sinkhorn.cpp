#include "seqrank/sinkhorn.hpp"

#include <utility>

namespace seqrank {

SinkhornProjector::SinkhornProjector(int d) : d_(d) {
  if (d < 1) throw InvalidDepth("projector depth must be positive");
  row_scale_ = Eigen::ArrayXd::Ones(d);
  col_scale_ = Eigen::ArrayXd::Ones(d);
  row_sums_ = Eigen::ArrayXd::Zero(d);
  col_sums_ = Eigen::ArrayXd::Zero(d);
  work_ = CellMatrix::Zero(d, d);
}

void SinkhornProjector::set_scales(Eigen::ArrayXd row, Eigen::ArrayXd col) {
  if (row.size() != d_ || col.size() != d_) {
    throw CorruptSnapshot("scaling vector has wrong length");
  }
  row_scale_ = std::move(row);
  col_scale_ = std::move(col);
}

const CellMatrix& SinkhornProjector::project(const CellMatrix& c, int max_iter,
                                             double tol_factor) {
  if (c.rows() != d_ || c.cols() != d_) {
    throw InvalidMatrix("cell matrix shape does not match projector depth");
  }
  if ((c <= 0.0).any()) {
    throw InvalidMatrix("cell matrix entries must be strictly positive");
  }
  const double target = 1.0 / static_cast<double>(d_);
  const double hi = tol_factor / static_cast<double>(d_);
  const double lo = 1.0 / (tol_factor * static_cast<double>(d_));

  work_ = c;
  work_.colwise() *= row_scale_;
  work_.rowwise() *= col_scale_.transpose();

  for (int iter = 0; iter < max_iter; ++iter) {
    row_sums_ = work_.rowwise().sum();
    const Eigen::ArrayXd row_fix = target / row_sums_;
    work_.colwise() *= row_fix;
    row_scale_ *= row_fix;

    col_sums_ = work_.colwise().sum();
    const Eigen::ArrayXd col_fix = target / col_sums_;
    work_.rowwise() *= col_fix.transpose();
    col_scale_ *= col_fix;

    row_sums_ = work_.rowwise().sum();
    col_sums_ = work_.colwise().sum();
    const bool rows_ok =
        (row_sums_ > lo).all() && (row_sums_ < hi).all();
    const bool cols_ok =
        (col_sums_ > lo).all() && (col_sums_ < hi).all();
    if (rows_ok && cols_ok) break;
  }

  const double total = work_.sum();
  work_ /= total;
  row_scale_ /= total;
  return work_;
}

CellMatrix project_uniform_margins(const CellMatrix& c, int max_iter,
                                   double tol_factor) {
  SinkhornProjector projector(static_cast<int>(c.rows()));
  return projector.project(c, max_iter, tol_factor);
}

double corrected_density(const CellMatrix& c_proj, BinIndex cell, int d) {
  return static_cast<double>(d) * static_cast<double>(d) *
         c_proj(cell.k, cell.l);
}

}  // namespace seqrank
