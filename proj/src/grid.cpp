#include "seqrank/grid.hpp"

#include <cmath>

#include "seqrank/rank_engine.hpp"

namespace seqrank {

int bin_index_1d(double r, int d) {
  if (!(r >= 0.0 && r <= 1.0)) {
    throw InvalidRank("rank outside [0,1]");
  }
  if (r <= 0.0) return 0;
  const int idx = static_cast<int>(std::ceil(r * d)) - 1;
  return idx < 0 ? 0 : (idx >= d ? d - 1 : idx);
}

BinIndex bin_index(double r, double s, int d) {
  return BinIndex{bin_index_1d(r, d), bin_index_1d(s, d)};
}

GridState::GridState(int d, double c0, std::int64_t n_act)
    : d_(d), c0_(c0), n_act_(n_act < 0 ? d : n_act) {
  if (d < 1) throw InvalidDepth("grid depth must be positive");
  if (!(c0 > 0.0)) throw ConfigError("initial count c0 must be positive");
  counts_ = Eigen::ArrayXXd::Zero(d, d);
  if (n_act_ > 0) buffer_.reserve(static_cast<std::size_t>(n_act_));
}

double GridState::density_at(BinIndex cell) const {
  const double dd = static_cast<double>(d_) * static_cast<double>(d_);
  return dd * (counts_(cell.k, cell.l) + c0_) /
         (static_cast<double>(n_seen_) + c0_ * dd);
}

void GridState::backfill_from_buffer() {
  std::vector<double> xs(buffer_.size()), ys(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    xs[i] = buffer_[i].first;
    ys[i] = buffer_[i].second;
  }
  const std::vector<double> rx = batch_ranks(xs);
  const std::vector<double> ry = batch_ranks(ys);
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    const BinIndex cell = bin_index(rx[i], ry[i], d_);
    counts_(cell.k, cell.l) += 1.0;
  }
  buffer_.clear();
  buffer_.shrink_to_fit();
}

double GridState::update(double r, double s) {
  if (n_seen_ < n_act_) {
    if (!std::isfinite(r) || !std::isfinite(s)) {
      throw InvalidRank("non-finite buffered observation");
    }
    buffer_.emplace_back(r, s);
    n_seen_ += 1;
    if (n_seen_ == n_act_) backfill_from_buffer();
    return 0.0;
  }
  const BinIndex cell = bin_index(r, s, d_);
  const double inc = std::log(density_at(cell));
  counts_(cell.k, cell.l) += 1.0;
  n_seen_ += 1;
  log_m_ += inc;
  return inc;
}

void GridState::pseudo_probabilities(Eigen::ArrayXXd& out) const {
  const double dd = static_cast<double>(d_) * static_cast<double>(d_);
  out = (counts_ + c0_) / (static_cast<double>(n_seen_) + c0_ * dd);
}

void GridState::set_state(Eigen::ArrayXXd counts, std::int64_t n_seen,
                          double log_m,
                          std::vector<std::pair<double, double>> buffer) {
  if (counts.rows() != d_ || counts.cols() != d_) {
    throw CorruptSnapshot("grid count matrix has wrong shape");
  }
  counts_ = std::move(counts);
  n_seen_ = n_seen;
  log_m_ = log_m;
  buffer_ = std::move(buffer);
}

double closed_form_log_m(const Eigen::ArrayXXd& counts, std::int64_t n, int d) {
  if (counts.rows() != d || counts.cols() != d) {
    throw InvalidCounts("count matrix shape does not match depth");
  }
  double total = 0.0;
  double log_fact = 0.0;
  for (Eigen::Index j = 0; j < counts.cols(); ++j) {
    for (Eigen::Index i = 0; i < counts.rows(); ++i) {
      const double b = counts(i, j);
      if (b < 0.0 || std::abs(b - std::round(b)) > 1e-9) {
        throw InvalidCounts("counts must be non-negative integers");
      }
      total += b;
      log_fact += std::lgamma(b + 1.0);
    }
  }
  if (std::abs(total - static_cast<double>(n)) > 1e-9) {
    throw InvalidCounts("counts do not sum to N");
  }
  const double dd = static_cast<double>(d) * static_cast<double>(d);
  return 2.0 * static_cast<double>(n) * std::log(static_cast<double>(d)) +
         std::lgamma(dd) - std::lgamma(static_cast<double>(n) + dd) + log_fact;
}

}  // namespace seqrank
