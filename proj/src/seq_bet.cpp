#include "seqrank/seq_bet.hpp"

#include <bit>
#include <cmath>

#include "seqrank/grid.hpp"
#include "seqrank/rank_engine.hpp"
#include "seqrank/util.hpp"

namespace seqrank {

namespace {

// Digit i (1-based, coarse to fine) of a rank corresponds to bit (k - i) of
// its cell index at depth 2^k. Maps a digit-subset mask to cell-bit space.
std::uint32_t cell_mask(std::uint32_t digit_mask, int k) {
  std::uint32_t out = 0;
  for (int i = 1; i <= k; ++i) {
    if (digit_mask & (1u << (i - 1))) out |= 1u << (k - i);
  }
  return out;
}

}  // namespace

bool InteractionRegion::cell_in_a1(int cx, int cy) const {
  const std::uint32_t mx = cell_mask(a_mask, k);
  const std::uint32_t my = cell_mask(b_mask, k);
  const int par = std::popcount(static_cast<std::uint32_t>(cx) & mx) +
                  std::popcount(static_cast<std::uint32_t>(cy) & my);
  return (par & 1) == 0;
}

bool InteractionRegion::in_a1(double r, double s) const {
  const int dd = d();
  return cell_in_a1(bin_index_1d(r, dd), bin_index_1d(s, dd));
}

std::vector<InteractionRegion> interaction_regions(int k) {
  if (k < 1) throw InvalidDepth("BET order k must be >= 1");
  if (k > 16) throw InvalidDepth("BET order k too large");
  const std::uint32_t m = (1u << k) - 1;
  std::vector<InteractionRegion> out;
  out.reserve(static_cast<std::size_t>(m) * m);
  for (std::uint32_t a = 1; a <= m; ++a) {
    for (std::uint32_t b = 1; b <= m; ++b) {
      out.push_back(InteractionRegion{k, a, b});
    }
  }
  return out;
}

BetState::BetState(int k, double c0, std::int64_t n_act)
    : k_(k), d_(1 << k), c0_(c0), n_act_(n_act < 0 ? (1 << k) : n_act) {
  if (!(c0 > 0.0)) throw ConfigError("initial count c0 must be positive");
  regions_ = interaction_regions(k);
  count_a1_.assign(regions_.size(), 0.0);
  log_m_m_.assign(regions_.size(), 0.0);
  p1_scratch_.resize(regions_.size());
}

void BetState::count_point(int cx, int cy, double w) {
  for (std::size_t m = 0; m < regions_.size(); ++m) {
    if (regions_[m].cell_in_a1(cx, cy)) count_a1_[m] += w;
  }
}

void BetState::refresh_average() {
  log_m_avg_ =
      log_sum_exp(log_m_m_) - std::log(static_cast<double>(log_m_m_.size()));
}

void BetState::backfill_from_buffer() {
  std::vector<double> xs(buffer_.size()), ys(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    xs[i] = buffer_[i].first;
    ys[i] = buffer_[i].second;
  }
  const std::vector<double> rx = batch_ranks(xs);
  const std::vector<double> ry = batch_ranks(ys);
  for (std::size_t i = 0; i < buffer_.size(); ++i) {
    count_point(bin_index_1d(rx[i], d_), bin_index_1d(ry[i], d_), 1.0);
  }
  buffer_.clear();
  buffer_.shrink_to_fit();
}

double BetState::update(double r, double s) {
  if (n_seen_ < n_act_) {
    if (!std::isfinite(r) || !std::isfinite(s)) {
      throw InvalidRank("non-finite buffered observation");
    }
    buffer_.emplace_back(r, s);
    n_seen_ += 1;
    if (n_seen_ == n_act_) backfill_from_buffer();
    return 0.0;
  }
  const int cx = bin_index_1d(r, d_);
  const int cy = bin_index_1d(s, d_);
  const double denom = static_cast<double>(n_seen_) + 2.0 * c0_;
  for (std::size_t m = 0; m < regions_.size(); ++m) {
    const bool a1 = regions_[m].cell_in_a1(cx, cy);
    const double cnt =
        a1 ? count_a1_[m] : static_cast<double>(n_seen_) - count_a1_[m];
    log_m_m_[m] += std::log(2.0 * (cnt + c0_) / denom);
    if (a1) count_a1_[m] += 1.0;
  }
  n_seen_ += 1;
  refresh_average();
  return log_m_avg_;
}

double BetState::update_expected(const AxisOverlap& ox, const AxisOverlap& oy) {
  if (n_seen_ < n_act_) {
    throw InvalidInput("expected-count update before activation");
  }
  std::fill(p1_scratch_.begin(), p1_scratch_.end(), 0.0);
  for (int j = 0; j < oy.size(); ++j) {
    for (int i = 0; i < ox.size(); ++i) {
      const double w = ox.weights[i] * oy.weights[j];
      const int cx = ox.first + i;
      const int cy = oy.first + j;
      for (std::size_t m = 0; m < regions_.size(); ++m) {
        if (regions_[m].cell_in_a1(cx, cy)) p1_scratch_[m] += w;
      }
    }
  }
  const double denom = static_cast<double>(n_seen_) + 2.0 * c0_;
  for (std::size_t m = 0; m < regions_.size(); ++m) {
    const double p1 = p1_scratch_[m];
    const double h1 = count_a1_[m] + c0_;
    const double h2 = static_cast<double>(n_seen_) - count_a1_[m] + c0_;
    log_m_m_[m] += std::log(2.0 * (p1 * h1 + (1.0 - p1) * h2) / denom);
    count_a1_[m] += p1;
  }
  n_seen_ += 1;
  refresh_average();
  return log_m_avg_;
}

void BetState::set_state(std::vector<double> count_a1,
                         std::vector<double> log_m_m, std::int64_t n_seen,
                         std::vector<std::pair<double, double>> buffer) {
  if (count_a1.size() != regions_.size() || log_m_m.size() != regions_.size()) {
    throw CorruptSnapshot("BET state length mismatch");
  }
  count_a1_ = std::move(count_a1);
  log_m_m_ = std::move(log_m_m);
  n_seen_ = n_seen;
  buffer_ = std::move(buffer);
  if (n_seen_ >= n_act_) {
    refresh_average();
  } else {
    log_m_avg_ = 0.0;
  }
}

}  // namespace seqrank
