#include "seqrank/derandomize.hpp"

#include <algorithm>
#include <cmath>

namespace seqrank {

void AxisOverlap::compute(double lo, double hi, int d) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
    throw InvalidRectangle("interval must satisfy 0 <= lo < hi <= 1");
  }
  weights.clear();
  const double dd = static_cast<double>(d);
  int k0 = static_cast<int>(std::floor(lo * dd));
  if (k0 >= d) k0 = d - 1;
  int k1 = static_cast<int>(std::ceil(hi * dd)) - 1;
  if (k1 >= d) k1 = d - 1;
  if (k1 < k0) k1 = k0;

  double total = 0.0;
  for (int k = k0; k <= k1; ++k) {
    const double cell_lo = static_cast<double>(k) / dd;
    const double cell_hi = static_cast<double>(k + 1) / dd;
    const double w = std::min(hi, cell_hi) - std::max(lo, cell_lo);
    weights.push_back(w > 0.0 ? w : 0.0);
    total += weights.back();
  }
  // Trim zero-width edges so the block stays tight.
  while (!weights.empty() && weights.front() == 0.0) {
    weights.erase(weights.begin());
    ++k0;
  }
  while (!weights.empty() && weights.back() == 0.0) weights.pop_back();
  first = k0;
  for (double& w : weights) w /= total;
}

Eigen::ArrayXXd bin_probabilities(const RankRectangle& rect, int d) {
  AxisOverlap ox, oy;
  ox.compute(rect.x_lo, rect.x_hi, d);
  oy.compute(rect.y_lo, rect.y_hi, d);
  Eigen::ArrayXXd probs = Eigen::ArrayXXd::Zero(d, d);
  for (int j = 0; j < oy.size(); ++j) {
    for (int i = 0; i < ox.size(); ++i) {
      probs(ox.first + i, oy.first + j) = ox.weights[i] * oy.weights[j];
    }
  }
  return probs;
}

double expected_increment(const GridState& grid, const AxisOverlap& ox,
                          const AxisOverlap& oy) {
  const double dd =
      static_cast<double>(grid.d()) * static_cast<double>(grid.d());
  const Eigen::ArrayXXd& h = grid.counts();
  double acc = 0.0;
  for (int j = 0; j < oy.size(); ++j) {
    for (int i = 0; i < ox.size(); ++i) {
      acc += ox.weights[i] * oy.weights[j] *
             (h(ox.first + i, oy.first + j) + grid.c0());
    }
  }
  return std::log(acc * dd /
                  (static_cast<double>(grid.n_seen()) + grid.c0() * dd));
}

double corrected_expected_increment(const CellMatrix& c_proj,
                                    const AxisOverlap& ox,
                                    const AxisOverlap& oy, int d) {
  double acc = 0.0;
  for (int j = 0; j < oy.size(); ++j) {
    for (int i = 0; i < ox.size(); ++i) {
      acc += ox.weights[i] * oy.weights[j] * c_proj(ox.first + i, oy.first + j);
    }
  }
  return std::log(acc * static_cast<double>(d) * static_cast<double>(d));
}

void deposit_expected(GridState& grid, const AxisOverlap& ox,
                      const AxisOverlap& oy) {
  for (int j = 0; j < oy.size(); ++j) {
    for (int i = 0; i < ox.size(); ++i) {
      grid.deposit(ox.first + i, oy.first + j, ox.weights[i] * oy.weights[j]);
    }
  }
}

MergedPValue merge_pvalues(std::span<const double> per_seed_running_max,
                           MergeMethod method) {
  if (per_seed_running_max.empty()) {
    throw InvalidInput("merge_pvalues: empty input");
  }
  for (double m : per_seed_running_max) {
    if (!(m >= 1.0)) {
      throw InvalidInput("running maxima of a test martingale are >= 1");
    }
  }
  const double b = static_cast<double>(per_seed_running_max.size());
  double raw = 0.0;
  if (method == MergeMethod::arithmetic) {
    for (double m : per_seed_running_max) raw += 1.0 / m;
    raw *= 2.0 / b;
  } else {
    double log_acc = 0.0;
    for (double m : per_seed_running_max) log_acc -= std::log(m);
    raw = std::exp(1.0 + log_acc / b);
  }
  MergedPValue out;
  out.method = method;
  out.b = static_cast<int>(per_seed_running_max.size());
  out.value = std::min(1.0, raw);
  return out;
}

}  // namespace seqrank
