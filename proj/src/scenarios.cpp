#include "seqrank/scenarios.hpp"

#include <cmath>

#include "seqrank/grid.hpp"

namespace seqrank {

Scenario scenario_from_name(const std::string& name) {
  if (name == "checkerboard") return Scenario::checkerboard;
  if (name == "circular") return Scenario::circular;
  if (name == "linear") return Scenario::linear;
  if (name == "local") return Scenario::local;
  if (name == "parabolic") return Scenario::parabolic;
  if (name == "sine") return Scenario::sine;
  throw InvalidInput("unknown scenario: " + name);
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::checkerboard: return "checkerboard";
    case Scenario::circular: return "circular";
    case Scenario::linear: return "linear";
    case Scenario::local: return "local";
    case Scenario::parabolic: return "parabolic";
    case Scenario::sine: return "sine";
  }
  return "linear";
}

ScenarioStream::ScenarioStream(const ScenarioSpec& spec)
    : spec_(spec), rng_(spec.seed) {
  if (spec.noise < 0 || spec.noise > 10) {
    throw InvalidInput("noise level must lie in 0..10");
  }
  sigma_ = static_cast<double>(spec.noise) / 40.0;
}

std::pair<double, double> ScenarioStream::next() {
  switch (spec_.name) {
    case Scenario::linear: {
      const double x = rng_.uniform_open();
      return {x, x + 6.0 * sigma_ * rng_.normal()};
    }
    case Scenario::parabolic: {
      const double x = rng_.uniform_open();
      return {x, (x - 0.5) * (x - 0.5) + 1.5 * sigma_ * rng_.normal()};
    }
    case Scenario::sine: {
      const double x = rng_.uniform_open();
      return {x, std::sin(4.0 * M_PI * x) + 8.0 * sigma_ * rng_.normal()};
    }
    case Scenario::circular: {
      const double theta = -M_PI + 2.0 * M_PI * rng_.uniform_open();
      const double x = std::cos(theta) + 2.5 * sigma_ * rng_.normal();
      const double y = std::sin(theta) + 2.5 * sigma_ * rng_.normal();
      return {x, y};
    }
    case Scenario::checkerboard: {
      // W ~ U{1,2,3}; V1 ~ U{2,4}; V2 ~ U{1,3,5}; noise scaled by 4 on Y.
      const int w =
          1 + std::min(2, static_cast<int>(3.0 * rng_.uniform_open()));
      const double x = static_cast<double>(w) + sigma_ * rng_.normal();
      double v;
      if (w == 2) {
        v = rng_.uniform_open() < 0.5 ? 2.0 : 4.0;
      } else {
        v = 1.0 + 2.0 * std::min(2, static_cast<int>(3.0 * rng_.uniform_open()));
      }
      return {x, v + 4.0 * sigma_ * rng_.normal()};
    }
    case Scenario::local: {
      const double g1 = 0.5 * rng_.normal();
      const double g2 = 0.5 * rng_.normal();
      const double x = g1;
      const bool inside = g1 >= 0.0 && g1 <= 1.0 && g2 >= 0.0 && g2 <= 1.0;
      const double y = inside ? x + sigma_ * rng_.normal() : g2;
      return {x, y};
    }
  }
  throw InvalidInput("unreachable scenario");
}

std::vector<std::pair<double, double>> generate(const ScenarioSpec& spec) {
  ScenarioStream stream(spec);
  std::vector<std::pair<double, double>> out;
  out.reserve(static_cast<std::size_t>(spec.n));
  for (std::int64_t i = 0; i < spec.n; ++i) out.push_back(stream.next());
  return out;
}

double kl_grid_estimate(std::span<const std::pair<double, double>> samples,
                        int d) {
  if (d < 1) throw InvalidDepth("depth must be positive");
  const std::int64_t need = static_cast<std::int64_t>(d) * d;
  if (static_cast<std::int64_t>(samples.size()) < need) {
    throw InvalidInput("need at least d^2 samples");
  }
  std::vector<double> counts(static_cast<std::size_t>(d) * d, 0.0);
  for (const auto& [r, s] : samples) {
    const BinIndex cell = bin_index(r, s, d);
    counts[static_cast<std::size_t>(cell.k) * d + cell.l] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  const double dd = static_cast<double>(d) * static_cast<double>(d);
  double kl = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double q = c / n;
      kl += q * std::log(q * dd);
    }
  }
  return kl;
}

}  // namespace seqrank
