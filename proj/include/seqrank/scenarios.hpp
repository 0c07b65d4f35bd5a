#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqrank/errors.hpp"
#include "seqrank/rng.hpp"

namespace seqrank {

enum class Scenario { checkerboard, circular, linear, local, parabolic, sine };

Scenario scenario_from_name(const std::string& name);
std::string scenario_name(Scenario s);

// One of the six benchmark generators with noise level l (sigma = l/40).
// l = 0 is admitted as the degenerate noise-free limit.
struct ScenarioSpec {
  Scenario name = Scenario::linear;
  int noise = 1;
  std::int64_t n = 0;  // sample budget; informational for streaming use
  std::uint64_t seed = 1;
};

class ScenarioStream {
 public:
  explicit ScenarioStream(const ScenarioSpec& spec);
  std::pair<double, double> next();
  const ScenarioSpec& spec() const { return spec_; }

 private:
  ScenarioSpec spec_;
  CounterRng rng_;
  double sigma_;
};

std::vector<std::pair<double, double>> generate(const ScenarioSpec& spec);

// Plug-in Kullback-Leibler divergence of the binned empirical distribution
// of samples on [0,1]^2 against uniform: sum q_hat log(q_hat d^2).
double kl_grid_estimate(std::span<const std::pair<double, double>> samples,
                        int d);

}  // namespace seqrank
