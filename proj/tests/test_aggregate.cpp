#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "seqrank/aggregate.hpp"
#include "seqrank/grid.hpp"
#include "seqrank/rng.hpp"

using namespace seqrank;

TEST_CASE("default configs") {
  const AggregatorConfig m0 = default_aggregator_config(0.0);
  CHECK(m0.depths == std::vector<int>{2, 4, 8, 16});
  CHECK(m0.w0 == doctest::Approx(0.2));
  for (double w : m0.weights) CHECK(w == doctest::Approx(0.25));
  // effective per-depth weight (1 - w0) * w_d = 0.2
  CHECK((1.0 - m0.w0) * m0.weights[0] == doctest::Approx(0.2));

  const AggregatorConfig m1 = default_aggregator_config(1.0);
  CHECK(m1.w0 == 0.0);
  for (double w : m1.weights) CHECK(w == doctest::Approx(0.25));

  Aggregator custom(AggregatorConfig{{2, 4}, {0.6, 0.4}, 0.0, 1.0});
  CHECK(custom.config().weights[0] == doctest::Approx(0.6));
  CHECK(custom.config().weights[1] == doctest::Approx(0.4));

  Aggregator unnormalized(AggregatorConfig{{2, 4}, {3.0, 2.0}, 0.0, 1.0});
  CHECK(unnormalized.config().weights[0] == doctest::Approx(0.6));
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{}, {}, 0.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{2, 2}, {}, 0.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{2, 4}, {0.5}, 0.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{2}, {-1.0}, 0.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{2}, {1.0}, 1.0, 0.0}),
                  ConfigError);
  CHECK_THROWS_AS(Aggregator(AggregatorConfig{{2}, {1.0}, 0.0, -0.5}),
                  ConfigError);
  Aggregator ok(default_aggregator_config());
  CHECK_THROWS_AS(ok.step(std::vector<double>{0.0}), InvalidInput);
}

TEST_CASE("inactive depths contribute increment zero") {
  Aggregator agg(default_aggregator_config(0.0));
  const std::vector<double> ones_logged(4, 0.0);
  CHECK(agg.step(ones_logged) == doctest::Approx(0.0));
  CHECK(agg.log_m() == 0.0);
}

TEST_CASE("eta=1 weighted-sum identity on one step") {
  Aggregator agg(AggregatorConfig{{2, 4}, {0.5, 0.5}, 0.0, 1.0});
  const std::vector<double> logf{std::log(2.0), std::log(4.0)};
  agg.step(logf);
  CHECK(std::exp(agg.log_m()) == doctest::Approx(3.0));
}

TEST_CASE("eta=0 hand example") {
  Aggregator agg(AggregatorConfig{{2, 4, 8, 16},
                                  {0.25, 0.25, 0.25, 0.25},
                                  0.2,
                                  0.0});
  const std::vector<double> logf{std::log(1.2), std::log(0.9), std::log(1.0),
                                 std::log(1.1)};
  const double inc = agg.step(logf);
  CHECK(inc == doctest::Approx(std::log(1.04)));
}

TEST_CASE("eta=1 equivalence with the martingale mixture over whole paths") {
  CounterRng rng(2);
  Aggregator agg(AggregatorConfig{{2, 4, 8}, {0.5, 0.3, 0.2}, 0.0, 1.0});
  std::vector<double> logf(3);
  std::vector<double> log_m_d(3, 0.0);
  for (int step = 0; step < 400; ++step) {
    for (int i = 0; i < 3; ++i) {
      logf[i] = 0.3 * rng.normal();
      log_m_d[i] += logf[i];
    }
    agg.step(logf);
    double mix = 0.0;
    const std::vector<double> w{0.5, 0.3, 0.2};
    for (int i = 0; i < 3; ++i) mix += w[i] * std::exp(log_m_d[i]);
    CHECK(agg.log_m() ==
          doctest::Approx(std::log(mix)).epsilon(1e-10));
    // lower bound: aggregate dominates every weighted component
    for (int i = 0; i < 3; ++i) {
      CHECK(agg.log_m() >= std::log(w[i]) + log_m_d[i] - 1e-12);
    }
  }
}

TEST_CASE("eta=0 with w0=0 reduces to the density mixture") {
  CounterRng rng(3);
  Aggregator agg(AggregatorConfig{{2, 4}, {0.7, 0.3}, 0.0, 0.0});
  std::vector<double> logf(2);
  for (int step = 0; step < 100; ++step) {
    logf[0] = 0.2 * rng.normal();
    logf[1] = 0.2 * rng.normal();
    const double inc = agg.step(logf);
    const double expect = std::log(0.7 * std::exp(logf[0]) +
                                   0.3 * std::exp(logf[1]));
    CHECK(inc == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("intermediate eta stays between the endpoints in structure") {
  // mirror weights concentrate on the best-performing depth as eta grows
  Aggregator agg(AggregatorConfig{{2, 4}, {0.5, 0.5}, 0.0, 2.0});
  std::vector<double> logf{std::log(1.5), std::log(0.7)};
  for (int step = 0; step < 30; ++step) agg.step(logf);
  // with depth 2 winning, the aggregate increment approaches log f_2
  const double inc = agg.step(logf);
  CHECK(inc > std::log(0.5 * 1.5 + 0.5 * 0.7));
  CHECK(inc <= std::log(1.5) + 1e-12);
}

TEST_CASE("null aggregate is a test martingale empirically") {
  // Band check at a short horizon (where the sample mean of the skewed M
  // concentrates) plus a self-normalized t-interval for E[M_200] = 1.
  CounterRng rng(808);
  const int reps = 5000;
  double mean20 = 0.0;
  double mean200 = 0.0, sq200 = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    GridState g2(2, 1.0, 2);
    GridState g4(4, 1.0, 4);
    Aggregator agg(AggregatorConfig{{2, 4}, {0.5, 0.5}, 0.2, 0.0});
    std::vector<double> logf(2);
    double m20 = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double r = rng.uniform_open();
      const double s = rng.uniform_open();
      logf[0] = g2.update(r, s);
      logf[1] = g4.update(r, s);
      agg.step(logf);
      if (i == 19) m20 = std::exp(agg.log_m());
    }
    mean20 += m20;
    const double m = std::exp(agg.log_m());
    mean200 += m;
    sq200 += m * m;
  }
  mean20 /= reps;
  mean200 /= reps;
  sq200 /= reps;
  CHECK(mean20 > 0.85);
  CHECK(mean20 < 1.15);
  const double se = std::sqrt((sq200 - mean200 * mean200) / reps);
  CHECK(std::abs(mean200 - 1.0) < 4.0 * se + 0.05);
}
