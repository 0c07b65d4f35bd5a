#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "seqrank/derandomize.hpp"
#include "seqrank/grid.hpp"
#include "seqrank/rng.hpp"
#include "seqrank/parallel.hpp"
#include "seqrank/session.hpp"
#include "seqrank/sinkhorn.hpp"

using namespace seqrank;

TEST_CASE("bin probabilities of basic rectangles") {
  const Eigen::ArrayXXd full = bin_probabilities({0.0, 1.0, 0.0, 1.0}, 2);
  for (int k = 0; k < 2; ++k) {
    for (int l = 0; l < 2; ++l) CHECK(full(k, l) == doctest::Approx(0.25));
  }

  const Eigen::ArrayXXd contained = bin_probabilities({0.5, 1.0, 0.5, 1.0}, 2);
  CHECK(contained(1, 1) == doctest::Approx(1.0));
  CHECK(contained(0, 0) == 0.0);
  CHECK(contained(0, 1) == 0.0);
  CHECK(contained(1, 0) == 0.0);

  const Eigen::ArrayXXd split = bin_probabilities({0.25, 0.75, 0.0, 0.5}, 2);
  CHECK(split(0, 0) == doctest::Approx(0.5));
  CHECK(split(1, 0) == doctest::Approx(0.5));
  CHECK(split(0, 1) == 0.0);
  CHECK(split(1, 1) == 0.0);

  CHECK_THROWS_AS(bin_probabilities({0.5, 0.5, 0.0, 1.0}, 2),
                  InvalidRectangle);
  CHECK_THROWS_AS(bin_probabilities({-0.1, 0.5, 0.0, 1.0}, 2),
                  InvalidRectangle);
}

TEST_CASE("probability vectors sum to one") {
  CounterRng rng(4);
  AxisOverlap ox, oy;
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 1 + static_cast<int>(rng.next_u64() % 40);
    const int k = 1 + static_cast<int>(rng.next_u64() % n);
    ox.compute((k - 1.0) / n, static_cast<double>(k) / n, 8);
    double total = 0.0;
    for (double w : ox.weights) total += w;
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("hand-computed expected increments") {
  GridState g(2, 1.0, 0);
  AxisOverlap ox, oy;

  // step 1: rectangle is the whole square
  ox.compute(0.0, 1.0, 2);
  oy.compute(0.0, 1.0, 2);
  const double inc1 = expected_increment(g, ox, oy);
  CHECK(inc1 == doctest::Approx(0.0));
  deposit_expected(g, ox, oy);
  g.commit_step(inc1);
  CHECK(g.counts()(0, 0) + 1.0 == doctest::Approx(1.25));

  // step 2: rectangle [0.5,1]^2 sits in one cell
  ox.compute(0.5, 1.0, 2);
  oy.compute(0.5, 1.0, 2);
  const double inc2 = expected_increment(g, ox, oy);
  CHECK(inc2 == doctest::Approx(std::log(4.0 * 1.25 / 5.0)));
  CHECK(inc2 == doctest::Approx(0.0));
}

TEST_CASE("uniform cell probabilities give increment zero") {
  CounterRng rng(8);
  GridState g(4, 1.0, 0);
  for (int i = 0; i < 37; ++i) {
    g.update(rng.uniform_open(), rng.uniform_open());
  }
  AxisOverlap ox, oy;
  ox.compute(0.0, 1.0, 4);
  oy.compute(0.0, 1.0, 4);
  CHECK(expected_increment(g, ox, oy) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("expected counts are conserved") {
  CounterRng rng(12);
  GridState g(4, 1.0, 0);
  AxisOverlap ox, oy;
  for (int n = 1; n <= 200; ++n) {
    const int kx = 1 + static_cast<int>(rng.next_u64() % n);
    const int ky = 1 + static_cast<int>(rng.next_u64() % n);
    ox.compute((kx - 1.0) / n, static_cast<double>(kx) / n, 4);
    oy.compute((ky - 1.0) / n, static_cast<double>(ky) / n, 4);
    const double inc = expected_increment(g, ox, oy);
    deposit_expected(g, ox, oy);
    g.commit_step(inc);
    CHECK(std::abs(g.counts().sum() - static_cast<double>(n)) < 1e-9);
  }
}

TEST_CASE("derandomized increment equals the Monte Carlo average") {
  CounterRng rng(77);
  AxisOverlap ox, oy;
  for (int rep = 0; rep < 5; ++rep) {
    const int d = (rep % 2 == 0) ? 2 : 4;
    GridState g(d, 1.0, 0);
    const int warm = 30 + static_cast<int>(rng.next_u64() % 50);
    for (int i = 0; i < warm; ++i) {
      g.update(rng.uniform_open(), rng.uniform_open());
    }
    const int n = warm + 1;
    const int kx = 1 + static_cast<int>(rng.next_u64() % n);
    const int ky = 1 + static_cast<int>(rng.next_u64() % n);
    const double x_lo = (kx - 1.0) / n, x_hi = static_cast<double>(kx) / n;
    const double y_lo = (ky - 1.0) / n, y_hi = static_cast<double>(ky) / n;
    ox.compute(x_lo, x_hi, d);
    oy.compute(y_lo, y_hi, d);

    SUBCASE("plain density") {
      const double inc = expected_increment(g, ox, oy);
      double mc = 0.0;
      const int draws = 100000;
      for (int t = 0; t < draws; ++t) {
        const double r = x_lo + (x_hi - x_lo) * rng.uniform_open();
        const double s = y_lo + (y_hi - y_lo) * rng.uniform_open();
        mc += g.density_at(bin_index(r, s, d));
      }
      mc /= draws;
      CHECK(std::abs(std::exp(inc) / mc - 1.0) < 0.01);
    }
    SUBCASE("sinkhorn-corrected density") {
      Eigen::ArrayXXd pseudo;
      g.pseudo_probabilities(pseudo);
      const CellMatrix proj = project_uniform_margins(pseudo);
      const double inc = corrected_expected_increment(proj, ox, oy, d);
      double mc = 0.0;
      const int draws = 100000;
      for (int t = 0; t < draws; ++t) {
        const double r = x_lo + (x_hi - x_lo) * rng.uniform_open();
        const double s = y_lo + (y_hi - y_lo) * rng.uniform_open();
        mc += corrected_density(proj, bin_index(r, s, d), d);
      }
      mc /= draws;
      CHECK(std::abs(std::exp(inc) / mc - 1.0) < 0.01);
    }
  }
}

TEST_CASE("derandomized and randomized null martingales have equal means") {
  // common rank paths, both update styles, batch means within 3 pooled SEs
  const int reps = 5000;
  const int horizon = 200;
  double mean_d = 0.0, sq_d = 0.0, mean_r = 0.0, sq_r = 0.0;
  AxisOverlap ox, oy;
  for (int rep = 0; rep < reps; ++rep) {
    CounterRng rng(derive_seed(31, static_cast<std::uint64_t>(rep)));
    GridState derand(2, 1.0, 0);
    GridState rand_grid(2, 1.0, 0);
    for (int n = 1; n <= horizon; ++n) {
      const int kx = 1 + static_cast<int>(rng.next_u64() % n);
      const int ky = 1 + static_cast<int>(rng.next_u64() % n);
      const double u = rng.uniform_open();
      const double v = rng.uniform_open();
      ox.compute((kx - 1.0) / n, static_cast<double>(kx) / n, 2);
      oy.compute((ky - 1.0) / n, static_cast<double>(ky) / n, 2);
      const double inc = expected_increment(derand, ox, oy);
      deposit_expected(derand, ox, oy);
      derand.commit_step(inc);
      rand_grid.update((kx - u) / n, (ky - v) / n);
    }
    const double md = std::exp(derand.log_m());
    const double mr = std::exp(rand_grid.log_m());
    mean_d += md;
    sq_d += md * md;
    mean_r += mr;
    sq_r += mr * mr;
  }
  mean_d /= reps;
  mean_r /= reps;
  const double var_d = sq_d / reps - mean_d * mean_d;
  const double var_r = sq_r / reps - mean_r * mean_r;
  const double pooled_se = std::sqrt((var_d + var_r) / reps);
  CHECK(std::abs(mean_d - mean_r) < 3.0 * pooled_se + 1e-9);
}

TEST_CASE("merged p-values stay anytime-valid on tied null data") {
  // discrete marginals, B randomized paths, arithmetic merge; the crossing
  // probability of p <= alpha may not exceed alpha (plus binomial noise)
  const int sims = 2000;
  const int horizon = 150;
  const double alpha = 0.05;
  std::vector<int> crossed(sims, 0);
  parallel_for(sims, 0, [&](std::int64_t rep) {
    SessionConfig cfg;
    cfg.depths = {2, 4};
    cfg.tie_policy = TiePolicy::randomized_paths;
    cfg.randomized_paths = 10;
    cfg.seed = derive_seed(11111, static_cast<std::uint64_t>(rep));
    cfg.max_n = horizon;
    Session session(cfg);
    CounterRng rng(derive_seed(22222, static_cast<std::uint64_t>(rep)));
    while (!session.stopped()) {
      const double x = std::floor(4.0 * rng.uniform_open());
      const double y = std::floor(4.0 * rng.uniform_open());
      session.step(x, y);
    }
    crossed[rep] = session.decision() == Decision::reject ? 1 : 0;
  });
  int total = 0;
  for (int c : crossed) total += c;
  const double rate = static_cast<double>(total) / sims;
  CHECK(rate <= alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / sims));
}

TEST_CASE("p-value merging") {
  const std::vector<double> maxima{10.0, 2.5};
  const MergedPValue arith = merge_pvalues(maxima, MergeMethod::arithmetic);
  CHECK(arith.value == doctest::Approx(0.5));
  CHECK(arith.b == 2);

  const MergedPValue geo = merge_pvalues(maxima, MergeMethod::geometric);
  CHECK(geo.value == doctest::Approx(std::exp(1.0) * 0.2));

  const std::vector<double> single{4.0};
  CHECK(merge_pvalues(single, MergeMethod::arithmetic).value ==
        doctest::Approx(0.5));

  const std::vector<double> tiny{1.0, 1.0};
  CHECK(merge_pvalues(tiny, MergeMethod::arithmetic).value == 1.0);  // clamped

  CHECK_THROWS_AS(merge_pvalues(std::vector<double>{}, MergeMethod::arithmetic),
                  InvalidInput);
  CHECK_THROWS_AS(
      merge_pvalues(std::vector<double>{0.5}, MergeMethod::arithmetic),
      InvalidInput);
}
