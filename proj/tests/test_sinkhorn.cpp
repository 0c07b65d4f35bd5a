#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "seqrank/rng.hpp"
#include "seqrank/sinkhorn.hpp"

using namespace seqrank;

namespace {

CellMatrix random_positive(int d, CounterRng& rng) {
  CellMatrix c(d, d);
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < d; ++i) {
      c(i, j) = 0.05 + rng.uniform_open();
    }
  }
  return c / c.sum();
}

void check_margins(const CellMatrix& c, double tol_factor) {
  const int d = static_cast<int>(c.rows());
  const double hi = tol_factor / d;
  const double lo = 1.0 / (tol_factor * d);
  for (int i = 0; i < d; ++i) {
    const double rs = c.row(i).sum();
    const double cs = c.col(i).sum();
    CHECK(rs > lo);
    CHECK(rs < hi);
    CHECK(cs > lo);
    CHECK(cs < hi);
  }
}

}  // namespace

TEST_CASE("uniform-margin matrices are fixed points") {
  for (int d : {2, 3, 4}) {
    const CellMatrix c = CellMatrix::Constant(d, d, 1.0 / (d * d));
    const CellMatrix out = project_uniform_margins(c);
    CHECK((out - c).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("2x2 analytic fixed point") {
  CellMatrix c(2, 2);
  c(0, 0) = 0.4;
  c(0, 1) = 0.1;
  c(1, 0) = 0.2;
  c(1, 1) = 0.3;
  const CellMatrix out = project_uniform_margins(c, 500, 1.0 + 1e-13);
  const double s6 = std::sqrt(6.0);
  const double a = 0.5 * s6 / (1.0 + s6);
  CHECK(std::abs(out(0, 0) - a) < 1e-6);
  CHECK(std::abs(out(1, 1) - a) < 1e-6);
  CHECK(std::abs(out(0, 1) - (0.5 - a)) < 1e-6);
  CHECK(std::abs(out(1, 0) - (0.5 - a)) < 1e-6);
  // the paper's defaults get within the stated band
  check_margins(project_uniform_margins(c), 1.001);
}

TEST_CASE("random matrices reach the margin band within 20 iterations") {
  CounterRng rng(11);
  for (int d : {2, 3, 5, 8}) {
    for (int rep = 0; rep < 50; ++rep) {
      const CellMatrix out = project_uniform_margins(random_positive(d, rng));
      check_margins(out, 1.001);
      CHECK(std::abs(out.sum() - 1.0) < 1e-12);
      CHECK((out > 0.0).all());
    }
  }
}

TEST_CASE("projection preserves all cross ratios") {
  CounterRng rng(23);
  const CellMatrix c = random_positive(4, rng);
  const CellMatrix out = project_uniform_margins(c, 400, 1.0 + 1e-12);
  for (int k = 0; k < 4; ++k) {
    for (int kp = k + 1; kp < 4; ++kp) {
      for (int l = 0; l < 4; ++l) {
        for (int lp = l + 1; lp < 4; ++lp) {
          const double in_ratio = c(k, l) * c(kp, lp) / (c(k, lp) * c(kp, l));
          const double out_ratio =
              out(k, l) * out(kp, lp) / (out(k, lp) * out(kp, l));
          CHECK(std::abs(out_ratio / in_ratio - 1.0) < 1e-6);
        }
      }
    }
  }
}

TEST_CASE("warm start reproduces the diagonal-scaling structure") {
  CounterRng rng(31);
  SinkhornProjector projector(3);
  CellMatrix c = random_positive(3, rng);
  for (int step = 0; step < 20; ++step) {
    c(rng.next_u64() % 3, rng.next_u64() % 3) += 0.02;
    c /= c.sum();
    const CellMatrix out = projector.project(c);
    check_margins(out, 1.001);
    // out = diag(row) * c * diag(col)
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double rebuilt =
            projector.row_scale()(i) * c(i, j) * projector.col_scale()(j);
        CHECK(out(i, j) == doctest::Approx(rebuilt).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("corrected density") {
  const CellMatrix uniform = CellMatrix::Constant(2, 2, 0.25);
  CHECK(corrected_density(uniform, {0, 0}, 2) == doctest::Approx(1.0));
  CellMatrix c(2, 2);
  c(0, 0) = 0.4;
  c(0, 1) = 0.1;
  c(1, 0) = 0.2;
  c(1, 1) = 0.3;
  const CellMatrix out = project_uniform_margins(c, 500, 1.0 + 1e-13);
  const double s6 = std::sqrt(6.0);
  CHECK(corrected_density(out, {0, 0}, 2) ==
        doctest::Approx(4.0 * 0.5 * s6 / (1.0 + s6)).epsilon(1e-5));
  // area-weighted densities integrate to ~1 (early stopping tolerance)
  CounterRng rng(3);
  const CellMatrix proj = project_uniform_margins(random_positive(4, rng));
  double total = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) {
      total += corrected_density(proj, {k, l}, 4) / 16.0;
    }
  }
  CHECK(std::abs(total - 1.0) < 1e-3);
}

TEST_CASE("non-positive entries are rejected") {
  CellMatrix c = CellMatrix::Constant(2, 2, 0.25);
  c(0, 1) = 0.0;
  CHECK_THROWS_AS(project_uniform_margins(c), InvalidMatrix);
  c(0, 1) = -0.1;
  CHECK_THROWS_AS(project_uniform_margins(c), InvalidMatrix);
}

TEST_CASE("correction does not lose growth rate under uniform marginals") {
  // Gaussian-copula draws have uniform marginals; the projected density must
  // dominate the raw pseudo-count density in mean log, up to MC slack.
  CounterRng rng(613);
  const int d = 4;
  for (int rep = 0; rep < 3; ++rep) {
    CellMatrix pseudo = random_positive(d, rng);
    const CellMatrix proj = project_uniform_margins(pseudo, 200, 1.0 + 1e-12);
    const double rho = 0.5;
    double mean_corrected = 0.0;
    double mean_plain = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
      const double z1 = rng.normal();
      const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
      const double r = 0.5 * std::erfc(-z1 / std::sqrt(2.0));
      const double s = 0.5 * std::erfc(-z2 / std::sqrt(2.0));
      const BinIndex cell = bin_index(r, s, d);
      mean_corrected += std::log(d * d * proj(cell.k, cell.l));
      mean_plain += std::log(d * d * pseudo(cell.k, cell.l));
    }
    CHECK(mean_corrected / n >= mean_plain / n - 1e-3);
  }
}
