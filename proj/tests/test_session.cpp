#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "seqrank/scenarios.hpp"
#include "seqrank/session.hpp"

using namespace seqrank;

namespace {

std::vector<std::pair<double, double>> normal_pairs(int n, std::uint64_t seed,
                                                    double slope = 0.0) {
  CounterRng rng(seed);
  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    out.emplace_back(x, slope * x + rng.normal());
  }
  return out;
}

SessionConfig small_config() {
  SessionConfig cfg;
  cfg.depths = {2, 4};
  cfg.weights = {0.5, 0.5};
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  SessionConfig cfg;
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(Session{cfg}, ConfigError);
  cfg.alpha = 1.0;
  CHECK_THROWS_AS(Session{cfg}, ConfigError);

  SessionConfig cal;
  cal.threshold.kind = ThresholdKind::calibrated;
  cal.threshold.horizon = 512;
  CHECK_THROWS_AS(Session{cal}, ConfigError);  // unresolved value

  SessionConfig bad_budget;
  bad_budget.max_n = 0;
  CHECK_THROWS_AS(Session{bad_budget}, ConfigError);

  SessionConfig bet_cfg;
  bet_cfg.method = TestMethod::seqbet;
  bet_cfg.depths = {2, 3};
  CHECK_THROWS_AS(Session{bet_cfg}, ConfigError);

  SessionConfig act_cfg;
  act_cfg.activation = {1, 2};
  CHECK_THROWS_AS(Session{act_cfg}, ConfigError);  // length mismatch

  Session fresh{SessionConfig{}};
  CHECK(fresh.log_m_agg() == 0.0);
  CHECK(fresh.n() == 0);
  CHECK(fresh.threshold() == doctest::Approx(20.0));
}

TEST_CASE("first observation leaves the aggregate unchanged") {
  for (bool derand : {true, false}) {
    SessionConfig cfg = small_config();
    cfg.derandomize = derand;
    Session session(cfg);
    const StepReport rep = session.observe(1.7, -0.3);
    CHECK(rep.n == 1);
    CHECK(rep.log10_m_agg == 0.0);
    CHECK(rep.p_anytime == 1.0);
    CHECK(rep.decision == Decision::running);
  }
}

TEST_CASE("determinism and invariance under monotone transforms") {
  const auto pairs = normal_pairs(400, 99, 0.8);
  for (bool derand : {true, false}) {
    for (TestMethod method : {TestMethod::grid, TestMethod::seqbet}) {
      SessionConfig cfg = small_config();
      cfg.derandomize = derand;
      cfg.method = method;
      cfg.threshold = {ThresholdKind::fixed, 1e300, 0};

      Session a(cfg);
      Session b(cfg);  // identical config and seed
      Session c(cfg);  // transformed stream
      for (const auto& [x, y] : pairs) {
        const StepReport ra = a.observe(x, y);
        const StepReport rb = b.observe(x, y);
        const StepReport rc = c.observe(std::exp(x), y * y * y);
        CHECK(ra.log10_m_agg == rb.log10_m_agg);
        CHECK(ra.log10_m_agg == rc.log10_m_agg);
        CHECK(ra.p_anytime == rc.p_anytime);
        for (std::size_t i = 0; i < ra.per_depth_log10_m.size(); ++i) {
          CHECK(ra.per_depth_log10_m[i] == rc.per_depth_log10_m[i]);
        }
      }
    }
  }
}

TEST_CASE("raw observations and direct ranks give identical paths") {
  const auto pairs = normal_pairs(300, 7);
  SUBCASE("derandomized: ranks encoded as rectangle midpoints") {
    SessionConfig cfg = small_config();
    cfg.threshold = {ThresholdKind::fixed, 1e300, 0};
    Session raw(cfg);
    Session direct(cfg);
    RankState rx, ry;
    std::int64_t n = 0;
    for (const auto& [x, y] : pairs) {
      const StepReport a = raw.observe(x, y);
      n += 1;
      const RankPair px = rx.insert_and_rank(x);
      const RankPair py = ry.insert_and_rank(y);
      const double r = (static_cast<double>(px.le) - 0.5) / n;
      const double s = (static_cast<double>(py.le) - 0.5) / n;
      const StepReport b = direct.observe_ranks(r, s);
      CHECK(a.log10_m_agg == b.log10_m_agg);
      CHECK(a.p_anytime == b.p_anytime);
    }
  }
  SUBCASE("randomized: the realized randomized ranks replayed") {
    SessionConfig cfg = small_config();
    cfg.derandomize = false;
    cfg.threshold = {ThresholdKind::fixed, 1e300, 0};
    Session raw(cfg);
    Session direct(cfg);
    RankState rx, ry;
    CounterRng u_rng(cfg.seed);  // the session's own randomization stream
    for (const auto& [x, y] : pairs) {
      const StepReport a = raw.observe(x, y);
      const RankPair px = rx.insert_and_rank(x);
      const RankPair py = ry.insert_and_rank(y);
      const double u = u_rng.uniform_open();
      const double v = u_rng.uniform_open();
      const StepReport b = direct.observe_ranks(randomize(px, u),
                                                randomize(py, v));
      CHECK(a.log10_m_agg == b.log10_m_agg);
    }
  }
}

TEST_CASE("rejection is sticky and budget exhaustion reports") {
  SessionConfig cfg = small_config();
  cfg.threshold = {ThresholdKind::fixed, 1.5, 0};  // crosses quickly
  Session session(cfg);
  ScenarioStream stream({Scenario::linear, 0, 0, 5});
  while (!session.stopped()) {
    const auto [x, y] = stream.next();
    session.step(x, y);
  }
  CHECK(session.decision() == Decision::reject);
  CHECK(session.p_anytime() <= 1.0 / 1.5 + 1e-12);
  CHECK_THROWS_AS(session.observe(0.0, 0.0), ObserveAfterStop);

  SessionConfig budget_cfg = small_config();
  budget_cfg.max_n = 25;
  Session capped(budget_cfg);
  const auto pairs = normal_pairs(25, 3);
  StepReport last;
  for (const auto& [x, y] : pairs) last = capped.observe(x, y);
  CHECK(last.decision == Decision::budget_exhausted);
  CHECK_THROWS_AS(capped.observe(0.0, 0.0), ObserveAfterStop);
}

TEST_CASE("anytime p-value is non-increasing") {
  SessionConfig cfg = small_config();
  cfg.threshold = {ThresholdKind::fixed, 1e300, 0};
  Session session(cfg);
  ScenarioStream stream({Scenario::sine, 3, 0, 11});
  double prev = 1.0;
  for (int i = 0; i < 400; ++i) {
    const auto [x, y] = stream.next();
    const StepReport rep = session.observe(x, y);
    CHECK(rep.p_anytime <= prev + 1e-15);
    prev = rep.p_anytime;
  }
}

TEST_CASE("ties: error policy throws, fallback policies continue") {
  SUBCASE("error") {
    Session session{small_config()};
    session.observe(1.0, 2.0);
    CHECK_THROWS_AS(session.observe(1.0, 3.0), TiesPresent);
  }
  SUBCASE("randomized fallback merges p-values") {
    SessionConfig cfg = small_config();
    cfg.tie_policy = TiePolicy::randomized_paths;
    cfg.randomized_paths = 5;
    cfg.threshold = {ThresholdKind::fixed, 1e300, 0};
    Session session(cfg);
    CounterRng rng(17);
    double prev_p = 1.0;
    for (int i = 0; i < 200; ++i) {
      // integer-valued stream: ties guaranteed
      const double x = std::floor(rng.uniform_open() * 4.0);
      const double y = std::floor(rng.uniform_open() * 4.0);
      const StepReport rep = session.observe(x, y);
      CHECK(rep.p_anytime <= prev_p + 1e-15);
      prev_p = rep.p_anytime;
    }
    CHECK(session.ties_seen());
    CHECK(session.n() == 200);
  }
  SUBCASE("single randomized continuation") {
    SessionConfig cfg = small_config();
    cfg.tie_policy = TiePolicy::single_randomized;
    Session session(cfg);
    CounterRng rng(19);
    for (int i = 0; i < 100; ++i) {
      session.observe(std::floor(rng.uniform_open() * 3.0),
                      std::floor(rng.uniform_open() * 3.0));
    }
    CHECK(session.ties_seen());
  }
  SUBCASE("randomized sessions absorb ties without any policy action") {
    SessionConfig cfg = small_config();
    cfg.derandomize = false;
    Session session(cfg);
    CounterRng rng(23);
    for (int i = 0; i < 100; ++i) {
      session.observe(std::floor(rng.uniform_open() * 3.0),
                      std::floor(rng.uniform_open() * 3.0));
    }
    CHECK(session.ties_seen());
  }
}

TEST_CASE("snapshot/restore is bit-identical, including tie fallback") {
  for (bool derand : {true, false}) {
    for (TestMethod method : {TestMethod::grid, TestMethod::seqbet}) {
      SessionConfig cfg;
      cfg.depths = {2, 4};
      cfg.derandomize = derand;
      cfg.method = method;
      cfg.tie_policy = TiePolicy::randomized_paths;
      cfg.randomized_paths = 3;
      cfg.threshold = {ThresholdKind::fixed, 1e300, 0};
      Session live(cfg);
      CounterRng rng(41);
      auto draw = [&]() {
        // a few ties, mostly continuous
        double x = rng.normal();
        if (rng.uniform_open() < 0.05) x = std::round(x);
        return x;
      };
      for (int i = 0; i < 120; ++i) live.step(draw(), draw());
      const std::string snap = live.snapshot();
      Session restored = Session::restore(snap);
      CHECK(restored.n() == live.n());
      for (int i = 0; i < 80; ++i) {
        const double x = draw();
        const double y = draw();
        const StepReport a = live.observe(x, y);
        const StepReport b = restored.observe(x, y);
        CHECK(a.log10_m_agg == b.log10_m_agg);
        CHECK(a.p_anytime == b.p_anytime);
        for (std::size_t q = 0; q < a.per_depth_log10_m.size(); ++q) {
          CHECK(a.per_depth_log10_m[q] == b.per_depth_log10_m[q]);
        }
      }
    }
  }
}

TEST_CASE("snapshot rejects corrupt or mismatched payloads") {
  Session session{small_config()};
  const auto pairs = normal_pairs(30, 2);
  for (const auto& [x, y] : pairs) session.step(x, y);
  const std::string snap = session.snapshot();

  CHECK_THROWS_AS(Session::restore(snap.substr(0, snap.size() / 2)),
                  CorruptSnapshot);
  CHECK_THROWS_AS(Session::restore("{\"version\": 1}"), CorruptSnapshot);

  std::string tampered = snap;
  const auto pos = tampered.find("\"version\":1");
  REQUIRE(pos != std::string::npos);
  tampered.replace(pos, 11, "\"version\":9");
  CHECK_THROWS_AS(Session::restore(tampered), SnapshotVersionMismatch);
}

TEST_CASE("snapshot size stays under 64 bytes per observation") {
  SessionConfig cfg;  // default full pipeline
  Session session(cfg);
  CounterRng rng(6);
  const int n = 2000;
  for (int i = 0; i < n; ++i) session.step(rng.normal(), rng.normal());
  const std::string snap = session.snapshot();
  CHECK(static_cast<double>(snap.size()) < 64.0 * n + 8192.0);
}

TEST_CASE("null crossing rate respects the Ville bound (small run)") {
  const int reps = 400;
  int crossed = 0;
  for (int rep = 0; rep < reps; ++rep) {
    SessionConfig cfg;  // default: sinkhorn, eta 0, derandomized
    cfg.seed = derive_seed(321, rep);
    cfg.max_n = 300;
    Session session(cfg);
    CounterRng rng(derive_seed(99, rep));
    while (!session.stopped()) session.step(rng.normal(), rng.normal());
    crossed += session.decision() == Decision::reject ? 1 : 0;
  }
  const double rate = static_cast<double>(crossed) / reps;
  CHECK(rate <= 0.05 + 3.0 * std::sqrt(0.05 * 0.95 / reps));
}

TEST_CASE("crossing rates do not depend on the marginal law") {
  // distribution-freeness: heavy-tailed vs normal nulls, common seeds
  const int reps = 300;
  auto run = [&](bool heavy) {
    int crossed = 0;
    for (int rep = 0; rep < reps; ++rep) {
      SessionConfig cfg;
      cfg.depths = {2, 4};
      cfg.seed = derive_seed(777, rep);
      cfg.max_n = 250;
      Session session(cfg);
      CounterRng rng(derive_seed(12345, rep));
      while (!session.stopped()) {
        double x = rng.normal();
        double y = rng.normal();
        if (heavy) {
          x = std::tan(1.5 * std::atan(x));  // heavier tails, still continuous
          y = std::tan(1.5 * std::atan(y));
        }
        session.step(x, y);
      }
      crossed += session.decision() == Decision::reject ? 1 : 0;
    }
    return static_cast<double>(crossed) / reps;
  };
  const double rate_normal = run(false);
  const double rate_heavy = run(true);
  const double joint_se = std::sqrt(2.0 * 0.05 * 0.95 / reps);
  CHECK(std::abs(rate_normal - rate_heavy) <= 3.0 * joint_se + 1e-12);
}

TEST_CASE("linear dependence is detected quickly") {
  SessionConfig cfg;  // defaults: depths 2..16, sinkhorn, derandomized
  cfg.threshold = {ThresholdKind::fixed, 16.9, 0};
  cfg.max_n = 512;
  Session session(cfg);
  ScenarioStream stream({Scenario::linear, 1, 0, 2027});
  while (!session.stopped()) {
    const auto [x, y] = stream.next();
    session.step(x, y);
  }
  CHECK(session.decision() == Decision::reject);
  CHECK(session.n() < 120);
}
