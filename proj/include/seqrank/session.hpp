#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqrank/aggregate.hpp"
#include "seqrank/derandomize.hpp"
#include "seqrank/grid.hpp"
#include "seqrank/rank_engine.hpp"
#include "seqrank/rng.hpp"
#include "seqrank/seq_bet.hpp"
#include "seqrank/sinkhorn.hpp"

namespace seqrank {

enum class ThresholdKind { ville, fixed, calibrated };

struct ThresholdSpec {
  ThresholdKind kind = ThresholdKind::ville;
  double value = 0.0;        // fixed / resolved calibrated rejection level
  std::int64_t horizon = 0;  // calibrated: the horizon N it was resolved for
};

enum class TiePolicy { error, randomized_paths, single_randomized };
enum class TestMethod { grid, seqbet };
enum class Decision { running, reject, budget_exhausted };

struct SessionConfig {
  double alpha = 0.05;
  std::vector<int> depths = {2, 4, 8, 16};
  std::vector<double> weights;  // empty = equal across depths
  double w0 = 0.2;              // density-mixture floor, used when eta == 0
  double eta = 0.0;
  bool sinkhorn = true;
  bool derandomize = true;
  double c0 = 1.0;
  ThresholdSpec threshold;
  std::optional<std::int64_t> max_n;
  std::uint64_t seed = 0x5eab12cd34ef5678ULL;
  TiePolicy tie_policy = TiePolicy::error;
  int randomized_paths = 10;  // B for the tie fallback
  MergeMethod merge = MergeMethod::arithmetic;
  TestMethod method = TestMethod::grid;
  std::vector<std::int64_t> activation;  // empty = n_d = d
};

struct StepReport {
  std::int64_t n = 0;
  std::vector<double> per_depth_log10_m;
  double log10_m_agg = 0.0;
  double p_anytime = 1.0;
  Decision decision = Decision::running;
};

// One full streaming test: two rank engines, per-depth grid (or BET)
// martingales, optional Sinkhorn correction, optional derandomization,
// aggregation across depths, stopping rule.
//
// Stopping rules applied to a session may only depend on the emitted
// reports (the rank filtration), not on the raw observations themselves.
class Session {
 public:
  explicit Session(SessionConfig cfg);

  // Full pipeline step on a raw observation pair.
  StepReport observe(double x, double y);
  // As observe(), but (r,s) are taken as the randomized ranks directly;
  // the rank engines are bypassed. Null calibration uses this entry.
  StepReport observe_ranks(double r, double s);

  // Report-free variants; return true when the session newly stopped.
  bool step(double x, double y);
  bool step_ranks(double r, double s);

  StepReport report() const;

  const SessionConfig& config() const { return cfg_; }
  std::int64_t n() const { return n_; }
  bool stopped() const { return stopped_; }
  Decision decision() const { return decision_; }
  bool ties_seen() const { return ties_seen_; }
  double threshold() const;
  double log_m_agg() const;
  double log_running_max() const;
  double p_anytime() const;
  std::vector<double> per_depth_log_m() const;

  // Versioned JSON state; restore continues bit-identically.
  std::string snapshot() const;
  static Session restore(std::string_view payload);

 private:
  struct Path {
    std::vector<GridState> grids;
    std::vector<BetState> bets;
    std::vector<SinkhornProjector> projectors;
    Aggregator agg;
    std::vector<double> prev_bet_log_m;
    double log_running_max = 0.0;
    CounterRng rng;
  };

  Path make_path(std::uint64_t rng_seed) const;
  void ensure_not_stopped() const;
  bool advance(const RankPair& px, const RankPair& py, bool direct_ranks,
               double r_direct, double s_direct);
  void step_derandomized(const RankPair& px, const RankPair& py);
  void step_randomized(const RankPair& px, const RankPair& py,
                       bool direct_ranks, double r_direct, double s_direct);
  void handle_first_tie();
  void replay_backfill(Path& path, std::size_t depth_idx,
                       std::int64_t n_act) const;
  void update_decision();
  std::vector<double> path_maxima() const;

  SessionConfig cfg_;
  double threshold_log_ = 0.0;
  std::int64_t max_act_ = 0;
  std::vector<std::int64_t> act_;  // resolved per-depth activation times

  RankState rank_x_;
  RankState rank_y_;
  std::vector<std::int32_t> order_x_;  // step ids in ascending value order
  std::vector<std::int32_t> order_y_;
  std::vector<std::int64_t> kx_;  // integer sequential ranks (tie fallback)
  std::vector<std::int64_t> ky_;
  bool keep_k_history_ = false;

  std::int64_t n_ = 0;
  bool ties_seen_ = false;
  bool randomized_mode_ = false;
  bool fallback_engaged_ = false;
  bool stopped_ = false;
  Decision decision_ = Decision::running;

  std::vector<Path> paths_;

  // step scratch
  AxisOverlap ox_;
  AxisOverlap oy_;
  std::vector<Eigen::ArrayXXd> pseudo_;
  std::vector<double> logf_;
};

}  // namespace seqrank
