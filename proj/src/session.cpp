#include "seqrank/session.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "json.hpp"
#include "seqrank/util.hpp"

namespace seqrank {

namespace {

using nlohmann::json;

std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::ville: return "ville";
    case ThresholdKind::fixed: return "fixed";
    case ThresholdKind::calibrated: return "calibrated";
  }
  return "ville";
}

ThresholdKind threshold_kind_from(const std::string& s) {
  if (s == "ville") return ThresholdKind::ville;
  if (s == "fixed") return ThresholdKind::fixed;
  if (s == "calibrated") return ThresholdKind::calibrated;
  throw CorruptSnapshot("unknown threshold kind: " + s);
}

std::string to_string(TiePolicy p) {
  switch (p) {
    case TiePolicy::error: return "error";
    case TiePolicy::randomized_paths: return "randomized_paths";
    case TiePolicy::single_randomized: return "single_randomized";
  }
  return "error";
}

TiePolicy tie_policy_from(const std::string& s) {
  if (s == "error") return TiePolicy::error;
  if (s == "randomized_paths") return TiePolicy::randomized_paths;
  if (s == "single_randomized") return TiePolicy::single_randomized;
  throw CorruptSnapshot("unknown tie policy: " + s);
}

std::string to_string(TestMethod m) {
  return m == TestMethod::grid ? "grid" : "seqbet";
}

TestMethod method_from(const std::string& s) {
  if (s == "grid") return TestMethod::grid;
  if (s == "seqbet") return TestMethod::seqbet;
  throw CorruptSnapshot("unknown method: " + s);
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::running: return "continue";
    case Decision::reject: return "reject";
    case Decision::budget_exhausted: return "budget_exhausted";
  }
  return "continue";
}

Decision decision_from(const std::string& s) {
  if (s == "continue") return Decision::running;
  if (s == "reject") return Decision::reject;
  if (s == "budget_exhausted") return Decision::budget_exhausted;
  throw CorruptSnapshot("unknown decision: " + s);
}

json dump_array(const Eigen::ArrayXXd& a) {
  std::vector<double> flat(a.data(), a.data() + a.size());
  return json(flat);
}

json dump_array(const Eigen::ArrayXd& a) {
  std::vector<double> flat(a.data(), a.data() + a.size());
  return json(flat);
}

constexpr int kSnapshotVersion = 1;

}  // namespace

Session::Session(SessionConfig cfg) : cfg_(std::move(cfg)) {
  if (!(cfg_.alpha > 0.0 && cfg_.alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0,1)");
  }
  if (cfg_.method == TestMethod::seqbet) {
    // The margin correction acts on d x d cell matrices; the BET's two-bin
    // splits have no margins to correct.
    cfg_.sinkhorn = false;
    for (int d : cfg_.depths) {
      if (d < 2 || (d & (d - 1)) != 0) {
        throw ConfigError("seqbet requires power-of-two depths >= 2");
      }
    }
  }
  switch (cfg_.threshold.kind) {
    case ThresholdKind::ville:
      cfg_.threshold.value = 1.0 / cfg_.alpha;
      break;
    case ThresholdKind::fixed:
      if (!(cfg_.threshold.value >= 1.0)) {
        throw ConfigError("fixed threshold must be >= 1");
      }
      break;
    case ThresholdKind::calibrated:
      if (!(cfg_.threshold.value >= 1.0)) {
        throw ConfigError(
            "calibrated threshold not resolved; look it up in a calibration "
            "table first");
      }
      if (cfg_.threshold.horizon < 1) {
        throw ConfigError("calibrated threshold needs a horizon N >= 1");
      }
      break;
  }
  threshold_log_ = std::log(cfg_.threshold.value);
  if (cfg_.max_n && *cfg_.max_n < 1) {
    throw ConfigError("max_n must be >= 1");
  }
  if (cfg_.randomized_paths < 1) {
    throw ConfigError("number of randomized paths must be >= 1");
  }
  if (!(cfg_.c0 > 0.0)) throw ConfigError("c0 must be positive");

  if (cfg_.activation.empty()) {
    act_.assign(cfg_.depths.begin(), cfg_.depths.end());
  } else {
    if (cfg_.activation.size() != cfg_.depths.size()) {
      throw ConfigError("activation schedule length must match depths");
    }
    for (std::int64_t a : cfg_.activation) {
      if (a < 0) throw ConfigError("activation times must be >= 0");
    }
    act_ = cfg_.activation;
  }
  max_act_ = act_.empty() ? 0 : *std::max_element(act_.begin(), act_.end());

  // Normalize weights once so config echoes and fingerprints are canonical.
  AggregatorConfig agg_cfg{cfg_.depths, cfg_.weights, cfg_.w0, cfg_.eta};
  Aggregator probe(agg_cfg);
  cfg_.weights = probe.config().weights;

  paths_.push_back(make_path(cfg_.seed));
  randomized_mode_ = !cfg_.derandomize;
  keep_k_history_ = cfg_.derandomize && cfg_.tie_policy != TiePolicy::error;

  pseudo_.resize(cfg_.depths.size());
  if (cfg_.method == TestMethod::grid && cfg_.sinkhorn) {
    for (std::size_t i = 0; i < cfg_.depths.size(); ++i) {
      pseudo_[i] = Eigen::ArrayXXd::Zero(cfg_.depths[i], cfg_.depths[i]);
    }
  }
  logf_.resize(cfg_.depths.size());
}

Session::Path Session::make_path(std::uint64_t rng_seed) const {
  Path p{.grids = {},
         .bets = {},
         .projectors = {},
         .agg = Aggregator(
             AggregatorConfig{cfg_.depths, cfg_.weights, cfg_.w0, cfg_.eta}),
         .prev_bet_log_m = {},
         .log_running_max = 0.0,
         .rng = CounterRng(rng_seed)};
  for (std::size_t i = 0; i < cfg_.depths.size(); ++i) {
    const int d = cfg_.depths[i];
    if (cfg_.method == TestMethod::grid) {
      p.grids.emplace_back(d, cfg_.c0, act_[i]);
      if (cfg_.sinkhorn) p.projectors.emplace_back(d);
    } else {
      int k = 0;
      while ((1 << k) < d) ++k;
      p.bets.emplace_back(k, cfg_.c0, act_[i]);
    }
  }
  p.prev_bet_log_m.assign(cfg_.depths.size(), 0.0);
  return p;
}

void Session::ensure_not_stopped() const {
  if (stopped_) {
    throw ObserveAfterStop("session already stopped with decision " +
                           to_string(decision_));
  }
}

double Session::threshold() const { return cfg_.threshold.value; }

bool Session::step(double x, double y) {
  ensure_not_stopped();
  if (!std::isfinite(x) || !std::isfinite(y)) {
    throw InvalidObservation("non-finite observation");
  }
  const RankPair px = rank_x_.insert_and_rank(x);
  const RankPair py = rank_y_.insert_and_rank(y);
  n_ += 1;
  if (keep_k_history_ && !randomized_mode_) {
    kx_.push_back(px.le);
    ky_.push_back(py.le);
  }
  if (!ties_seen_ && (px.tied() || py.tied())) {
    handle_first_tie();
  }
  return advance(px, py, false, 0.0, 0.0);
}

bool Session::step_ranks(double r, double s) {
  ensure_not_stopped();
  if (!(r > 0.0 && r < 1.0) || !(s > 0.0 && s < 1.0)) {
    throw InvalidRank("direct randomized ranks must lie in (0,1)");
  }
  n_ += 1;
  const double nn = static_cast<double>(n_);
  auto pos = [nn, this](double v) {
    std::int64_t k = static_cast<std::int64_t>(std::ceil(v * nn));
    return std::clamp<std::int64_t>(k, 1, n_);
  };
  const RankPair px{pos(r), pos(r) - 1, n_};
  const RankPair py{pos(s), pos(s) - 1, n_};
  if (keep_k_history_ && !randomized_mode_) {
    kx_.push_back(px.le);
    ky_.push_back(py.le);
  }
  return advance(px, py, true, r, s);
}

bool Session::advance(const RankPair& px, const RankPair& py,
                      bool direct_ranks, double r_direct, double s_direct) {
  if (randomized_mode_) {
    step_randomized(px, py, direct_ranks, r_direct, s_direct);
  } else {
    step_derandomized(px, py);
  }
  update_decision();
  return stopped_;
}

void Session::replay_backfill(Path& path, std::size_t depth_idx,
                              std::int64_t n_act) const {
  // Batch ranks of the first n_act observations, reconstructed from the
  // order lists so that raw and direct-rank feeds produce identical state.
  std::vector<double> rx(static_cast<std::size_t>(n_act));
  std::vector<double> ry(static_cast<std::size_t>(n_act));
  const double na = static_cast<double>(n_act);
  for (std::int64_t j = 0; j < n_act; ++j) {
    rx[static_cast<std::size_t>(order_x_[j]) - 1] =
        static_cast<double>(j + 1) / na;
    ry[static_cast<std::size_t>(order_y_[j]) - 1] =
        static_cast<double>(j + 1) / na;
  }
  for (std::int64_t i = 0; i < n_act; ++i) {
    if (cfg_.method == TestMethod::grid) {
      path.grids[depth_idx].update(rx[i], ry[i]);
    } else {
      path.bets[depth_idx].update(rx[i], ry[i]);
    }
  }
}

void Session::step_derandomized(const RankPair& px, const RankPair& py) {
  if (n_ <= max_act_) {
    order_x_.insert(order_x_.begin() + (px.le - 1),
                    static_cast<std::int32_t>(n_));
    order_y_.insert(order_y_.begin() + (py.le - 1),
                    static_cast<std::int32_t>(n_));
  }
  Path& path = paths_[0];
  const double nn = static_cast<double>(n_);
  const double x_hi = px.fhat();
  const double x_lo = static_cast<double>(px.le - 1) / nn;
  const double y_hi = py.fhat();
  const double y_lo = static_cast<double>(py.le - 1) / nn;

  for (std::size_t i = 0; i < act_.size(); ++i) {
    if (n_ < act_[i]) {
      logf_[i] = 0.0;
      continue;
    }
    if (n_ == act_[i]) {
      logf_[i] = 0.0;
      replay_backfill(path, i, act_[i]);
      continue;
    }
    const int d = cfg_.depths[i];
    ox_.compute(x_lo, x_hi, d);
    oy_.compute(y_lo, y_hi, d);
    if (cfg_.method == TestMethod::grid) {
      GridState& g = path.grids[i];
      const double plain = expected_increment(g, ox_, oy_);
      double logf = plain;
      if (cfg_.sinkhorn) {
        g.pseudo_probabilities(pseudo_[i]);
        const CellMatrix& proj = path.projectors[i].project(pseudo_[i]);
        logf = corrected_expected_increment(proj, ox_, oy_, d);
      }
      deposit_expected(g, ox_, oy_);
      g.commit_step(plain);
      logf_[i] = logf;
    } else {
      const double new_logm = path.bets[i].update_expected(ox_, oy_);
      logf_[i] = new_logm - path.prev_bet_log_m[i];
      path.prev_bet_log_m[i] = new_logm;
    }
  }
  path.agg.step(logf_);
  path.log_running_max = std::max(path.log_running_max, path.agg.log_m());
}

void Session::step_randomized(const RankPair& px, const RankPair& py,
                              bool direct_ranks, double r_direct,
                              double s_direct) {
  for (Path& path : paths_) {
    double r = r_direct;
    double s = s_direct;
    if (!direct_ranks) {
      const double u = path.rng.uniform_open();
      const double v = path.rng.uniform_open();
      r = randomize(px, u);
      s = randomize(py, v);
    }
    for (std::size_t i = 0; i < cfg_.depths.size(); ++i) {
      const int d = cfg_.depths[i];
      if (cfg_.method == TestMethod::grid) {
        GridState& g = path.grids[i];
        if (!g.active()) {
          g.update(r, s);
          logf_[i] = 0.0;
        } else if (cfg_.sinkhorn) {
          g.pseudo_probabilities(pseudo_[i]);
          const CellMatrix& proj = path.projectors[i].project(pseudo_[i]);
          logf_[i] =
              std::log(corrected_density(proj, bin_index(r, s, d), d));
          g.update(r, s);
        } else {
          logf_[i] = g.update(r, s);
        }
      } else {
        const double new_logm = path.bets[i].update(r, s);
        logf_[i] = new_logm - path.prev_bet_log_m[i];
        path.prev_bet_log_m[i] = new_logm;
      }
    }
    path.agg.step(logf_);
    path.log_running_max = std::max(path.log_running_max, path.agg.log_m());
  }
}

void Session::handle_first_tie() {
  ties_seen_ = true;
  if (!cfg_.derandomize) return;  // randomization absorbs ties
  if (cfg_.tie_policy == TiePolicy::error) {
    stopped_ = true;
    throw TiesPresent(
        "tied observation at n=" + std::to_string(n_) +
        "; derandomization requires continuous data (configure tie_policy "
        "randomized_paths or single_randomized to continue)");
  }
  const int b_count = cfg_.tie_policy == TiePolicy::randomized_paths
                          ? cfg_.randomized_paths
                          : 1;
  std::vector<Path> spawned;
  spawned.reserve(static_cast<std::size_t>(b_count));
  for (int b = 0; b < b_count; ++b) {
    Path p = paths_[0];
    p.rng = CounterRng(derive_seed(cfg_.seed, static_cast<std::uint64_t>(b) + 1));
    // Depth states still buffering receive retro-randomized prefix ranks;
    // the prefix is tie-free, so these have the exact null distribution.
    for (std::int64_t i = 1; i < n_; ++i) {
      const double u = p.rng.uniform_open();
      const double v = p.rng.uniform_open();
      const RankPair pxi{kx_[static_cast<std::size_t>(i - 1)],
                         kx_[static_cast<std::size_t>(i - 1)] - 1, i};
      const RankPair pyi{ky_[static_cast<std::size_t>(i - 1)],
                         ky_[static_cast<std::size_t>(i - 1)] - 1, i};
      const double r = randomize(pxi, u);
      const double s = randomize(pyi, v);
      if (cfg_.method == TestMethod::grid) {
        for (GridState& g : p.grids) {
          if (!g.active()) g.update(r, s);
        }
      } else {
        for (BetState& bt : p.bets) {
          if (!bt.active()) bt.update(r, s);
        }
      }
    }
    spawned.push_back(std::move(p));
  }
  paths_ = std::move(spawned);
  randomized_mode_ = true;
  fallback_engaged_ = cfg_.tie_policy == TiePolicy::randomized_paths;
}

std::vector<double> Session::path_maxima() const {
  std::vector<double> maxima;
  maxima.reserve(paths_.size());
  for (const Path& p : paths_) maxima.push_back(std::exp(p.log_running_max));
  return maxima;
}

void Session::update_decision() {
  bool rejected = false;
  if (fallback_engaged_) {
    const MergedPValue merged = merge_pvalues(path_maxima(), cfg_.merge);
    rejected = merged.value <= 1.0 / cfg_.threshold.value;
  } else {
    rejected = paths_[0].agg.log_m() >= threshold_log_;
  }
  if (rejected) {
    decision_ = Decision::reject;
    stopped_ = true;
    return;
  }
  if (cfg_.max_n && n_ >= *cfg_.max_n) {
    decision_ = Decision::budget_exhausted;
    stopped_ = true;
  }
}

double Session::log_m_agg() const {
  if (!fallback_engaged_) return paths_[0].agg.log_m();
  std::vector<double> logs;
  logs.reserve(paths_.size());
  for (const Path& p : paths_) logs.push_back(p.agg.log_m());
  return log_sum_exp(logs) - std::log(static_cast<double>(paths_.size()));
}

double Session::log_running_max() const {
  if (!fallback_engaged_) return paths_[0].log_running_max;
  double hi = 0.0;
  for (const Path& p : paths_) hi = std::max(hi, p.log_running_max);
  return hi;
}

double Session::p_anytime() const {
  if (fallback_engaged_) {
    return merge_pvalues(path_maxima(), cfg_.merge).value;
  }
  return std::min(1.0, std::exp(-paths_[0].log_running_max));
}

std::vector<double> Session::per_depth_log_m() const {
  if (!fallback_engaged_) {
    const auto ledger = paths_[0].agg.per_depth_log_m();
    return {ledger.begin(), ledger.end()};
  }
  std::vector<double> out(cfg_.depths.size());
  std::vector<double> logs(paths_.size());
  for (std::size_t i = 0; i < cfg_.depths.size(); ++i) {
    for (std::size_t b = 0; b < paths_.size(); ++b) {
      logs[b] = paths_[b].agg.per_depth_log_m()[i];
    }
    out[i] = log_sum_exp(logs) - std::log(static_cast<double>(paths_.size()));
  }
  return out;
}

StepReport Session::report() const {
  StepReport rep;
  rep.n = n_;
  rep.per_depth_log10_m = per_depth_log_m();
  for (double& v : rep.per_depth_log10_m) v = nat_to_log10(v);
  rep.log10_m_agg = nat_to_log10(log_m_agg());
  rep.p_anytime = p_anytime();
  rep.decision = decision_;
  return rep;
}

StepReport Session::observe(double x, double y) {
  step(x, y);
  return report();
}

StepReport Session::observe_ranks(double r, double s) {
  step_ranks(r, s);
  return report();
}

// ---------------------------------------------------------------------------
// Snapshots

std::string Session::snapshot() const {
  json j;
  j["version"] = kSnapshotVersion;
  j["format"] = "seqrank-session";

  json cj;
  cj["alpha"] = cfg_.alpha;
  cj["depths"] = cfg_.depths;
  cj["weights"] = cfg_.weights;
  cj["w0"] = cfg_.w0;
  cj["eta"] = cfg_.eta;
  cj["sinkhorn"] = cfg_.sinkhorn;
  cj["derandomize"] = cfg_.derandomize;
  cj["c0"] = cfg_.c0;
  cj["threshold_kind"] = to_string(cfg_.threshold.kind);
  cj["threshold_value"] = cfg_.threshold.value;
  cj["threshold_horizon"] = cfg_.threshold.horizon;
  if (cfg_.max_n) cj["max_n"] = *cfg_.max_n;
  cj["seed"] = cfg_.seed;
  cj["tie_policy"] = to_string(cfg_.tie_policy);
  cj["randomized_paths"] = cfg_.randomized_paths;
  cj["merge"] = cfg_.merge == MergeMethod::arithmetic ? "arithmetic" : "geometric";
  cj["method"] = to_string(cfg_.method);
  cj["activation"] = cfg_.activation;
  j["config"] = std::move(cj);

  j["n"] = n_;
  j["ties_seen"] = ties_seen_;
  j["randomized_mode"] = randomized_mode_;
  j["fallback"] = fallback_engaged_;
  j["stopped"] = stopped_;
  j["decision"] = to_string(decision_);

  auto dump_engine = [](const RankState& st) {
    json e;
    std::vector<double> values;
    std::vector<std::int64_t> mults;
    for (const auto& [v, m] : st.sorted_values()) {
      values.push_back(v);
      mults.push_back(m);
    }
    e["values"] = std::move(values);
    e["mults"] = std::move(mults);
    return e;
  };
  j["rank_x"] = dump_engine(rank_x_);
  j["rank_y"] = dump_engine(rank_y_);
  j["order_x"] = order_x_;
  j["order_y"] = order_y_;
  j["kx"] = kx_;
  j["ky"] = ky_;

  json paths = json::array();
  for (const Path& p : paths_) {
    json pj;
    pj["rng_seed"] = p.rng.seed();
    pj["rng_counter"] = p.rng.counter();
    pj["running_max_log"] = p.log_running_max;
    const auto ledger = p.agg.per_depth_log_m();
    pj["agg_per_depth_log_m"] = std::vector<double>(ledger.begin(), ledger.end());
    pj["agg_log_m"] = p.agg.log_m();
    pj["prev_bet_log_m"] = p.prev_bet_log_m;
    json grids = json::array();
    for (const GridState& g : p.grids) {
      json gj;
      gj["counts"] = dump_array(g.counts());
      gj["n_seen"] = g.n_seen();
      gj["log_m"] = g.log_m();
      std::vector<double> br, bs;
      for (const auto& [r, s] : g.buffered()) {
        br.push_back(r);
        bs.push_back(s);
      }
      gj["buffer_r"] = std::move(br);
      gj["buffer_s"] = std::move(bs);
      grids.push_back(std::move(gj));
    }
    pj["grids"] = std::move(grids);
    json bets = json::array();
    for (const BetState& b : p.bets) {
      json bj;
      bj["count_a1"] =
          std::vector<double>(b.count_a1().begin(), b.count_a1().end());
      bj["log_m_m"] = std::vector<double>(b.per_interaction_log_m().begin(),
                                          b.per_interaction_log_m().end());
      bj["n_seen"] = b.n_seen();
      std::vector<double> br, bs;
      for (const auto& [r, s] : b.buffered()) {
        br.push_back(r);
        bs.push_back(s);
      }
      bj["buffer_r"] = std::move(br);
      bj["buffer_s"] = std::move(bs);
      bets.push_back(std::move(bj));
    }
    pj["bets"] = std::move(bets);
    json projs = json::array();
    for (const SinkhornProjector& pr : p.projectors) {
      json prj;
      prj["row"] = dump_array(pr.row_scale());
      prj["col"] = dump_array(pr.col_scale());
      projs.push_back(std::move(prj));
    }
    pj["projectors"] = std::move(projs);
    paths.push_back(std::move(pj));
  }
  j["paths"] = std::move(paths);
  return j.dump();
}

Session Session::restore(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw CorruptSnapshot(std::string("unparsable snapshot: ") + e.what());
  }
  try {
    if (!j.contains("version") || !j.contains("format") ||
        j.at("format").get<std::string>() != "seqrank-session") {
      throw CorruptSnapshot("not a session snapshot");
    }
    if (j.at("version").get<int>() != kSnapshotVersion) {
      throw SnapshotVersionMismatch(
          "snapshot version " + j.at("version").dump() + ", expected " +
          std::to_string(kSnapshotVersion));
    }
    const json& cj = j.at("config");
    SessionConfig cfg;
    cfg.alpha = cj.at("alpha").get<double>();
    cfg.depths = cj.at("depths").get<std::vector<int>>();
    cfg.weights = cj.at("weights").get<std::vector<double>>();
    cfg.w0 = cj.at("w0").get<double>();
    cfg.eta = cj.at("eta").get<double>();
    cfg.sinkhorn = cj.at("sinkhorn").get<bool>();
    cfg.derandomize = cj.at("derandomize").get<bool>();
    cfg.c0 = cj.at("c0").get<double>();
    cfg.threshold.kind =
        threshold_kind_from(cj.at("threshold_kind").get<std::string>());
    cfg.threshold.value = cj.at("threshold_value").get<double>();
    cfg.threshold.horizon = cj.at("threshold_horizon").get<std::int64_t>();
    if (cj.contains("max_n")) cfg.max_n = cj.at("max_n").get<std::int64_t>();
    cfg.seed = cj.at("seed").get<std::uint64_t>();
    cfg.tie_policy = tie_policy_from(cj.at("tie_policy").get<std::string>());
    cfg.randomized_paths = cj.at("randomized_paths").get<int>();
    cfg.merge = cj.at("merge").get<std::string>() == "geometric"
                    ? MergeMethod::geometric
                    : MergeMethod::arithmetic;
    cfg.method = method_from(cj.at("method").get<std::string>());
    cfg.activation = cj.at("activation").get<std::vector<std::int64_t>>();

    Session s(cfg);
    s.n_ = j.at("n").get<std::int64_t>();
    s.ties_seen_ = j.at("ties_seen").get<bool>();
    s.randomized_mode_ = j.at("randomized_mode").get<bool>();
    s.fallback_engaged_ = j.at("fallback").get<bool>();
    s.stopped_ = j.at("stopped").get<bool>();
    s.decision_ = decision_from(j.at("decision").get<std::string>());

    auto load_engine = [](const json& e) {
      const auto values = e.at("values").get<std::vector<double>>();
      const auto mults = e.at("mults").get<std::vector<std::int64_t>>();
      if (values.size() != mults.size()) {
        throw CorruptSnapshot("rank engine arrays disagree");
      }
      std::vector<std::pair<double, std::int64_t>> pairs(values.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        pairs[i] = {values[i], mults[i]};
      }
      return RankState::from_sorted_values(pairs);
    };
    s.rank_x_ = load_engine(j.at("rank_x"));
    s.rank_y_ = load_engine(j.at("rank_y"));
    s.order_x_ = j.at("order_x").get<std::vector<std::int32_t>>();
    s.order_y_ = j.at("order_y").get<std::vector<std::int32_t>>();
    s.kx_ = j.at("kx").get<std::vector<std::int64_t>>();
    s.ky_ = j.at("ky").get<std::vector<std::int64_t>>();

    const json& paths = j.at("paths");
    if (!paths.is_array() || paths.empty()) {
      throw CorruptSnapshot("snapshot has no paths");
    }
    s.paths_.clear();
    for (const json& pj : paths) {
      Path p = s.make_path(0);
      p.rng = CounterRng(pj.at("rng_seed").get<std::uint64_t>(),
                         pj.at("rng_counter").get<std::uint64_t>());
      p.log_running_max = pj.at("running_max_log").get<double>();
      const auto ledger =
          pj.at("agg_per_depth_log_m").get<std::vector<double>>();
      p.agg.set_state(ledger, pj.at("agg_log_m").get<double>());
      p.prev_bet_log_m = pj.at("prev_bet_log_m").get<std::vector<double>>();
      if (p.prev_bet_log_m.size() != cfg.depths.size()) {
        throw CorruptSnapshot("prev_bet_log_m length mismatch");
      }

      const json& grids = pj.at("grids");
      if (grids.size() != p.grids.size()) {
        throw CorruptSnapshot("grid count mismatch");
      }
      for (std::size_t i = 0; i < p.grids.size(); ++i) {
        const json& gj = grids[i];
        const auto flat = gj.at("counts").get<std::vector<double>>();
        const int d = p.grids[i].d();
        if (flat.size() != static_cast<std::size_t>(d) * d) {
          throw CorruptSnapshot("grid count matrix length mismatch");
        }
        Eigen::ArrayXXd counts =
            Eigen::Map<const Eigen::ArrayXXd>(flat.data(), d, d);
        const auto br = gj.at("buffer_r").get<std::vector<double>>();
        const auto bs = gj.at("buffer_s").get<std::vector<double>>();
        if (br.size() != bs.size()) {
          throw CorruptSnapshot("grid buffer arrays disagree");
        }
        std::vector<std::pair<double, double>> buffer(br.size());
        for (std::size_t q = 0; q < br.size(); ++q) buffer[q] = {br[q], bs[q]};
        p.grids[i].set_state(std::move(counts),
                             gj.at("n_seen").get<std::int64_t>(),
                             gj.at("log_m").get<double>(), std::move(buffer));
      }
      const json& bets = pj.at("bets");
      if (bets.size() != p.bets.size()) {
        throw CorruptSnapshot("bet count mismatch");
      }
      for (std::size_t i = 0; i < p.bets.size(); ++i) {
        const json& bj = bets[i];
        const auto br = bj.at("buffer_r").get<std::vector<double>>();
        const auto bs = bj.at("buffer_s").get<std::vector<double>>();
        if (br.size() != bs.size()) {
          throw CorruptSnapshot("bet buffer arrays disagree");
        }
        std::vector<std::pair<double, double>> buffer(br.size());
        for (std::size_t q = 0; q < br.size(); ++q) buffer[q] = {br[q], bs[q]};
        p.bets[i].set_state(bj.at("count_a1").get<std::vector<double>>(),
                            bj.at("log_m_m").get<std::vector<double>>(),
                            bj.at("n_seen").get<std::int64_t>(),
                            std::move(buffer));
      }
      const json& projs = pj.at("projectors");
      if (projs.size() != p.projectors.size()) {
        throw CorruptSnapshot("projector count mismatch");
      }
      for (std::size_t i = 0; i < p.projectors.size(); ++i) {
        const auto row = projs[i].at("row").get<std::vector<double>>();
        const auto col = projs[i].at("col").get<std::vector<double>>();
        Eigen::ArrayXd rs = Eigen::Map<const Eigen::ArrayXd>(
            row.data(), static_cast<Eigen::Index>(row.size()));
        Eigen::ArrayXd cs = Eigen::Map<const Eigen::ArrayXd>(
            col.data(), static_cast<Eigen::Index>(col.size()));
        p.projectors[i].set_scales(std::move(rs), std::move(cs));
      }
      s.paths_.push_back(std::move(p));
    }
    return s;
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw CorruptSnapshot(std::string("malformed snapshot: ") + e.what());
  }
}

}  // namespace seqrank
