#include "seqrank/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "seqrank/parallel.hpp"
#include "seqrank/util.hpp"

namespace seqrank {

namespace {

void finalize(ExperimentResult& res) {
  std::vector<double> rejecting_stops;
  double imputed_sum = 0.0;
  std::int64_t rejected = 0;
  for (const ReplicationRecord& rec : res.records) {
    if (rec.rejected) {
      ++rejected;
      rejecting_stops.push_back(static_cast<double>(rec.stop_n));
      imputed_sum += static_cast<double>(rec.stop_n);
    } else {
      imputed_sum += static_cast<double>(res.budget);
    }
  }
  const double reps = static_cast<double>(res.records.size());
  res.rejection_rate = rejected == 0 ? 0.0 : static_cast<double>(rejected) / reps;
  res.mean_stop_imputed = imputed_sum / reps;
  if (!rejecting_stops.empty()) {
    double sum = 0.0;
    for (double v : rejecting_stops) sum += v;
    res.mean_stop_rejecting = sum / static_cast<double>(rejecting_stops.size());
    std::sort(rejecting_stops.begin(), rejecting_stops.end());
    const std::size_t mid = rejecting_stops.size() / 2;
    res.median_stop_rejecting =
        rejecting_stops.size() % 2 == 1
            ? rejecting_stops[mid]
            : 0.5 * (rejecting_stops[mid - 1] + rejecting_stops[mid]);
  }
}

}  // namespace

ExperimentResult run_experiment(const ScenarioSpec& spec,
                                const SessionConfig& session_cfg,
                                std::int64_t reps, std::int64_t budget,
                                int threads) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (threads <= 0) threads = default_thread_count();

  ExperimentResult res;
  res.scenario = spec;
  res.reps = reps;
  res.budget = budget;
  res.records.resize(static_cast<std::size_t>(reps));
  {
    // Resolve the threshold value once for the result echo.
    SessionConfig probe_cfg = session_cfg;
    probe_cfg.max_n = budget;
    Session probe(probe_cfg);
    res.threshold = probe.threshold();
  }

  parallel_for(reps, threads, [&](std::int64_t rep) {
    ScenarioSpec stream_spec = spec;
    stream_spec.seed =
        derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(rep));
    ScenarioStream stream(stream_spec);

    SessionConfig cfg = session_cfg;
    // Odd substream: stays decorrelated from the data stream even when the
    // two master seeds coincide.
    cfg.seed = derive_seed(session_cfg.seed,
                           2 * static_cast<std::uint64_t>(rep) + 1);
    cfg.max_n = budget;
    Session session(cfg);
    while (!session.stopped()) {
      const auto [x, y] = stream.next();
      session.step(x, y);
    }
    ReplicationRecord rec;
    rec.rep = rep;
    rec.rejected = session.decision() == Decision::reject;
    rec.stop_n = rec.rejected ? session.n() : budget;
    rec.final_log10_m = nat_to_log10(session.log_m_agg());
    res.records[static_cast<std::size_t>(rep)] = rec;
  });

  finalize(res);
  return res;
}

ExperimentResult run_sr_experiment(const ScenarioSpec& spec,
                                   const SrConfig& sr_cfg, double threshold,
                                   std::int64_t reps, std::int64_t budget,
                                   int threads) {
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (budget < 1) throw ConfigError("budget must be >= 1");
  if (!(threshold >= 1.0)) throw ConfigError("threshold must be >= 1");
  if (threads <= 0) threads = default_thread_count();

  ExperimentResult res;
  res.scenario = spec;
  res.reps = reps;
  res.budget = budget;
  res.threshold = threshold;
  res.records.resize(static_cast<std::size_t>(reps));
  const double log_threshold = std::log(threshold);

  parallel_for(reps, threads, [&](std::int64_t rep) {
    ScenarioSpec stream_spec = spec;
    stream_spec.seed =
        derive_seed(spec.seed, 2 * static_cast<std::uint64_t>(rep));
    ScenarioStream stream(stream_spec);

    SrState state(sr_cfg);
    ReplicationRecord rec;
    rec.rep = rep;
    rec.stop_n = budget;
    for (std::int64_t i = 1; i <= budget; ++i) {
      const auto [x, y] = stream.next();
      state.observe(x, y);
      if (state.log_m() >= log_threshold) {
        rec.rejected = true;
        rec.stop_n = i;
        break;
      }
    }
    rec.final_log10_m = nat_to_log10(state.log_m());
    res.records[static_cast<std::size_t>(rep)] = rec;
  });

  finalize(res);
  return res;
}

std::string ExperimentResult::to_csv() const {
  std::string out = "rep,rejected,stop_n,final_log10_m\n";
  char buf[128];
  for (const ReplicationRecord& rec : records) {
    std::snprintf(buf, sizeof(buf), "%lld,%d,%lld,%.17g\n",
                  static_cast<long long>(rec.rep), rec.rejected ? 1 : 0,
                  static_cast<long long>(rec.stop_n), rec.final_log10_m);
    out += buf;
  }
  return out;
}

std::string ExperimentResult::curve_csv(std::int64_t stride) const {
  if (stride < 1) stride = 1;
  std::string out = "N,rejection_rate\n";
  std::vector<std::int64_t> stops;
  for (const ReplicationRecord& rec : records) {
    if (rec.rejected) stops.push_back(rec.stop_n);
  }
  std::sort(stops.begin(), stops.end());
  char buf[64];
  for (std::int64_t n = stride; n <= budget; n += stride) {
    const auto upto = std::upper_bound(stops.begin(), stops.end(), n) -
                      stops.begin();
    std::snprintf(buf, sizeof(buf), "%lld,%.17g\n", static_cast<long long>(n),
                  static_cast<double>(upto) /
                      static_cast<double>(records.size()));
    out += buf;
  }
  return out;
}

std::string ExperimentResult::summary_json() const {
  nlohmann::json j;
  j["scenario"] = scenario_name(scenario.name);
  j["noise"] = scenario.noise;
  j["seed"] = scenario.seed;
  j["reps"] = reps;
  j["budget"] = budget;
  j["threshold"] = threshold;
  j["rejection_rate"] = rejection_rate;
  j["mean_stop_rejecting"] = mean_stop_rejecting;
  j["median_stop_rejecting"] = median_stop_rejecting;
  j["mean_stop_imputed"] = mean_stop_imputed;
  return j.dump(2);
}

}  // namespace seqrank
