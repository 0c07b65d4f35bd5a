#include "seqrank/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "seqrank/parallel.hpp"

namespace seqrank {

namespace {

using nlohmann::json;

void append(std::string& s, const char* fmt, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  s += buf;
}

constexpr int kTableVersion = 1;

}  // namespace

std::string config_fingerprint(const SessionConfig& cfg) {
  // Canonical text of the law-shaping fields, then FNV-1a. alpha, seed,
  // threshold, and max_n do not change the null path law; alpha travels in
  // the table next to the fingerprint.
  std::string s = "seqrank-config-v1;";
  s += "depths=";
  for (int d : cfg.depths) s += std::to_string(d) + ",";
  s += ";weights=";
  for (double w : cfg.weights) append(s, "%.17g,", w);
  s += ";w0=";
  append(s, "%.17g;", cfg.w0);
  s += "eta=";
  append(s, "%.17g;", cfg.eta);
  s += "sinkhorn=" + std::to_string(cfg.sinkhorn ? 1 : 0) + ";";
  s += "derandomize=" + std::to_string(cfg.derandomize ? 1 : 0) + ";";
  s += "c0=";
  append(s, "%.17g;", cfg.c0);
  s += "tie_policy=" + std::to_string(static_cast<int>(cfg.tie_policy)) + ";";
  s += "paths=" + std::to_string(cfg.randomized_paths) + ";";
  s += "merge=" + std::to_string(static_cast<int>(cfg.merge)) + ";";
  s += "method=" + std::to_string(static_cast<int>(cfg.method)) + ";";
  s += "activation=";
  for (std::int64_t a : cfg.activation) s += std::to_string(a) + ",";

  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

double simulate_null_running_max(const SessionConfig& cfg, std::int64_t n,
                                 std::uint64_t seed) {
  SessionConfig run_cfg = cfg;
  // An unreachable threshold keeps the session running to the horizon.
  run_cfg.threshold = ThresholdSpec{ThresholdKind::fixed, 1e300, 0};
  run_cfg.max_n.reset();
  run_cfg.seed = seed;
  Session session(run_cfg);
  CounterRng rng(seed);
  for (std::int64_t i = 0; i < n; ++i) {
    const double r = rng.uniform_open();
    const double s = rng.uniform_open();
    session.step_ranks(r, s);
  }
  return std::exp(session.log_running_max());
}

CalibrationTable calibrate(const SessionConfig& cfg, double alpha,
                           std::span<const std::int64_t> horizons,
                           std::int64_t reps, int threads) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
  if (reps < 1) throw ConfigError("reps must be >= 1");
  if (horizons.empty()) throw ConfigError("no horizons given");
  std::vector<std::int64_t> hs(horizons.begin(), horizons.end());
  std::sort(hs.begin(), hs.end());
  hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
  if (hs.front() < 0) throw ConfigError("horizons must be >= 0");
  if (threads <= 0) threads = default_thread_count();

  const std::int64_t n_max = hs.back();
  // maxima[h * reps + rep]: running max at horizon hs[h] on path `rep`.
  std::vector<double> maxima(hs.size() * static_cast<std::size_t>(reps), 1.0);

  SessionConfig run_cfg = cfg;
  run_cfg.threshold = ThresholdSpec{ThresholdKind::fixed, 1e300, 0};
  run_cfg.max_n.reset();

  parallel_for(reps, threads, [&](std::int64_t rep) {
    SessionConfig path_cfg = run_cfg;
    path_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(rep));
    Session session(path_cfg);
    CounterRng rng(path_cfg.seed);
    std::size_t next_h = 0;
    for (std::int64_t i = 1; i <= n_max; ++i) {
      while (next_h < hs.size() && hs[next_h] < i) {
        maxima[next_h * static_cast<std::size_t>(reps) +
               static_cast<std::size_t>(rep)] =
            std::exp(session.log_running_max());
        ++next_h;
      }
      const double r = rng.uniform_open();
      const double s = rng.uniform_open();
      session.step_ranks(r, s);
    }
    while (next_h < hs.size()) {
      maxima[next_h * static_cast<std::size_t>(reps) +
             static_cast<std::size_t>(rep)] =
          std::exp(session.log_running_max());
      ++next_h;
    }
  });

  CalibrationTable table;
  table.fingerprint = config_fingerprint(cfg);
  table.alpha = alpha;
  table.reps = reps;
  table.seed = cfg.seed;
  table.low_rep_warning = reps < 1000;

  const std::int64_t q_idx = std::max<std::int64_t>(
      0, static_cast<std::int64_t>(
             std::ceil((1.0 - alpha) * static_cast<double>(reps))) -
             1);
  const double ville = 1.0 / alpha;
  for (std::size_t h = 0; h < hs.size(); ++h) {
    const std::size_t stride = static_cast<std::size_t>(reps);
    std::vector<double> col(maxima.begin() + h * stride,
                            maxima.begin() + (h + 1) * stride);
    std::sort(col.begin(), col.end());
    CalibrationEntry entry;
    entry.horizon = hs[h];
    entry.threshold = col[static_cast<std::size_t>(q_idx)];
    std::int64_t crossed = 0;
    for (double m : col) {
      if (m >= ville) ++crossed;
    }
    entry.reject_rate_ville =
        static_cast<double>(crossed) / static_cast<double>(reps);
    for (double q : {0.5, 0.9, 0.95, 0.99}) {
      const auto idx = std::min<std::size_t>(
          col.size() - 1,
          static_cast<std::size_t>(std::ceil(q * static_cast<double>(reps))) -
              1);
      char key[16];
      std::snprintf(key, sizeof(key), "q%.2f", q);
      entry.max_quantiles[key] = col[idx];
    }
    table.entries.push_back(std::move(entry));
  }
  return table;
}

std::string CalibrationTable::to_json() const {
  json j;
  j["version"] = kTableVersion;
  j["format"] = "seqrank-calibration";
  j["fingerprint"] = fingerprint;
  j["alpha"] = alpha;
  j["reps"] = reps;
  j["seed"] = seed;
  j["low_rep_warning"] = low_rep_warning;
  json entries_json = json::array();
  for (const CalibrationEntry& e : entries) {
    json ej;
    ej["N"] = e.horizon;
    ej["L"] = e.threshold;
    ej["p_cdf_summary"] = {
        {"reject_rate_ville", e.reject_rate_ville},
        {"max_quantiles", e.max_quantiles},
    };
    entries_json.push_back(std::move(ej));
  }
  j["entries"] = std::move(entries_json);
  return j.dump(2);
}

CalibrationTable CalibrationTable::from_json(std::string_view payload) {
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw DataError(std::string("unparsable calibration table: ") + e.what());
  }
  try {
    if (!j.contains("format") ||
        j.at("format").get<std::string>() != "seqrank-calibration") {
      throw DataError("not a calibration table");
    }
    if (j.at("version").get<int>() != kTableVersion) {
      throw DataError("unsupported calibration table version");
    }
    CalibrationTable t;
    t.fingerprint = j.at("fingerprint").get<std::string>();
    t.alpha = j.at("alpha").get<double>();
    t.reps = j.at("reps").get<std::int64_t>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.low_rep_warning = j.value("low_rep_warning", false);
    for (const json& ej : j.at("entries")) {
      CalibrationEntry e;
      e.horizon = ej.at("N").get<std::int64_t>();
      e.threshold = ej.at("L").get<double>();
      if (ej.contains("p_cdf_summary")) {
        const json& s = ej.at("p_cdf_summary");
        e.reject_rate_ville = s.value("reject_rate_ville", 0.0);
        if (s.contains("max_quantiles")) {
          e.max_quantiles =
              s.at("max_quantiles").get<std::map<std::string, double>>();
        }
      }
      t.entries.push_back(std::move(e));
    }
    return t;
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed calibration table: ") + e.what());
  }
}

double resolve_threshold(const SessionConfig& cfg,
                         const CalibrationTable& table) {
  if (cfg.threshold.kind != ThresholdKind::calibrated) {
    throw ConfigError("config does not request a calibrated threshold");
  }
  if (table.fingerprint != config_fingerprint(cfg)) {
    throw ConfigError(
        "calibration table fingerprint does not match this config");
  }
  if (std::abs(table.alpha - cfg.alpha) > 1e-12) {
    throw ConfigError("calibration table was built for a different alpha");
  }
  for (const CalibrationEntry& e : table.entries) {
    if (e.horizon == cfg.threshold.horizon) return e.threshold;
  }
  throw ConfigError("calibration table has no entry for N=" +
                    std::to_string(cfg.threshold.horizon));
}

}  // namespace seqrank
