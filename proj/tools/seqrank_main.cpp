// seqrank: streaming rank-based sequential independence testing.
//
// Subcommands: test (stream a CSV or a synthetic scenario through the
// sequential test), simulate (power/stopping-time experiments), calibrate
// (Monte Carlo thresholds for truncated tests), baseline-sr (paired betting
// baseline).
//
// Exit codes: 0 completed (decision in the output), 2 usage error,
// 3 data error.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seqrank/calibrate.hpp"
#include "seqrank/experiment.hpp"
#include "seqrank/parallel.hpp"
#include "seqrank/scenarios.hpp"
#include "seqrank/session.hpp"
#include "seqrank/util.hpp"

namespace {

using namespace seqrank;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;

struct CommonOpts {
  double alpha = 0.05;
  std::vector<int> depths = {2, 4, 8, 16};
  std::vector<double> weights;
  double w0 = 0.2;
  double eta = 0.0;
  bool sinkhorn = true;
  bool derandomize = true;
  double c0 = 1.0;
  std::uint64_t seed = 20230927;
  std::string tie_policy = "error";
  int b_paths = 10;
  std::string merge = "arithmetic";
  std::string method = "grid";
  std::vector<std::int64_t> activation;
  std::string threshold = "ville";
  std::string calibration_path;
  std::int64_t max_n = 0;  // 0 = unset
  int threads = 0;
};

void add_common_options(CLI::App* app, CommonOpts& o) {
  app->add_option("--alpha", o.alpha, "Significance level in (0,1)")
      ->capture_default_str();
  app->add_option("--depths", o.depths, "Grid depths")
      ->delimiter(',')
      ->capture_default_str();
  app->add_option("--weights", o.weights,
                  "Per-depth weights (default: equal, normalized)")
      ->delimiter(',');
  app->add_option("--w0", o.w0, "Constant mixture weight (eta = 0 only)")
      ->capture_default_str();
  app->add_option("--eta", o.eta, "Inverse temperature for aggregation")
      ->capture_default_str();
  app->add_flag("--sinkhorn,!--no-sinkhorn", o.sinkhorn,
                "Uniform-marginal correction (default on)");
  app->add_flag("--derandomize,!--no-derandomize", o.derandomize,
                "Derandomized updates for continuous data (default on)");
  app->add_option("--c0", o.c0, "Initial count per cell")
      ->capture_default_str();
  app->add_option("--seed", o.seed, "Master seed; all randomness derives here")
      ->capture_default_str();
  app->add_option("--tie-policy", o.tie_policy,
                  "On first tie under --derandomize: error|paths|single")
      ->check(CLI::IsMember({"error", "paths", "single"}))
      ->capture_default_str();
  app->add_option("--b-paths", o.b_paths,
                  "Parallel randomized paths for --tie-policy paths")
      ->capture_default_str();
  app->add_option("--merge", o.merge, "P-value merge for the tie fallback")
      ->check(CLI::IsMember({"arithmetic", "geometric"}))
      ->capture_default_str();
  app->add_option("--method", o.method, "Martingale family")
      ->check(CLI::IsMember({"grid", "seqbet"}))
      ->capture_default_str();
  app->add_option("--activation", o.activation,
                  "Per-depth activation times (default: n_d = d)")
      ->delimiter(',');
  app->add_option("--threshold", o.threshold,
                  "Rejection threshold: ville | fixed:L | auto:N")
      ->capture_default_str();
  app->add_option("--calibration", o.calibration_path,
                  "Calibration table JSON (needed for --threshold auto:N)");
  app->add_option("--max-n", o.max_n, "Sample budget (0 = unbounded)");
  app->add_option("--threads", o.threads,
                  "Worker threads (default: SEQRANK_THREADS or all cores)");
}

SessionConfig to_session_config(const CommonOpts& o) {
  SessionConfig cfg;
  cfg.alpha = o.alpha;
  cfg.depths = o.depths;
  cfg.weights = o.weights;
  cfg.w0 = o.w0;
  cfg.eta = o.eta;
  cfg.sinkhorn = o.sinkhorn;
  cfg.derandomize = o.derandomize;
  cfg.c0 = o.c0;
  cfg.seed = o.seed;
  cfg.tie_policy = o.tie_policy == "paths"
                       ? TiePolicy::randomized_paths
                       : (o.tie_policy == "single"
                              ? TiePolicy::single_randomized
                              : TiePolicy::error);
  cfg.randomized_paths = o.b_paths;
  cfg.merge = o.merge == "geometric" ? MergeMethod::geometric
                                     : MergeMethod::arithmetic;
  cfg.method = o.method == "seqbet" ? TestMethod::seqbet : TestMethod::grid;
  cfg.activation = o.activation;
  if (o.max_n > 0) cfg.max_n = o.max_n;

  if (o.threshold == "ville") {
    cfg.threshold = {ThresholdKind::ville, 0.0, 0};
  } else if (o.threshold.rfind("fixed:", 0) == 0) {
    cfg.threshold = {ThresholdKind::fixed, std::stod(o.threshold.substr(6)),
                     0};
  } else if (o.threshold.rfind("auto:", 0) == 0) {
    const std::int64_t horizon = std::stoll(o.threshold.substr(5));
    cfg.threshold = {ThresholdKind::calibrated, 0.0, horizon};
    if (o.calibration_path.empty()) {
      throw ConfigError("--threshold auto:N requires --calibration FILE");
    }
    std::ifstream in(o.calibration_path);
    if (!in) {
      throw DataError("cannot read calibration table: " + o.calibration_path);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const CalibrationTable table = CalibrationTable::from_json(buf.str());
    cfg.threshold.value = resolve_threshold(cfg, table);
  } else {
    throw ConfigError("--threshold must be ville, fixed:L, or auto:N");
  }
  return cfg;
}

// --- input parsing ----------------------------------------------------------

bool parse_row(const std::string& line, double& x, double& y) {
  const char* p = line.c_str();
  char* end = nullptr;
  x = std::strtod(p, &end);
  if (end == p) return false;
  while (*end == ' ' || *end == '\t') ++end;
  if (*end != ',' && *end != ';' && *end != '\t' && *end != ' ') return false;
  const char* q = end + 1;
  y = std::strtod(q, &end);
  if (end == q) return false;
  while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
  return *end == '\0';
}

struct PairSource {
  virtual ~PairSource() = default;
  virtual bool next(double& x, double& y) = 0;  // false on EOF
};

struct StreamSource : PairSource {
  std::istream* in = nullptr;
  std::ifstream file;
  std::int64_t line_no = 0;
  bool checked_header = false;

  explicit StreamSource(const std::string& path) {
    if (path == "-") {
      in = &std::cin;
    } else {
      file.open(path);
      if (!file) throw DataError("cannot open input: " + path);
      in = &file;
    }
  }
  bool next(double& x, double& y) override {
    std::string line;
    while (std::getline(*in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      if (!parse_row(line, x, y)) {
        if (!checked_header && line_no == 1) {
          checked_header = true;  // tolerate a single header line
          continue;
        }
        throw DataError("line " + std::to_string(line_no) +
                        ": expected two numeric columns, got: " + line);
      }
      checked_header = true;
      return true;
    }
    return false;
  }
};

struct ScenarioSource : PairSource {
  ScenarioStream stream;
  explicit ScenarioSource(const ScenarioSpec& spec) : stream(spec) {}
  bool next(double& x, double& y) override {
    const auto [a, b] = stream.next();
    x = a;
    y = b;
    return true;
  }
};

const char* decision_name(Decision d) {
  switch (d) {
    case Decision::running: return "continue";
    case Decision::reject: return "reject";
    case Decision::budget_exhausted: return "budget_exhausted";
  }
  return "continue";
}

// --- subcommand: test -------------------------------------------------------

struct TestOpts {
  CommonOpts common;
  std::string input;
  std::string scenario;
  int noise = 1;
  std::string output = "-";
  std::string format = "csv";
};

int run_test(const TestOpts& o) {
  SessionConfig cfg = to_session_config(o.common);

  std::unique_ptr<PairSource> source;
  if (!o.scenario.empty()) {
    if (!cfg.max_n) {
      throw ConfigError("--scenario mode requires --max-n");
    }
    // Scenario data and session randomization use disjoint substreams.
    ScenarioSpec spec{scenario_from_name(o.scenario), o.noise, 0,
                      derive_seed(cfg.seed, 0xdaaULL)};
    source = std::make_unique<ScenarioSource>(spec);
  } else if (!o.input.empty()) {
    source = std::make_unique<StreamSource>(o.input);
  } else {
    throw ConfigError("provide --input FILE or --scenario NAME");
  }

  std::FILE* out = stdout;
  if (o.output != "-") {
    out = std::fopen(o.output.c_str(), "w");
    if (!out) throw DataError("cannot open output: " + o.output);
  }
  const bool jsonl = o.format == "jsonl";

  Session session(cfg);
  if (!jsonl) {
    std::fputs("n", out);
    for (int d : cfg.depths) std::fprintf(out, ",log10_m_d%d", d);
    std::fputs(",log10_m_agg,log10_m_running_max,p_anytime,decision\n", out);
  }

  double x = 0.0, y = 0.0;
  while (!session.stopped() && source->next(x, y)) {
    const StepReport rep = session.observe(x, y);
    const double running_max_log10 = nat_to_log10(session.log_running_max());
    if (jsonl) {
      std::fprintf(out, "{\"n\":%lld,\"log10_m_per_depth\":[",
                   static_cast<long long>(rep.n));
      for (std::size_t i = 0; i < rep.per_depth_log10_m.size(); ++i) {
        std::fprintf(out, "%s%.17g", i ? "," : "", rep.per_depth_log10_m[i]);
      }
      std::fprintf(out,
                   "],\"log10_m_agg\":%.17g,\"log10_m_running_max\":%.17g,"
                   "\"p_anytime\":%.17g,\"decision\":\"%s\"}\n",
                   rep.log10_m_agg, running_max_log10, rep.p_anytime,
                   decision_name(rep.decision));
    } else {
      std::fprintf(out, "%lld", static_cast<long long>(rep.n));
      for (double v : rep.per_depth_log10_m) std::fprintf(out, ",%.17g", v);
      std::fprintf(out, ",%.17g,%.17g,%.17g,%s\n", rep.log10_m_agg,
                   running_max_log10, rep.p_anytime,
                   decision_name(rep.decision));
    }
  }
  if (out != stdout) std::fclose(out);
  std::fprintf(stderr, "decision: %s after n=%lld (p_anytime=%.6g)\n",
               decision_name(session.decision()),
               static_cast<long long>(session.n()), session.p_anytime());
  return kExitOk;
}

// --- subcommand: simulate / baseline-sr -------------------------------------

struct SimulateOpts {
  CommonOpts common;
  std::string scenario = "linear";
  int noise = 1;
  std::int64_t reps = 1000;
  std::string out_prefix;
  std::int64_t curve_stride = 1;
};

void write_file(const std::string& path, const std::string& payload) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output: " + path);
  out << payload;
}

int run_simulate(const SimulateOpts& o) {
  SessionConfig cfg = to_session_config(o.common);
  if (!cfg.max_n) throw ConfigError("simulate requires --max-n");
  const std::int64_t budget = *cfg.max_n;
  ScenarioSpec spec{scenario_from_name(o.scenario), o.noise, budget,
                    derive_seed(cfg.seed, 0xdaaULL)};
  const ExperimentResult res =
      run_experiment(spec, cfg, o.reps, budget, o.common.threads);
  if (!o.out_prefix.empty()) {
    write_file(o.out_prefix + "_reps.csv", res.to_csv());
    write_file(o.out_prefix + "_curve.csv", res.curve_csv(o.curve_stride));
    write_file(o.out_prefix + "_summary.json", res.summary_json() + "\n");
  }
  std::fputs((res.summary_json() + "\n").c_str(), stdout);
  return kExitOk;
}

struct BaselineOpts {
  CommonOpts common;
  std::string scenario;
  int noise = 1;
  std::int64_t reps = 500;
  std::string input;
  std::string out_prefix;
};

int run_baseline(const BaselineOpts& o) {
  const double threshold = [&] {
    if (o.common.threshold == "ville") return 1.0 / o.common.alpha;
    if (o.common.threshold.rfind("fixed:", 0) == 0) {
      return std::stod(o.common.threshold.substr(6));
    }
    throw ConfigError("baseline-sr supports --threshold ville or fixed:L");
  }();

  if (!o.input.empty()) {
    StreamSource source(o.input);
    SrState state;
    double x = 0.0, y = 0.0;
    std::fputs("n_pairs,log10_m\n", stdout);
    while (source.next(x, y)) {
      const auto inc = state.observe(x, y);
      if (inc) {
        std::fprintf(stdout, "%lld,%.17g\n",
                     static_cast<long long>(state.n_pairs()),
                     nat_to_log10(state.log_m()));
      }
      if (state.log_m() >= std::log(threshold)) break;
    }
    std::fprintf(stderr, "final log10 M = %.6g after %lld pairs\n",
                 nat_to_log10(state.log_m()),
                 static_cast<long long>(state.n_pairs()));
    return kExitOk;
  }

  if (o.scenario.empty()) {
    throw ConfigError("provide --scenario NAME or --input FILE");
  }
  if (o.common.max_n <= 0) throw ConfigError("baseline-sr requires --max-n");
  ScenarioSpec spec{scenario_from_name(o.scenario), o.noise, o.common.max_n,
                    derive_seed(o.common.seed, 0xdaaULL)};
  const ExperimentResult res = run_sr_experiment(
      spec, SrConfig{}, threshold, o.reps, o.common.max_n, o.common.threads);
  if (!o.out_prefix.empty()) {
    write_file(o.out_prefix + "_reps.csv", res.to_csv());
    write_file(o.out_prefix + "_summary.json", res.summary_json() + "\n");
  }
  std::fputs((res.summary_json() + "\n").c_str(), stdout);
  return kExitOk;
}

// --- subcommand: calibrate ----------------------------------------------------

struct CalibrateOpts {
  CommonOpts common;
  std::vector<std::int64_t> horizons;
  std::int64_t reps = 20000;
  std::string out;
};

int run_calibrate(const CalibrateOpts& o) {
  CommonOpts base = o.common;
  base.threshold = "ville";  // the table itself is threshold-free
  const SessionConfig cfg = to_session_config(base);
  const CalibrationTable table =
      calibrate(cfg, o.common.alpha, o.horizons, o.reps, o.common.threads);
  const std::string payload = table.to_json() + "\n";
  if (!o.out.empty()) {
    write_file(o.out, payload);
  } else {
    std::fputs(payload.c_str(), stdout);
  }
  if (table.low_rep_warning) {
    std::fputs("warning: fewer than 1000 replications; thresholds are noisy\n",
               stderr);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-based anytime-valid sequential independence test"};
  app.require_subcommand(1);

  TestOpts test_opts;
  CLI::App* test_cmd = app.add_subcommand(
      "test", "Run the sequential test on a stream of (x,y) pairs");
  add_common_options(test_cmd, test_opts.common);
  test_cmd->add_option("--input", test_opts.input,
                       "CSV with two numeric columns, or - for stdin");
  test_cmd->add_option("--scenario", test_opts.scenario,
                       "Synthetic generator instead of --input");
  test_cmd->add_option("--noise", test_opts.noise, "Scenario noise level 0-10")
      ->capture_default_str();
  test_cmd->add_option("--output", test_opts.output,
                       "Per-step record destination (- for stdout)")
      ->capture_default_str();
  test_cmd->add_option("--format", test_opts.format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();

  SimulateOpts sim_opts;
  CLI::App* sim_cmd = app.add_subcommand(
      "simulate", "Power/stopping-time experiment over replications");
  add_common_options(sim_cmd, sim_opts.common);
  sim_cmd->add_option("--scenario", sim_opts.scenario, "Scenario name")
      ->capture_default_str();
  sim_cmd->add_option("--noise", sim_opts.noise, "Noise level 0-10")
      ->capture_default_str();
  sim_cmd->add_option("--reps", sim_opts.reps, "Replications")
      ->capture_default_str();
  sim_cmd->add_option("--out", sim_opts.out_prefix,
                      "Prefix for _reps.csv, _curve.csv, _summary.json");
  sim_cmd->add_option("--curve-stride", sim_opts.curve_stride,
                      "Stride of the rejection-rate curve")
      ->capture_default_str();

  CalibrateOpts cal_opts;
  CLI::App* cal_cmd = app.add_subcommand(
      "calibrate", "Monte Carlo thresholds L_{alpha,N} for truncated tests");
  add_common_options(cal_cmd, cal_opts.common);
  cal_cmd->add_option("--horizons", cal_opts.horizons, "Horizons N")
      ->delimiter(',')
      ->required();
  cal_cmd->add_option("--reps", cal_opts.reps, "Replications")
      ->capture_default_str();
  cal_cmd->add_option("--out", cal_opts.out, "Table destination (JSON)");

  BaselineOpts base_opts;
  CLI::App* base_cmd = app.add_subcommand(
      "baseline-sr", "Paired betting baseline with indicator witnesses");
  add_common_options(base_cmd, base_opts.common);
  base_cmd->add_option("--scenario", base_opts.scenario, "Scenario name");
  base_cmd->add_option("--noise", base_opts.noise, "Noise level 0-10")
      ->capture_default_str();
  base_cmd->add_option("--reps", base_opts.reps, "Replications")
      ->capture_default_str();
  base_cmd->add_option("--input", base_opts.input,
                       "Single-stream mode: CSV or - for stdin");
  base_cmd->add_option("--out", base_opts.out_prefix,
                       "Prefix for _reps.csv and _summary.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*test_cmd) return run_test(test_opts);
    if (*sim_cmd) return run_simulate(sim_opts);
    if (*cal_cmd) return run_calibrate(cal_opts);
    if (*base_cmd) return run_baseline(base_opts);
    return kExitUsage;
  } catch (const TiesPresent& e) {
    std::fprintf(stderr,
                 "error: %s\nhint: rerun with --tie-policy paths (B merged "
                 "randomized paths), --tie-policy single, or "
                 "--no-derandomize\n",
                 e.what());
    return kExitData;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
