#pragma once

// Experiment campaigns over a feeder case: single solves, radius sweeps, and
// out-of-sample validation, with deterministic CSV/JSON emission. Every
// campaign is a pure function of (RunConfig, seed): sample streams derive
// from substream_seed tags, result rows are ordered by task index, and
// numbers are printed with %.17g, so repeated runs produce identical bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "gridval/dro_opf.hpp"
#include "gridval/valuation.hpp"

namespace gridval {

// Sample-stream derivation tags, fixed so results stay reproducible across
// releases. A campaign stream is substream_seed(seed, tag, hour); replicate
// streams first derive substream_seed(seed, kStreamReplicate, replicate).
constexpr uint64_t kStreamOperating = 11;
constexpr uint64_t kStreamTrue = 12;
constexpr uint64_t kStreamShuffle = 13;
constexpr uint64_t kStreamTest = 14;
constexpr uint64_t kStreamReplicate = 15;

struct RunConfig {
  std::string case_path;      // MATPOWER-subset case file
  std::string scenario_path;  // scenario JSON; empty means all defaults
  std::string profiles_path;  // empty means profiles.csv next to the case
  std::string pv;             // "", "high", "low", "none"; empty keeps the
                              // scenario document's choice
  std::string load = "high";  // "high" or "low"
  std::vector<int> hours = {18};

  // Radius specification. "uniform" applies eps_uniform to every provider,
  // "vector" uses eps_vector (one entry per provider), "true" runs the
  // measured-radius protocol: draw I_full samples as the true distribution,
  // subsample I with shared indices across providers, and set each radius to
  // the exact transport distance between the two empirical distributions.
  std::string eps_mode = "uniform";
  double eps_uniform = 0.01;
  std::vector<double> eps_vector;

  int I = 25;
  int I_full = 1000;
  int I_test = 100;
  int replicates = 1;
  double rel_std = 0.2;
  uint64_t seed = 7;

  // 0 reads GRIDVAL_THREADS (default 1). Independent solves are dispatched
  // concurrently; aggregation order is fixed by task index either way.
  int threads = 0;
  std::string out_dir;  // empty: campaigns only return data
};

// Throws "configuration error: ..." on out-of-range fields.
void validate_config(const RunConfig& cfg);

struct Scenario {
  Network net;
  AssetTable assets;
  ClusterSet clusters;
  FeatureIndex index;
  DayProfiles profiles;
};

// Loads case, scenario document, and profiles; a nonempty cfg.pv overrides
// the document's PV placement.
Scenario load_scenario(const RunConfig& cfg);

// The per-hour uncertainty data a campaign solve runs on. In "true" mode
// `operating` is the shared-index subsample of the I_full draw and eps holds
// the measured distances (feature units); otherwise `operating` is a direct
// I-sample draw and eps comes from the config.
struct HourData {
  int hour = 0;
  Forecast forecast;
  SupportBox support;
  SampleSet operating;
  std::vector<double> eps;
};

HourData make_hour_data(const Scenario& sc, const RunConfig& cfg, int hour,
                        uint64_t seed);

OpfInstance make_hour_instance(const Scenario& sc, const HourData& hd);

struct SolveRun {
  int hour = 0;
  std::vector<double> eps;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Error;
  double solve_time_s = 0.0;
  int iterations = 0;
  Decisions decisions;
  DataValueReport value;
  KktReport kkt;
  bool kkt_pass = false;  // at 1e-6
};

// One robust solve per configured hour. Throws on solver failure.
std::vector<SolveRun> run_solves(const Scenario& sc, const RunConfig& cfg);

struct SweepEntry {
  int hour = 0;
  double level = 0.0;
  int varied_cluster = -1;  // -1: level applied to every provider
  bool failed = false;
  std::string error;
  double objective = 0.0;
  DataValueReport value;
  bool kkt_pass = false;
};

struct SweepResult {
  std::vector<double> levels;
  int varied_cluster = -1;
  std::vector<SweepEntry> entries;  // hour-major, then level order
};

// One robust solve per (hour, level). varied_cluster >= 0 sweeps only that
// provider's radius and holds the others at cfg.eps_uniform. A failing level
// is recorded and the sweep continues.
SweepResult sweep_epsilon(const Scenario& sc, const RunConfig& cfg,
                          const std::vector<double>& levels,
                          int varied_cluster = -1);

struct OosRun {
  int hour = 0;
  int replicate = 0;
  uint64_t seed = 0;  // derived replicate stream
  std::vector<double> eps;
  double dro_objective = 0.0;
  double saa_objective = 0.0;
  DataValueReport value;  // from the robust solve
  bool dro_kkt_pass = false;
  bool saa_kkt_pass = false;
  // Per fresh test sample: realized cost, squared voltages (I_test x n),
  // and the joint gap max over all 2n voltage rows.
  std::vector<double> dro_cost, saa_cost;
  Eigen::MatrixXd dro_v2, saa_v2;
  std::vector<double> dro_gap, saa_gap;
  int dro_violations = 0, saa_violations = 0;
  double dro_violation_rate = 0.0, saa_violation_rate = 0.0;
  double dro_mean_cost = 0.0, saa_mean_cost = 0.0;
};

struct OosResult {
  std::vector<OosRun> runs;  // hour-major, then replicate
};

// The out-of-sample protocol, per hour and replicate: draw the true
// distribution (I_full), subsample I operating samples with shared indices,
// measure the radii, solve robust and sample-average programs, then score
// both decision sets on I_test fresh samples. A sample counts as violating
// when any of the 2n voltage rows exceeds 1e-9.
OosResult run_out_of_sample(const Scenario& sc, const RunConfig& cfg);

// Deterministic CSV emission. Headers are documented in docs/output_csvs.md.
std::string objective_csv(const std::vector<SolveRun>& runs,
                          const RunConfig& cfg);
std::string objective_csv(const SweepResult& sweep);
std::string objective_csv(const OosResult& oos);
std::string mu_csv(const std::vector<SolveRun>& runs);
std::string mu_csv(const SweepResult& sweep);
std::string lambda_csv(const std::vector<SolveRun>& runs, const Scenario& sc);
std::string lambda_csv(const SweepResult& sweep, const Scenario& sc);
std::string cost_oos_csv(const OosResult& oos);
std::string voltages_oos_csv(const OosResult& oos, const Scenario& sc);
std::string critical_eps_csv(const std::vector<CriticalEpsReport>& reports,
                             const std::vector<int>& hours);
std::string solution_json(const std::vector<SolveRun>& runs,
                          const Scenario& sc);
std::string oos_summary_json(const OosResult& oos, const RunConfig& cfg);

// Creates parents as needed; throws "io error: ..." on failure.
void write_file(const std::string& path, const std::string& content);

// cfg.threads, else GRIDVAL_THREADS, else 1.
int resolve_threads(const RunConfig& cfg);

}  // namespace gridval
