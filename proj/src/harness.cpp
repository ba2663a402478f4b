#include "gridval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace gridval {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& what) {
  throw std::runtime_error("configuration error: " + what);
}

[[noreturn]] void io_fail(const std::string& what) {
  throw std::runtime_error("io error: " + what);
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) io_fail("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

uint64_t splitmix_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t bounded(uint64_t& state, uint64_t n) {
  const uint64_t lim = UINT64_MAX - UINT64_MAX % n;
  uint64_t r;
  do {
    r = splitmix_next(state);
  } while (r >= lim);
  return r % n;
}

// Fisher-Yates over 0..pool-1, first `take` kept, ascending. Hand-rolled so
// the byte-level outputs do not depend on the standard library's shuffle.
std::vector<int> subsample_indices(int pool, int take, uint64_t seed) {
  std::vector<int> idx(pool);
  for (int i = 0; i < pool; ++i) idx[i] = i;
  uint64_t st = seed;
  for (int j = pool - 1; j >= 1; --j)
    std::swap(idx[j], idx[bounded(st, static_cast<uint64_t>(j) + 1)]);
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SampleSet subset_samples(const SampleSet& s, const std::vector<int>& rows) {
  SampleSet out;
  out.I = static_cast<int>(rows.size());
  out.delta.reserve(s.delta.size());
  for (const Eigen::MatrixXd& m : s.delta) {
    Eigen::MatrixXd sub(out.I, m.cols());
    for (int r = 0; r < out.I; ++r) sub.row(r) = m.row(rows[r]);
    out.delta.push_back(std::move(sub));
  }
  return out;
}

LoadScenario load_enum(const std::string& s) {
  return s == "low" ? LoadScenario::Low : LoadScenario::High;
}

// The measured-radius draw: true distribution, shared-index subsample, and
// the exact transport distance per provider in feature units.
struct ProtocolDraw {
  SampleSet full;
  SampleSet operating;
  std::vector<double> eps;
};

ProtocolDraw protocol_draw(const Scenario& sc, const RunConfig& cfg,
                           const Forecast& fc, const SupportBox& box, int hour,
                           uint64_t seed) {
  ProtocolDraw d;
  d.full = generate_samples(fc, cfg.rel_std, cfg.I_full,
                            substream_seed(seed, kStreamTrue, hour), box,
                            sc.clusters, sc.index);
  const std::vector<int> rows = subsample_indices(
      cfg.I_full, cfg.I, substream_seed(seed, kStreamShuffle, hour));
  d.operating = subset_samples(d.full, rows);
  const int F = sc.clusters.num_clusters();
  d.eps.resize(F);
  for (int f = 0; f < F; ++f)
    d.eps[f] = wasserstein_distance(d.full.delta[f], d.operating.delta[f]) /
               kKwPerFeatureUnit;
  return d;
}

std::vector<double> configured_eps(const RunConfig& cfg, int F) {
  if (cfg.eps_mode == "uniform")
    return std::vector<double>(F, cfg.eps_uniform);
  if (static_cast<int>(cfg.eps_vector.size()) != F)
    config_fail("eps vector has " + std::to_string(cfg.eps_vector.size()) +
                " entries for " + std::to_string(F) + " providers");
  return cfg.eps_vector;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// Per-node features of one sample, kW, aligned with network node order.
void sample_loads(const SampleSet& s, const ClusterSet& cs,
                  const FeatureIndex& fidx, int i, Eigen::VectorXd& pav,
                  Eigen::VectorXd& pl, Eigen::VectorXd& ql) {
  const int n = static_cast<int>(cs.node_to_cluster.size());
  pav.setZero(n);
  pl.setZero(n);
  ql.setZero(n);
  for (int f = 0; f < cs.num_clusters(); ++f) {
    for (const int node : fidx.cluster_nodes(f)) {
      pav[node] = s.delta[f](i, fidx.position(f, node, Feature::PAv));
      pl[node] = s.delta[f](i, fidx.position(f, node, Feature::PLoad));
      ql[node] = s.delta[f](i, fidx.position(f, node, Feature::QLoad));
    }
  }
}

struct ScoredDecisions {
  std::vector<double> cost;
  Eigen::MatrixXd v2;
  std::vector<double> gap;
  int violations = 0;
};

ScoredDecisions score_decisions(const OpfInstance& inst, const Decisions& dec,
                                const SampleSet& test) {
  const int n = inst.net.n();
  ScoredDecisions sc;
  sc.cost.resize(test.I);
  sc.gap.resize(test.I);
  sc.v2.resize(test.I, n);
  Eigen::VectorXd pav(n), pl(n), ql(n);
  const double to_pu = 1.0 / (kKwPerFeatureUnit * inst.net.base_mva);
  for (int i = 0; i < test.I; ++i) {
    sc.cost[i] = realized_cost(inst, dec, test, i);
    sample_loads(test, inst.clusters, inst.index, i, pav, pl, ql);
    const Eigen::VectorXd p =
        ((Eigen::VectorXd::Ones(n) - dec.alpha).cwiseProduct(pav) - pl) *
            to_pu +
        dec.pb / inst.net.base_mva;
    const Eigen::VectorXd q =
        -ql * to_pu + (dec.qc + dec.qb) / inst.net.base_mva;
    const Eigen::VectorXd v2 = predict_voltages(inst.sens, p, q);
    sc.v2.row(i) = v2;
    const double gap = std::max((v2.array() - inst.assets.vmax).maxCoeff(),
                                (inst.assets.vmin - v2.array()).maxCoeff());
    sc.gap[i] = gap;
    if (gap > 1e-9) ++sc.violations;
  }
  return sc;
}

double percentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0.0;
  const double pos = q * (static_cast<double>(v.size()) - 1.0);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

json percentiles_json(const std::vector<double>& v) {
  json j;
  j["p5"] = percentile(v, 0.05);
  j["p25"] = percentile(v, 0.25);
  j["p50"] = percentile(v, 0.50);
  j["p75"] = percentile(v, 0.75);
  j["p95"] = percentile(v, 0.95);
  return j;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

void append_mu_rows(std::string& out, const std::string& ctx,
                    const DataValueReport& value) {
  for (const ClusterValue& cv : value.clusters)
    out += ctx + ',' + std::to_string(cv.cluster) + ',' +
           g17(value.eps[cv.cluster]) + ',' + g17(cv.lambda_co) + ',' +
           g17(cv.lambda_vol) + ',' + g17(cv.sum_lambda_inv) + ',' +
           g17(value.phi_vol) + ',' + g17(cv.mu) + '\n';
}

void append_lambda_rows(std::string& out, const std::string& ctx,
                        const DataValueReport& value, const Scenario& sc) {
  for (size_t p = 0; p < value.pv_nodes.size(); ++p) {
    const int node = value.pv_nodes[p];
    out += ctx + ',' + std::to_string(sc.net.bus_ids[node]) + ',' +
           std::to_string(sc.clusters.node_to_cluster[node]) + ',' +
           g17(value.lambda_inv[p]) + ',' + g17(value.phi_inv[p]) + '\n';
  }
}

json value_json(const DataValueReport& value) {
  return json::parse(to_json(value));
}

}  // namespace

void validate_config(const RunConfig& cfg) {
  if (cfg.case_path.empty()) config_fail("case path is required");
  if (cfg.load != "high" && cfg.load != "low")
    config_fail("load must be 'high' or 'low'");
  if (!cfg.pv.empty() && cfg.pv != "high" && cfg.pv != "low" &&
      cfg.pv != "none")
    config_fail("pv must be 'high', 'low', or 'none'");
  if (cfg.eps_mode != "uniform" && cfg.eps_mode != "vector" &&
      cfg.eps_mode != "true")
    config_fail("eps mode must be 'uniform', 'vector', or 'true'");
  if (cfg.I <= 0 || cfg.I_test <= 0 || cfg.I_full <= 0)
    config_fail("sample counts must be positive");
  if (cfg.I > cfg.I_full)
    config_fail("operating sample count exceeds the true-distribution count");
  if (cfg.replicates < 1) config_fail("replicates must be at least 1");
  if (!(cfg.rel_std >= 0.0) || !std::isfinite(cfg.rel_std))
    config_fail("rel_std must be finite and nonnegative");
  if (!(cfg.eps_uniform >= 0.0)) config_fail("radii must be nonnegative");
  for (const double e : cfg.eps_vector)
    if (!(e >= 0.0) || !std::isfinite(e))
      config_fail("radii must be finite and nonnegative");
  if (cfg.hours.empty()) config_fail("at least one hour is required");
  for (const int h : cfg.hours)
    if (h < 0 || h >= 24) config_fail("hours must lie in 0..23");
  if (cfg.threads < 0) config_fail("threads must be nonnegative");
}

int resolve_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  if (const char* env = std::getenv("GRIDVAL_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return 1;
}

Scenario load_scenario(const RunConfig& cfg) {
  validate_config(cfg);
  Scenario sc;
  sc.net = build_network(parse_matpower_case(read_file(cfg.case_path)));

  std::string scenario_text =
      cfg.scenario_path.empty() ? std::string("{}")
                                : read_file(cfg.scenario_path);
  json doc;
  try {
    doc = json::parse(scenario_text);
  } catch (const json::exception& e) {
    config_fail(std::string("invalid scenario JSON: ") + e.what());
  }
  if (!cfg.pv.empty()) {
    doc["pv"] = cfg.pv == "high"  ? "high_pv"
                : cfg.pv == "low" ? "low_pv"
                                  : "none";
    scenario_text = doc.dump();
  }
  sc.assets = load_scenario_config(scenario_text, sc.net);
  sc.clusters = clusters_from_config(scenario_text, sc.net);
  sc.index = feature_index_map(sc.clusters);

  // Profiles precedence: explicit flag, then the scenario's "profiles" key
  // (relative to the scenario file), then profiles.csv next to the case.
  std::string ppath = cfg.profiles_path;
  if (ppath.empty() && doc.contains("profiles")) {
    if (!doc["profiles"].is_string())
      config_fail("profiles must be a path string");
    const std::filesystem::path rel = doc["profiles"].get<std::string>();
    ppath = rel.is_absolute() || cfg.scenario_path.empty()
                ? rel.string()
                : (std::filesystem::path(cfg.scenario_path).parent_path() /
                   rel)
                      .string();
  }
  if (ppath.empty())
    ppath = (std::filesystem::path(cfg.case_path).parent_path() /
             "profiles.csv")
                .string();
  sc.profiles = load_profiles_file(ppath);
  return sc;
}

HourData make_hour_data(const Scenario& sc, const RunConfig& cfg, int hour,
                        uint64_t seed) {
  HourData hd;
  hd.hour = hour;
  hd.forecast =
      make_forecast(sc.net, sc.assets, sc.profiles, hour, load_enum(cfg.load));
  hd.support = default_support(hd.forecast, sc.assets, sc.clusters, sc.index);
  if (cfg.eps_mode == "true") {
    ProtocolDraw d =
        protocol_draw(sc, cfg, hd.forecast, hd.support, hour, seed);
    hd.operating = std::move(d.operating);
    hd.eps = std::move(d.eps);
  } else {
    hd.operating = generate_samples(hd.forecast, cfg.rel_std, cfg.I,
                                    substream_seed(seed, kStreamOperating, hour),
                                    hd.support, sc.clusters, sc.index);
    hd.eps = configured_eps(cfg, sc.clusters.num_clusters());
  }
  return hd;
}

OpfInstance make_hour_instance(const Scenario& sc, const HourData& hd) {
  QualityInfo q;
  q.eps = hd.eps;
  return make_instance(sc.net, sc.assets, sc.clusters, hd.operating,
                       hd.support, q, hd.hour);
}

std::vector<SolveRun> run_solves(const Scenario& sc, const RunConfig& cfg) {
  validate_config(cfg);
  const int H = static_cast<int>(cfg.hours.size());
  std::vector<SolveRun> runs(H);
  parallel_for(H, resolve_threads(cfg), [&](int t) {
    const int hour = cfg.hours[t];
    const HourData hd = make_hour_data(sc, cfg, hour, cfg.seed);
    const OpfInstance inst = make_hour_instance(sc, hd);
    const BuiltModel model = build_msw_dro(inst);
    const Solution sol = solve(model.prog, {});
    if (!sol.optimal())
      throw std::runtime_error("solver failure: hour " + std::to_string(hour) +
                               ": " + to_string(sol.status));
    SolveRun& r = runs[t];
    r.hour = hour;
    r.eps = hd.eps;
    r.objective = sol.objective;
    r.status = sol.status;
    r.solve_time_s = sol.solve_time_s;
    r.iterations = sol.iterations;
    r.decisions = extract_decisions(model.layout, sol);
    r.value = marginal_data_value(model, sol, inst);
    r.kkt = check_kkt(model.prog, sol);
    r.kkt_pass = r.kkt.pass(1e-6);
  });
  return runs;
}

SweepResult sweep_epsilon(const Scenario& sc, const RunConfig& cfg,
                          const std::vector<double>& levels,
                          int varied_cluster) {
  validate_config(cfg);
  if (levels.empty()) config_fail("sweep needs at least one level");
  for (const double lv : levels)
    if (!(lv >= 0.0) || !std::isfinite(lv))
      config_fail("sweep levels must be finite and nonnegative");
  const int F = sc.clusters.num_clusters();
  if (varied_cluster < -1 || varied_cluster >= F)
    config_fail("varied cluster out of range");

  // Sweeps always use a direct operating draw; the levels are the radii.
  RunConfig draw_cfg = cfg;
  draw_cfg.eps_mode = "uniform";

  const int H = static_cast<int>(cfg.hours.size());
  std::vector<HourData> hours(H);
  for (int t = 0; t < H; ++t)
    hours[t] = make_hour_data(sc, draw_cfg, cfg.hours[t], cfg.seed);

  SweepResult res;
  res.levels = levels;
  res.varied_cluster = varied_cluster;
  const int L = static_cast<int>(levels.size());
  res.entries.resize(static_cast<size_t>(H) * L);
  parallel_for(H * L, resolve_threads(cfg), [&](int t) {
    const int hi = t / L, li = t % L;
    SweepEntry& e = res.entries[t];
    e.hour = cfg.hours[hi];
    e.level = levels[li];
    e.varied_cluster = varied_cluster;
    try {
      HourData hd = hours[hi];
      if (varied_cluster < 0) {
        hd.eps.assign(F, e.level);
      } else {
        hd.eps.assign(F, cfg.eps_uniform);
        hd.eps[varied_cluster] = e.level;
      }
      const OpfInstance inst = make_hour_instance(sc, hd);
      const BuiltModel model = build_msw_dro(inst);
      const Solution sol = solve(model.prog, {});
      if (!sol.optimal())
        throw std::runtime_error(std::string("solver failure: ") +
                                 to_string(sol.status));
      e.objective = sol.objective;
      e.value = marginal_data_value(model, sol, inst);
      e.kkt_pass = check_kkt(model.prog, sol).pass(1e-6);
    } catch (const std::exception& ex) {
      e.failed = true;
      e.error = ex.what();
    }
  });
  return res;
}

OosResult run_out_of_sample(const Scenario& sc, const RunConfig& cfg) {
  validate_config(cfg);
  const int H = static_cast<int>(cfg.hours.size());
  const int R = cfg.replicates;
  OosResult res;
  res.runs.resize(static_cast<size_t>(H) * R);
  parallel_for(H * R, resolve_threads(cfg), [&](int t) {
    const int hour = cfg.hours[t / R];
    const int rep = t % R;
    const uint64_t rep_seed = substream_seed(cfg.seed, kStreamReplicate, rep);

    const Forecast fc = make_forecast(sc.net, sc.assets, sc.profiles, hour,
                                      load_enum(cfg.load));
    const SupportBox box = default_support(fc, sc.assets, sc.clusters,
                                           sc.index);
    ProtocolDraw draw = protocol_draw(sc, cfg, fc, box, hour, rep_seed);
    const std::vector<double> eps =
        cfg.eps_mode == "true"
            ? draw.eps
            : configured_eps(cfg, sc.clusters.num_clusters());
    const SampleSet test = generate_samples(
        fc, cfg.rel_std, cfg.I_test, substream_seed(rep_seed, kStreamTest, hour),
        box, sc.clusters, sc.index);

    QualityInfo q;
    q.eps = eps;
    const OpfInstance inst = make_instance(sc.net, sc.assets, sc.clusters,
                                           draw.operating, box, q, hour);

    const BuiltModel dro = build_msw_dro(inst);
    const Solution dro_sol = solve(dro.prog, {});
    if (!dro_sol.optimal())
      throw std::runtime_error(
          "solver failure: robust solve, hour " + std::to_string(hour) +
          " replicate " + std::to_string(rep) + ": " +
          to_string(dro_sol.status));
    const BuiltModel saa = build_saa(inst);
    const Solution saa_sol = solve(saa.prog, {});
    if (!saa_sol.optimal())
      throw std::runtime_error(
          "solver failure: sample-average solve, hour " +
          std::to_string(hour) + " replicate " + std::to_string(rep) + ": " +
          to_string(saa_sol.status));

    OosRun& r = res.runs[t];
    r.hour = hour;
    r.replicate = rep;
    r.seed = rep_seed;
    r.eps = eps;
    r.dro_objective = dro_sol.objective;
    r.saa_objective = saa_sol.objective;
    r.value = marginal_data_value(dro, dro_sol, inst);
    r.dro_kkt_pass = check_kkt(dro.prog, dro_sol).pass(1e-6);
    r.saa_kkt_pass = check_kkt(saa.prog, saa_sol).pass(1e-6);

    const ScoredDecisions ds =
        score_decisions(inst, extract_decisions(dro.layout, dro_sol), test);
    const ScoredDecisions ss =
        score_decisions(inst, extract_decisions(saa.layout, saa_sol), test);
    r.dro_cost = ds.cost;
    r.saa_cost = ss.cost;
    r.dro_v2 = ds.v2;
    r.saa_v2 = ss.v2;
    r.dro_gap = ds.gap;
    r.saa_gap = ss.gap;
    r.dro_violations = ds.violations;
    r.saa_violations = ss.violations;
    r.dro_violation_rate =
        static_cast<double>(ds.violations) / static_cast<double>(test.I);
    r.saa_violation_rate =
        static_cast<double>(ss.violations) / static_cast<double>(test.I);
    r.dro_mean_cost = mean(ds.cost);
    r.saa_mean_cost = mean(ss.cost);
  });
  return res;
}

std::string objective_csv(const std::vector<SolveRun>& runs,
                          const RunConfig& cfg) {
  std::string out =
      "hour,replicate,method,eps_mode,varied_cluster,level,objective,status\n";
  const std::string level =
      cfg.eps_mode == "uniform" ? g17(cfg.eps_uniform) : std::string();
  for (const SolveRun& r : runs)
    out += std::to_string(r.hour) + ",0,dro," + cfg.eps_mode + ",-1," + level +
           ',' + g17(r.objective) + ",ok\n";
  return out;
}

std::string objective_csv(const SweepResult& sweep) {
  std::string out =
      "hour,replicate,method,eps_mode,varied_cluster,level,objective,status\n";
  for (const SweepEntry& e : sweep.entries) {
    out += std::to_string(e.hour) + ",0,dro,sweep," +
           std::to_string(e.varied_cluster) + ',' + g17(e.level) + ',';
    if (e.failed)
      out += ",failed\n";
    else
      out += g17(e.objective) + ",ok\n";
  }
  return out;
}

std::string objective_csv(const OosResult& oos) {
  std::string out =
      "hour,replicate,method,eps_mode,varied_cluster,level,objective,status\n";
  for (const OosRun& r : oos.runs) {
    const std::string ctx =
        std::to_string(r.hour) + ',' + std::to_string(r.replicate);
    out += ctx + ",dro,oos,-1,," + g17(r.dro_objective) + ",ok\n";
    out += ctx + ",saa,oos,-1,," + g17(r.saa_objective) + ",ok\n";
  }
  return out;
}

std::string mu_csv(const std::vector<SolveRun>& runs) {
  std::string out =
      "hour,replicate,varied_cluster,level,f,eps,lambda_co,lambda_vol,"
      "sum_lambda_inv,phi_vol,mu\n";
  for (const SolveRun& r : runs)
    append_mu_rows(out, std::to_string(r.hour) + ",0,-1,", r.value);
  return out;
}

std::string mu_csv(const SweepResult& sweep) {
  std::string out =
      "hour,replicate,varied_cluster,level,f,eps,lambda_co,lambda_vol,"
      "sum_lambda_inv,phi_vol,mu\n";
  for (const SweepEntry& e : sweep.entries) {
    if (e.failed) continue;
    append_mu_rows(out,
                   std::to_string(e.hour) + ",0," +
                       std::to_string(e.varied_cluster) + ',' + g17(e.level),
                   e.value);
  }
  return out;
}

std::string lambda_csv(const std::vector<SolveRun>& runs, const Scenario& sc) {
  std::string out =
      "hour,replicate,varied_cluster,level,node,f,lambda_inv,phi_inv\n";
  for (const SolveRun& r : runs)
    append_lambda_rows(out, std::to_string(r.hour) + ",0,-1,", r.value, sc);
  return out;
}

std::string lambda_csv(const SweepResult& sweep, const Scenario& sc) {
  std::string out =
      "hour,replicate,varied_cluster,level,node,f,lambda_inv,phi_inv\n";
  for (const SweepEntry& e : sweep.entries) {
    if (e.failed) continue;
    append_lambda_rows(out,
                       std::to_string(e.hour) + ",0," +
                           std::to_string(e.varied_cluster) + ',' +
                           g17(e.level),
                       e.value, sc);
  }
  return out;
}

std::string cost_oos_csv(const OosResult& oos) {
  std::string out = "hour,replicate,sample,method,cost\n";
  for (const OosRun& r : oos.runs) {
    const std::string ctx =
        std::to_string(r.hour) + ',' + std::to_string(r.replicate) + ',';
    for (size_t i = 0; i < r.dro_cost.size(); ++i)
      out += ctx + std::to_string(i) + ",dro," + g17(r.dro_cost[i]) + '\n';
    for (size_t i = 0; i < r.saa_cost.size(); ++i)
      out += ctx + std::to_string(i) + ",saa," + g17(r.saa_cost[i]) + '\n';
  }
  return out;
}

std::string voltages_oos_csv(const OosResult& oos, const Scenario& sc) {
  std::string out = "hour,replicate,sample,method,node,v2,gap\n";
  const double vmax = sc.assets.vmax, vmin = sc.assets.vmin;
  for (const OosRun& r : oos.runs) {
    const std::string ctx =
        std::to_string(r.hour) + ',' + std::to_string(r.replicate) + ',';
    const auto emit = [&](const char* method, const Eigen::MatrixXd& v2) {
      for (int i = 0; i < v2.rows(); ++i)
        for (int j = 0; j < v2.cols(); ++j) {
          const double v = v2(i, j);
          out += ctx + std::to_string(i) + ',' + method + ',' +
                 std::to_string(sc.net.bus_ids[j]) + ',' + g17(v) + ',' +
                 g17(std::max(v - vmax, vmin - v)) + '\n';
        }
    };
    emit("dro", r.dro_v2);
    emit("saa", r.saa_v2);
  }
  return out;
}

std::string critical_eps_csv(const std::vector<CriticalEpsReport>& reports,
                             const std::vector<int>& hours) {
  std::string out = "hour,f,family,n_lambdas,found,critical_eps,vanish_eps\n";
  for (size_t i = 0; i < reports.size(); ++i) {
    const CriticalEpsReport& r = reports[i];
    const int hour = i < hours.size() ? hours[i] : -1;
    for (const FamilyCritical* fam : {&r.co, &r.vol, &r.inv}) {
      out += std::to_string(hour) + ',' + std::to_string(r.cluster) + ',' +
             fam->family + ',' + std::to_string(fam->n_lambdas) + ',' +
             (fam->found ? "1" : "0") + ',' +
             (fam->found ? g17(fam->critical_eps)
                         : std::string("above_grid_max")) +
             ',';
      for (size_t k = 0; k < fam->vanish_eps.size(); ++k) {
        if (k) out += ';';
        out += g17(fam->vanish_eps[k]);
      }
      out += '\n';
    }
  }
  return out;
}

std::string solution_json(const std::vector<SolveRun>& runs,
                          const Scenario& sc) {
  json arr = json::array();
  for (const SolveRun& r : runs) {
    json j;
    j["hour"] = r.hour;
    j["eps"] = r.eps;
    j["objective"] = r.objective;
    j["status"] = to_string(r.status);
    j["iterations"] = r.iterations;
    j["kkt"] = {{"primal_residual", r.kkt.primal_residual},
                {"dual_residual", r.kkt.dual_residual},
                {"dual_cone_violation", r.kkt.dual_cone_violation},
                {"comp_slackness", r.kkt.comp_slackness},
                {"rel_gap", r.kkt.rel_gap},
                {"pass_1e6", r.kkt_pass}};
    json dec;
    dec["node"] = sc.net.bus_ids;
    const auto vec = [](const Eigen::VectorXd& v, double scale) {
      std::vector<double> out(v.size());
      for (int i = 0; i < v.size(); ++i) out[i] = v[i] * scale;
      return out;
    };
    dec["alpha"] = vec(r.decisions.alpha, 1.0);
    dec["qc_kvar"] = vec(r.decisions.qc, kKwPerFeatureUnit);
    dec["pb_kw"] = vec(r.decisions.pb, kKwPerFeatureUnit);
    dec["qb_kvar"] = vec(r.decisions.qb, kKwPerFeatureUnit);
    j["decisions"] = std::move(dec);
    j["value"] = value_json(r.value);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::string oos_summary_json(const OosResult& oos, const RunConfig& cfg) {
  json j;
  j["config"] = {{"hours", cfg.hours},
                 {"eps_mode", cfg.eps_mode},
                 {"I", cfg.I},
                 {"I_full", cfg.I_full},
                 {"I_test", cfg.I_test},
                 {"replicates", cfg.replicates},
                 {"rel_std", cfg.rel_std},
                 {"seed", cfg.seed},
                 {"load", cfg.load},
                 {"pv", cfg.pv}};
  json runs = json::array();
  for (const OosRun& r : oos.runs) {
    json e;
    e["hour"] = r.hour;
    e["replicate"] = r.replicate;
    e["seed"] = r.seed;
    e["eps"] = r.eps;
    e["dro"] = {{"objective", r.dro_objective},
                {"mean_oos_cost", r.dro_mean_cost},
                {"violations", r.dro_violations},
                {"violation_rate", r.dro_violation_rate},
                {"cost_percentiles", percentiles_json(r.dro_cost)},
                {"kkt_pass_1e6", r.dro_kkt_pass}};
    e["saa"] = {{"objective", r.saa_objective},
                {"mean_oos_cost", r.saa_mean_cost},
                {"violations", r.saa_violations},
                {"violation_rate", r.saa_violation_rate},
                {"cost_percentiles", percentiles_json(r.saa_cost)},
                {"kkt_pass_1e6", r.saa_kkt_pass}};
    e["value"] = value_json(r.value);
    runs.push_back(std::move(e));
  }
  j["runs"] = std::move(runs);
  return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& content) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path())
    std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out.good()) io_fail("cannot write " + path);
  out << content;
  if (!out.good()) io_fail("short write to " + path);
}

}  // namespace gridval
