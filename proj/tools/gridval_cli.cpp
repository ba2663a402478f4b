// gridval: robust feeder operation under per-provider data quality.
//
// Subcommands run experiment campaigns and write CSV/JSON artifacts into
// --out. Failures print a machine-readable error object on stdout and exit
// 1; usage problems exit 2.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gridval/harness.hpp"
#include "json.hpp"

namespace {

using namespace gridval;
using nlohmann::json;

struct CliOpts {
  RunConfig cfg;
  std::string eps_spec = "0.01";
  std::string out = "out";
  std::vector<double> levels = {1.0, 0.1, 0.01, 0.005, 0.001, 0.0001};
  int vary_cluster = -1;
  int cluster = -1;
  std::vector<double> grid;
  double fixed_eps = 0.01;
};

void add_common(CLI::App* sub, CliOpts& o) {
  sub->add_option("--case", o.cfg.case_path, "MATPOWER-subset case file")
      ->required();
  sub->add_option("--config", o.cfg.scenario_path,
                  "scenario JSON (assets, costs, clusters)");
  sub->add_option("--profiles", o.cfg.profiles_path,
                  "profiles CSV (default: profiles.csv next to the case)");
  sub->add_option("--pv", o.cfg.pv, "PV placement override")
      ->check(CLI::IsMember({"high", "low", "none"}));
  sub->add_option("--load", o.cfg.load, "load scenario")
      ->check(CLI::IsMember({"high", "low"}));
  sub->add_option("--hours,--hour", o.cfg.hours, "hour indices (0-23)")
      ->delimiter(',');
  sub->add_option("--eps", o.eps_spec,
                  "radius: a value, a comma list (one per provider), or "
                  "'true' for measured radii");
  sub->add_option("--seed", o.cfg.seed, "campaign seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--threads", o.cfg.threads,
                  "worker threads (0: GRIDVAL_THREADS or 1)");
  sub->add_option("--I", o.cfg.I, "operating sample count");
  sub->add_option("--I-full", o.cfg.I_full, "true-distribution sample count");
  sub->add_option("--I-test", o.cfg.I_test, "fresh test sample count");
  sub->add_option("--rel-std", o.cfg.rel_std, "relative forecast std");
  sub->add_option("--replicates", o.cfg.replicates, "seeded replicates");
}

void apply_eps(RunConfig& cfg, const std::string& spec) {
  if (spec == "true") {
    cfg.eps_mode = "true";
    return;
  }
  const auto parse = [&](const std::string& tok) {
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw std::runtime_error("configuration error: invalid --eps value '" +
                               tok + "'");
    }
  };
  if (spec.find(',') != std::string::npos) {
    cfg.eps_mode = "vector";
    cfg.eps_vector.clear();
    size_t start = 0;
    while (start <= spec.size()) {
      const size_t comma = spec.find(',', start);
      const size_t end = comma == std::string::npos ? spec.size() : comma;
      cfg.eps_vector.push_back(parse(spec.substr(start, end - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return;
  }
  cfg.eps_mode = "uniform";
  cfg.eps_uniform = parse(spec);
}

std::string out_path(const CliOpts& o, const char* name) {
  return (std::filesystem::path(o.out) / name).string();
}

std::string eps_brief(const std::vector<double>& eps) {
  std::string s = "[";
  for (size_t i = 0; i < eps.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.4g", i ? "," : "", eps[i]);
    s += buf;
  }
  return s + "]";
}

int cmd_solve(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  const std::vector<SolveRun> runs = run_solves(sc, o.cfg);
  write_file(out_path(o, "objective.csv"), objective_csv(runs, o.cfg));
  write_file(out_path(o, "mu.csv"), mu_csv(runs));
  write_file(out_path(o, "lambda.csv"), lambda_csv(runs, sc));
  write_file(out_path(o, "solution.json"), solution_json(runs, sc));
  for (const SolveRun& r : runs)
    std::printf("hour %d: objective %.6f (%s, %d iterations, %.1fs) eps %s\n",
                r.hour, r.objective, to_string(r.status), r.iterations,
                r.solve_time_s, eps_brief(r.eps).c_str());
  return 0;
}

int cmd_sweep(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  const SweepResult sw = sweep_epsilon(sc, o.cfg, o.levels, o.vary_cluster);
  write_file(out_path(o, "objective.csv"), objective_csv(sw));
  write_file(out_path(o, "mu.csv"), mu_csv(sw));
  write_file(out_path(o, "lambda.csv"), lambda_csv(sw, sc));
  int failures = 0;
  for (const SweepEntry& e : sw.entries) {
    if (e.failed) {
      ++failures;
      std::printf("hour %d level %.6g: failed (%s)\n", e.hour, e.level,
                  e.error.c_str());
    } else {
      std::printf("hour %d level %.6g: objective %.6f\n", e.hour, e.level,
                  e.objective);
    }
  }
  return failures == 0 ? 0 : 1;
}

int cmd_validate(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  const OosResult oos = run_out_of_sample(sc, o.cfg);
  write_file(out_path(o, "objective.csv"), objective_csv(oos));
  write_file(out_path(o, "cost_oos.csv"), cost_oos_csv(oos));
  write_file(out_path(o, "voltages_oos.csv"), voltages_oos_csv(oos, sc));
  write_file(out_path(o, "summary.json"), oos_summary_json(oos, o.cfg));
  for (const OosRun& r : oos.runs)
    std::printf(
        "hour %d replicate %d: robust %d/%zu violations (mean cost %.4f, "
        "objective %.4f), sample-average %d/%zu (mean cost %.4f)\n",
        r.hour, r.replicate, r.dro_violations, r.dro_cost.size(),
        r.dro_mean_cost, r.dro_objective, r.saa_violations, r.saa_cost.size(),
        r.saa_mean_cost);
  return 0;
}

int cmd_critical(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  CriticalEpsOptions copts;
  if (!o.grid.empty()) copts.grid = o.grid;
  copts.fixed_eps = o.fixed_eps;
  const int F = sc.clusters.num_clusters();
  if (o.cluster < -1 || o.cluster >= F)
    throw std::runtime_error("configuration error: cluster out of range");
  std::vector<int> clusters;
  if (o.cluster >= 0)
    clusters.push_back(o.cluster);
  else
    for (int f = 0; f < F; ++f) clusters.push_back(f);

  std::vector<CriticalEpsReport> reports;
  std::vector<int> hours;
  for (const int hour : o.cfg.hours) {
    const HourData hd = make_hour_data(sc, o.cfg, hour, o.cfg.seed);
    const OpfInstance inst = make_hour_instance(sc, hd);
    for (const int f : clusters) {
      reports.push_back(critical_epsilon(inst, f, copts));
      hours.push_back(hour);
    }
  }
  write_file(out_path(o, "critical_eps.csv"), critical_eps_csv(reports, hours));
  json arr = json::array();
  for (size_t i = 0; i < reports.size(); ++i) {
    json j = json::parse(to_json(reports[i]));
    j["hour"] = hours[i];
    arr.push_back(std::move(j));
  }
  std::cout << (arr.size() == 1 ? arr[0].dump(2) : arr.dump(2)) << "\n";
  return 0;
}

int cmd_value_report(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  const std::vector<SolveRun> runs = run_solves(sc, o.cfg);
  if (runs.size() == 1) {
    std::cout << to_json(runs[0].value);
    return 0;
  }
  json arr = json::array();
  for (const SolveRun& r : runs) {
    json j = json::parse(to_json(r.value));
    j["hour"] = r.hour;
    arr.push_back(std::move(j));
  }
  std::cout << arr.dump(2) << "\n";
  return 0;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  char buf[64];
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%s%.17g", j ? "," : "", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

int cmd_export(CliOpts& o) {
  const Scenario sc = load_scenario(o.cfg);
  const VoltageSensitivity sens = sensitivity_matrices(sc.net);
  write_file(out_path(o, "rmatrix.csv"), matrix_csv(sens.R));
  write_file(out_path(o, "bmatrix.csv"), matrix_csv(sens.B));
  std::string nodes = "node,bus_id,parent_bus,r_pu,x_pu\n";
  for (int i = 0; i < sc.net.n(); ++i) {
    const int parent = sc.net.parent[i];
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.17g,%.17g\n", i,
                  sc.net.bus_ids[i],
                  parent < 0 ? sc.net.slack_id : sc.net.bus_ids[parent],
                  sc.net.r_pu[i], sc.net.x_pu[i]);
    nodes += buf;
  }
  write_file(out_path(o, "nodes.csv"), nodes);
  std::printf("wrote %d x %d sensitivity matrices to %s\n", sc.net.n(),
              sc.net.n(), o.out.c_str());
  return 0;
}

std::string error_json(const std::string& msg) {
  std::string type = "error";
  std::string message = msg;
  const size_t colon = msg.find(':');
  if (colon != std::string::npos && colon > 0 && colon < 40) {
    type = msg.substr(0, colon);
    size_t start = colon + 1;
    while (start < msg.size() && msg[start] == ' ') ++start;
    message = msg.substr(start);
  }
  json j;
  j["error"] = {{"type", type}, {"message", message}};
  return j.dump() + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gridval: distributionally robust feeder operation and the marginal "
      "value of data quality"};
  app.require_subcommand(1);
  CliOpts o;

  CLI::App* solve = app.add_subcommand(
      "solve", "robust solve per hour; writes objective/mu/lambda CSVs and "
               "solution.json");
  add_common(solve, o);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "solve across radius levels; writes objective/mu/lambda CSVs");
  add_common(sweep, o);
  sweep->add_option("--levels", o.levels, "radius levels")->delimiter(',');
  sweep->add_option("--vary-cluster", o.vary_cluster,
                    "sweep one provider, hold others at --eps");

  CLI::App* validate = app.add_subcommand(
      "validate", "out-of-sample protocol; writes cost/voltage CSVs and "
                  "summary.json");
  add_common(validate, o);

  CLI::App* critical = app.add_subcommand(
      "critical-eps", "scan for the radius where transport prices vanish");
  add_common(critical, o);
  critical->add_option("--cluster", o.cluster,
                       "provider to scan (-1: all)");
  critical->add_option("--grid", o.grid, "descending radius grid")
      ->delimiter(',');
  critical->add_option("--fixed-eps", o.fixed_eps,
                       "radius held by the other providers");

  CLI::App* value = app.add_subcommand(
      "value-report", "robust solve; prints the data-value report as JSON");
  add_common(value, o);

  CLI::App* export_m = app.add_subcommand(
      "export-matrices", "write voltage sensitivity matrices and node table");
  add_common(export_m, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_eps(o.cfg, o.eps_spec);
    if (solve->parsed()) return cmd_solve(o);
    if (sweep->parsed()) return cmd_sweep(o);
    if (validate->parsed()) return cmd_validate(o);
    if (critical->parsed()) return cmd_critical(o);
    if (value->parsed()) return cmd_value_report(o);
    if (export_m->parsed()) return cmd_export(o);
    return 2;
  } catch (const std::exception& ex) {
    std::cout << error_json(ex.what());
    return 1;
  }
}
