#pragma once

// MATPOWER-subset case parsing, radial network construction, and per-node
// asset/cost configuration.

#include <string>
#include <unordered_map>
#include <vector>

namespace gridval {

// Raw rows from a case file, columns mapped by MATPOWER position. Loads are
// MW/Mvar; branch impedances are ohms on the from-bus base kV.
struct RawCase {
  struct Bus {
    int id = 0;
    int type = 0;
    double pd_mw = 0.0, qd_mvar = 0.0;
    double base_kv = 0.0;
    double vmax = 0.0, vmin = 0.0;
  };
  struct Branch {
    int from = 0, to = 0;
    double r_ohm = 0.0, x_ohm = 0.0;
    int status = 1;
  };
  double base_mva = 0.0;
  std::vector<Bus> bus_rows;
  std::vector<Branch> branch_rows;
};

// Throws std::runtime_error: "parse error line N: ..." for malformed matrix
// blocks, "structural error: ..." for missing blocks or violated row
// invariants (duplicate bus ids, undeclared branch endpoints, base_mva <= 0).
RawCase parse_matpower_case(const std::string& text);

// Canonical text form; parse(serialize(raw)) reproduces raw exactly.
std::string serialize_matpower_case(const RawCase& raw);

// Radial feeder rooted at the slack bus. Node i (0-based, breadth-first from
// the slack) is bus_ids[i]; the branch feeding it from parent[i] (-1 means
// the slack itself) has impedance r_pu[i], x_pu[i].
struct Network {
  double base_mva = 0.0;
  int slack_id = 0;
  std::vector<int> bus_ids;
  std::vector<int> parent;
  std::vector<double> r_pu, x_pu;
  std::vector<double> pd_kw, qd_kvar;
  std::unordered_map<int, int> index_of;

  int n() const { return static_cast<int>(bus_ids.size()); }
  // -1 for the slack or an unknown id.
  int node_index(int bus_id) const {
    auto it = index_of.find(bus_id);
    return it == index_of.end() ? -1 : it->second;
  }
};

// Throws "not radial: ..." on cycles/disconnection, "configuration error:
// ..." when the case has no or multiple slack (type 3) buses.
Network build_network(const RawCase& raw);

// Per-node assets and scalar limits, arrays aligned with Network node order.
// vmax/vmin bound the squared voltage magnitude.
struct AssetTable {
  std::vector<double> pv_kw;
  std::vector<double> pb_min_kw, pb_max_kw, qb_min_kvar, qb_max_kvar;
  std::vector<double> cost_c, cost_d, cost_e, cost_h;
  double vmax = 1.1, vmin = 0.9;
  double eta_vol = 0.05, eta_inv = 0.05;

  bool has_pv(int node) const { return pv_kw[node] > 0.0; }
};

// Scenario config document (JSON text; see docs/scenario_config.md). Empty
// or "{}" yields the defaults: high_pv PV placement, the four standard DER
// nodes, c/d/e/h = 10/3/3/6, voltage limits 1.1/0.9, eta = 0.05.
// Throws "configuration error: ..." on unknown nodes or out-of-range values.
AssetTable load_scenario_config(const std::string& json_text,
                                const Network& net);

// Built-in PV placements: "high_pv" (19 systems), "low_pv" (10 systems),
// "none". Returned as (bus_id, rating_kw) pairs.
const std::vector<std::pair<int, double>>& pv_scenario_table(
    const std::string& name);

}  // namespace gridval
