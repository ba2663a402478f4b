#include "gridval/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <map>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gridval {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw std::runtime_error("parse error line " + std::to_string(line) + ": " +
                           what);
}

[[noreturn]] void structural_fail(const std::string& what) {
  throw std::runtime_error("structural error: " + what);
}

[[noreturn]] void config_fail(const std::string& what) {
  throw std::runtime_error("configuration error: " + what);
}

int as_int(double v, int line, const char* what) {
  const double r = std::round(v);
  if (std::fabs(v - r) > 1e-9) parse_fail(line, std::string(what) + " must be an integer");
  return static_cast<int>(r);
}

struct MatrixRow {
  std::vector<double> vals;
  int line = 0;
};

// One mpc.<name> = [ ... ]; block: numeric tokens, rows closed by ';'.
struct BlockScan {
  std::string name;
  std::vector<MatrixRow> rows;
};

}  // namespace

RawCase parse_matpower_case(const std::string& text) {
  bool have_base = false;
  double base_mva = 0.0;
  std::map<std::string, std::vector<MatrixRow>> blocks;

  std::string block_name;   // empty when outside any matrix block
  bool block_known = false; // rows are only validated for blocks we consume
  MatrixRow row;

  std::istringstream in(text);
  std::string raw_line;
  int lineno = 0;
  while (std::getline(in, raw_line)) {
    ++lineno;
    std::string line = raw_line.substr(0, raw_line.find('%'));
    size_t pos = 0;
    auto skip_ws = [&] {
      while (pos < line.size() && (std::isspace(static_cast<unsigned char>(line[pos])) || line[pos] == ','))
        ++pos;
    };
    if (block_name.empty()) {
      skip_ws();
      if (line.compare(pos, 4, "mpc.") != 0) continue;
      pos += 4;
      size_t name_end = pos;
      while (name_end < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[name_end])) || line[name_end] == '_'))
        ++name_end;
      const std::string name = line.substr(pos, name_end - pos);
      pos = line.find('=', name_end);
      if (pos == std::string::npos) continue;
      ++pos;
      skip_ws();
      if (pos < line.size() && line[pos] == '[') {
        block_name = name;
        block_known = (name == "bus" || name == "branch");
        if (block_known) blocks[block_name];  // an empty block still counts as present
        row = {{}, 0};
        ++pos;
      } else if (name == "baseMVA") {
        char* end = nullptr;
        base_mva = std::strtod(line.c_str() + pos, &end);
        if (end == line.c_str() + pos) parse_fail(lineno, "baseMVA is not numeric");
        have_base = true;
        continue;
      } else {
        continue;  // scalar or string assignment we do not consume
      }
    }
    // Inside a matrix block (possibly entered on this same line).
    while (pos < line.size()) {
      skip_ws();
      if (pos >= line.size()) break;
      const char c = line[pos];
      if (c == ';') {
        if (!row.vals.empty()) {
          row.line = row.line ? row.line : lineno;
          blocks[block_name].push_back(row);
          row = {{}, 0};
        }
        ++pos;
      } else if (c == ']') {
        if (!row.vals.empty()) {
          row.line = row.line ? row.line : lineno;
          blocks[block_name].push_back(row);
          row = {{}, 0};
        }
        block_name.clear();
        pos = line.size();  // drop trailing ');' etc.
      } else {
        char* end = nullptr;
        const double v = std::strtod(line.c_str() + pos, &end);
        if (end == line.c_str() + pos) {
          if (block_known) parse_fail(lineno, std::string("unexpected token '") + c + "' in matrix block");
          ++pos;  // skipped block: tolerate anything
          continue;
        }
        if (row.vals.empty()) row.line = lineno;
        row.vals.push_back(v);
        pos = static_cast<size_t>(end - line.c_str());
      }
    }
  }
  if (!block_name.empty())
    structural_fail("unterminated matrix block mpc." + block_name);
  if (!have_base) structural_fail("missing mpc.baseMVA");
  if (!blocks.count("bus")) structural_fail("missing mpc.bus block");
  if (!blocks.count("branch")) structural_fail("missing mpc.branch block");

  RawCase raw;
  raw.base_mva = base_mva;
  for (const MatrixRow& r : blocks["bus"]) {
    if (r.vals.size() < 13)
      parse_fail(r.line, "bus row has " + std::to_string(r.vals.size()) +
                             " columns, expected at least 13");
    RawCase::Bus b;
    b.id = as_int(r.vals[0], r.line, "bus id");
    b.type = as_int(r.vals[1], r.line, "bus type");
    b.pd_mw = r.vals[2];
    b.qd_mvar = r.vals[3];
    b.base_kv = r.vals[9];
    b.vmax = r.vals[11];
    b.vmin = r.vals[12];
    raw.bus_rows.push_back(b);
  }
  for (const MatrixRow& r : blocks["branch"]) {
    if (r.vals.size() < 11)
      parse_fail(r.line, "branch row has " + std::to_string(r.vals.size()) +
                             " columns, expected at least 11");
    RawCase::Branch br;
    br.from = as_int(r.vals[0], r.line, "branch from bus");
    br.to = as_int(r.vals[1], r.line, "branch to bus");
    br.r_ohm = r.vals[2];
    br.x_ohm = r.vals[3];
    br.status = as_int(r.vals[10], r.line, "branch status");
    raw.branch_rows.push_back(br);
  }

  if (raw.base_mva <= 0.0) structural_fail("base_mva must be positive");
  std::map<int, int> seen;
  for (const auto& b : raw.bus_rows) {
    if (seen.count(b.id))
      structural_fail("duplicate bus id " + std::to_string(b.id));
    seen[b.id] = 1;
  }
  for (const auto& br : raw.branch_rows) {
    if (!seen.count(br.from) || !seen.count(br.to))
      structural_fail("branch " + std::to_string(br.from) + "-" +
                      std::to_string(br.to) + " references an undeclared bus");
  }
  return raw;
}

std::string serialize_matpower_case(const RawCase& raw) {
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::string out;
  out += "function mpc = case\n";
  out += "mpc.version = '2';\n";
  out += "mpc.baseMVA = " + num(raw.base_mva) + ";\n";
  out += "mpc.bus = [\n";
  for (const auto& b : raw.bus_rows) {
    out += "\t" + std::to_string(b.id) + "\t" + std::to_string(b.type) + "\t" +
           num(b.pd_mw) + "\t" + num(b.qd_mvar) + "\t0\t0\t1\t1\t0\t" +
           num(b.base_kv) + "\t1\t" + num(b.vmax) + "\t" + num(b.vmin) + ";\n";
  }
  out += "];\nmpc.branch = [\n";
  for (const auto& br : raw.branch_rows) {
    out += "\t" + std::to_string(br.from) + "\t" + std::to_string(br.to) +
           "\t" + num(br.r_ohm) + "\t" + num(br.x_ohm) +
           "\t0\t0\t0\t0\t0\t0\t" + std::to_string(br.status) +
           "\t-360\t360;\n";
  }
  out += "];\n";
  return out;
}

Network build_network(const RawCase& raw) {
  int slack_id = 0, n_slack = 0;
  std::map<int, const RawCase::Bus*> bus_map;
  for (const auto& b : raw.bus_rows) {
    bus_map[b.id] = &b;
    if (b.type == 3) {
      slack_id = b.id;
      ++n_slack;
    }
  }
  if (n_slack != 1)
    config_fail("expected exactly one slack (type 3) bus, found " +
                std::to_string(n_slack));

  std::vector<const RawCase::Branch*> live;
  for (const auto& br : raw.branch_rows)
    if (br.status != 0) live.push_back(&br);
  if (live.size() + 1 != raw.bus_rows.size())
    throw std::runtime_error(
        "not radial: " + std::to_string(live.size()) +
        " in-service branches for " + std::to_string(raw.bus_rows.size()) +
        " buses (tree needs buses - 1)");

  std::map<int, std::vector<std::pair<int, const RawCase::Branch*>>> adj;
  for (const auto* br : live) {
    adj[br->from].push_back({br->to, br});
    adj[br->to].push_back({br->from, br});
  }
  for (auto& [id, nbrs] : adj)
    std::sort(nbrs.begin(), nbrs.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

  Network net;
  net.base_mva = raw.base_mva;
  net.slack_id = slack_id;
  std::map<int, int> visited;  // bus id -> node index (slack -> -1)
  visited[slack_id] = -1;
  std::deque<int> queue{slack_id};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    for (const auto& [v, br] : adj[u]) {
      if (visited.count(v)) continue;
      const int idx = net.n();
      visited[v] = idx;
      net.bus_ids.push_back(v);
      net.parent.push_back(visited[u]);
      const RawCase::Bus* from_bus = bus_map[br->from];
      const double z = raw.base_mva / (from_bus->base_kv * from_bus->base_kv);
      net.r_pu.push_back(br->r_ohm * z);
      net.x_pu.push_back(br->x_ohm * z);
      const RawCase::Bus* bus = bus_map[v];
      net.pd_kw.push_back(bus->pd_mw * 1000.0);
      net.qd_kvar.push_back(bus->qd_mvar * 1000.0);
      queue.push_back(v);
    }
  }
  if (visited.size() != raw.bus_rows.size())
    throw std::runtime_error("not radial: network is disconnected");
  for (int i = 0; i < net.n(); ++i) net.index_of[net.bus_ids[i]] = i;
  return net;
}

const std::vector<std::pair<int, double>>& pv_scenario_table(
    const std::string& name) {
  static const std::vector<std::pair<int, double>> high = {
      {3, 500},  {5, 500},  {6, 750},  {8, 400},  {11, 750},
      {12, 800}, {14, 200}, {16, 500}, {17, 200}, {18, 500},
      {19, 200}, {21, 500}, {22, 500}, {23, 200}, {25, 300},
      {27, 600}, {29, 600}, {31, 300}, {33, 800}};
  static const std::vector<std::pair<int, double>> low = {
      {3, 500},  {5, 500},  {6, 750},  {8, 400},  {11, 750},
      {12, 800}, {14, 200}, {21, 500}, {29, 600}, {33, 800}};
  static const std::vector<std::pair<int, double>> none;
  if (name == "high_pv") return high;
  if (name == "low_pv") return low;
  if (name == "none") return none;
  config_fail("unknown pv scenario '" + name + "'");
}

AssetTable load_scenario_config(const std::string& json_text,
                                const Network& net) {
  json doc;
  try {
    doc = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::exception& e) {
    config_fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) config_fail("scenario document must be a JSON object");

  const int n = net.n();
  AssetTable t;
  t.pv_kw.assign(n, 0.0);
  t.pb_min_kw.assign(n, 0.0);
  t.pb_max_kw.assign(n, 0.0);
  t.qb_min_kvar.assign(n, 0.0);
  t.qb_max_kvar.assign(n, 0.0);

  double c = 10.0, d = 3.0, e = 3.0, h = 6.0;
  if (doc.contains("cost")) {
    const json& jc = doc["cost"];
    c = jc.value("c", c);
    d = jc.value("d", d);
    e = jc.value("e", e);
    h = jc.value("h", h);
  }
  t.cost_c.assign(n, c);
  t.cost_d.assign(n, d);
  t.cost_e.assign(n, e);
  t.cost_h.assign(n, h);
  if (doc.contains("cost") && doc["cost"].contains("overrides")) {
    for (const json& ov : doc["cost"]["overrides"]) {
      const int idx = net.node_index(ov.at("node").get<int>());
      if (idx < 0)
        config_fail("cost override node " +
                    std::to_string(ov.at("node").get<int>()) +
                    " not in network");
      if (ov.contains("c")) t.cost_c[idx] = ov["c"].get<double>();
      if (ov.contains("d")) t.cost_d[idx] = ov["d"].get<double>();
      if (ov.contains("e")) t.cost_e[idx] = ov["e"].get<double>();
      if (ov.contains("h")) t.cost_h[idx] = ov["h"].get<double>();
    }
  }

  std::string scenario = "high_pv";
  json systems = json::array();
  if (doc.contains("pv")) {
    const json& jp = doc["pv"];
    if (jp.is_string()) {
      scenario = jp.get<std::string>();
    } else if (jp.is_object()) {
      scenario = jp.value("scenario", scenario);
      if (jp.contains("systems")) systems = jp["systems"];
    } else {
      config_fail("pv must be a scenario name or an object");
    }
  }
  for (const auto& [bus, kw] : pv_scenario_table(scenario)) {
    const int idx = net.node_index(bus);
    if (idx < 0)
      config_fail("pv scenario node " + std::to_string(bus) +
                  " not in network");
    t.pv_kw[idx] = kw;
  }
  for (const json& sys : systems) {
    const int bus = sys.at("node").get<int>();
    const int idx = net.node_index(bus);
    if (idx < 0)
      config_fail("pv node " + std::to_string(bus) + " not in network");
    const double kw = sys.at("rating_kw").get<double>();
    if (kw < 0.0) config_fail("pv rating must be nonnegative");
    t.pv_kw[idx] = kw;
  }

  json der = json::array({{{"node", 19}, {"p_limit_kw", 50.0}},
                          {{"node", 20}, {"p_limit_kw", 22.0}},
                          {{"node", 24}, {"p_limit_kw", 50.0}},
                          {{"node", 25}, {"p_limit_kw", 50.0}}});
  if (doc.contains("der")) der = doc["der"];
  for (const json& unit : der) {
    const int bus = unit.at("node").get<int>();
    const int idx = net.node_index(bus);
    if (idx < 0)
      config_fail("der node " + std::to_string(bus) + " not in network");
    const double p = unit.at("p_limit_kw").get<double>();
    const double q = unit.value("q_limit_kvar", 0.0);
    if (p < 0.0 || q < 0.0) config_fail("der limits must be nonnegative");
    t.pb_min_kw[idx] = -p;
    t.pb_max_kw[idx] = p;
    t.qb_min_kvar[idx] = -q;
    t.qb_max_kvar[idx] = q;
  }

  if (doc.contains("voltage_limits")) {
    const json& jv = doc["voltage_limits"];
    t.vmax = jv.value("vmax", t.vmax);
    t.vmin = jv.value("vmin", t.vmin);
  }
  if (t.vmin >= t.vmax) config_fail("voltage limits require vmin < vmax");
  if (doc.contains("risk")) {
    const json& jr = doc["risk"];
    t.eta_vol = jr.value("eta_vol", t.eta_vol);
    t.eta_inv = jr.value("eta_inv", t.eta_inv);
  }
  if (t.eta_vol <= 0.0 || t.eta_vol >= 1.0 || t.eta_inv <= 0.0 ||
      t.eta_inv >= 1.0)
    config_fail("risk levels must lie strictly between 0 and 1");
  return t;
}

}  // namespace gridval
