#include "ads/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <set>
#include <sstream>

#include "ads/error.hpp"
#include "ads/io.hpp"

namespace ads {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

// Cuts an unquoted # comment off the tail of a line.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); i++) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool is_int_literal(const std::string& s) {
  size_t i = (s[0] == '+' || s[0] == '-') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); i++)
    if (!std::isdigit((unsigned char)s[i])) return false;
  return true;
}

TomlValue parse_scalar(const std::string& raw, const std::string& where) {
  std::string s = trim(raw);
  if (s.empty()) throw ConfigError(where + ": empty value");
  TomlValue v;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"')
      throw ConfigError(where + ": unterminated string");
    v.kind = TomlValue::Kind::String;
    for (size_t i = 1; i + 1 < s.size(); i++) {
      if (s[i] == '\\' && i + 2 < s.size() &&
          (s[i + 1] == '"' || s[i + 1] == '\\')) {
        v.s += s[i + 1];
        i++;
      } else {
        v.s += s[i];
      }
    }
    return v;
  }
  if (s == "true" || s == "false") {
    v.kind = TomlValue::Kind::Bool;
    v.b = (s == "true");
    return v;
  }
  if (is_int_literal(s)) {
    v.kind = TomlValue::Kind::Int;
    v.i = std::strtoll(s.c_str(), nullptr, 10);
    return v;
  }
  char* end = nullptr;
  double f = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw ConfigError(where + ": cannot parse value '" + s + "'");
  v.kind = TomlValue::Kind::Float;
  v.f = f;
  return v;
}

std::vector<std::string> split_array_items(const std::string& body,
                                           const std::string& where) {
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (char c : body) {
    if (c == '"') quoted = !quoted;
    if (c == ',' && !quoted) {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ConfigError(where + ": unterminated string in array");
  if (!trim(cur).empty() || !items.empty()) items.push_back(cur);
  // allow a trailing comma: drop a dangling empty tail
  if (!items.empty() && trim(items.back()).empty()) items.pop_back();
  return items;
}

}  // namespace

double TomlValue::as_number(const std::string& where) const {
  if (kind == Kind::Int) return double(i);
  if (kind == Kind::Float) return f;
  throw ConfigError(where + ": expected a number");
}

TomlTable TomlTable::parse(const std::string& text) {
  TomlTable t;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    lineno++;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    std::string where = "line " + std::to_string(lineno);
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + ": malformed section");
      section = trim(s.substr(1, s.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      t.sections_[section];
      continue;
    }
    size_t eq = std::string::npos;
    bool quoted = false;
    for (size_t i = 0; i < s.size(); i++) {
      if (s[i] == '"') quoted = !quoted;
      if (s[i] == '=' && !quoted) {
        eq = i;
        break;
      }
    }
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    where += " (" + (section.empty() ? key : section + "." + key) + ")";
    auto& sec = t.sections_[section];
    if (sec.count(key)) throw ConfigError(where + ": duplicate key");
    if (!val.empty() && val.front() == '[') {
      if (val.back() != ']') throw ConfigError(where + ": malformed array");
      TomlValue v;
      v.kind = TomlValue::Kind::Array;
      for (const auto& item :
           split_array_items(val.substr(1, val.size() - 2), where))
        v.arr.push_back(parse_scalar(item, where));
      sec[key] = std::move(v);
    } else {
      sec[key] = parse_scalar(val, where);
    }
  }
  return t;
}

const TomlValue* TomlTable::find(const std::string& section,
                                 const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

bool TomlTable::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

int64_t TomlTable::get_int(const std::string& section, const std::string& key,
                           int64_t fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::Int)
    throw ConfigError(section + "." + key + ": expected an integer");
  return v->i;
}

double TomlTable::get_float(const std::string& section, const std::string& key,
                            double fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  return v->as_number(section + "." + key);
}

bool TomlTable::get_bool(const std::string& section, const std::string& key,
                         bool fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::Bool)
    throw ConfigError(section + "." + key + ": expected true/false");
  return v->b;
}

std::string TomlTable::get_string(const std::string& section,
                                  const std::string& key,
                                  const std::string& fallback) const {
  const TomlValue* v = find(section, key);
  if (!v) return fallback;
  if (v->kind != TomlValue::Kind::String)
    throw ConfigError(section + "." + key + ": expected a string");
  return v->s;
}

std::vector<int64_t> TomlTable::get_int_array(const std::string& section,
                                              const std::string& key) const {
  const TomlValue* v = find(section, key);
  std::vector<int64_t> out;
  if (!v) return out;
  if (v->kind != TomlValue::Kind::Array)
    throw ConfigError(section + "." + key + ": expected an array");
  for (const auto& e : v->arr) {
    if (e.kind != TomlValue::Kind::Int)
      throw ConfigError(section + "." + key + ": expected integer elements");
    out.push_back(e.i);
  }
  return out;
}

std::vector<double> TomlTable::get_float_array(const std::string& section,
                                               const std::string& key) const {
  const TomlValue* v = find(section, key);
  std::vector<double> out;
  if (!v) return out;
  if (v->kind != TomlValue::Kind::Array)
    throw ConfigError(section + "." + key + ": expected an array");
  for (const auto& e : v->arr)
    out.push_back(e.as_number(section + "." + key));
  return out;
}

std::vector<std::string> TomlTable::get_string_array(
    const std::string& section, const std::string& key) const {
  const TomlValue* v = find(section, key);
  std::vector<std::string> out;
  if (!v) return out;
  if (v->kind != TomlValue::Kind::Array)
    throw ConfigError(section + "." + key + ": expected an array");
  for (const auto& e : v->arr) {
    if (e.kind != TomlValue::Kind::String)
      throw ConfigError(section + "." + key + ": expected string elements");
    out.push_back(e.s);
  }
  return out;
}

std::vector<std::string> TomlTable::unknown_keys(
    const std::vector<std::string>& known) const {
  std::set<std::string> allow(known.begin(), known.end());
  std::vector<std::string> out;
  for (const auto& [section, keys] : sections_)
    for (const auto& [key, value] : keys) {
      std::string full = section.empty() ? key : section + "." + key;
      if (!allow.count(full)) out.push_back(full);
    }
  return out;
}

const std::vector<std::string> kExperimentKinds = {
    "placement", "schedulers", "deployment", "scaling",
    "recovery",  "regret",     "convergence", "sweep-C"};

namespace {

const std::vector<std::string> kKnownKeys = {
    "scenario.experiment", "scenario.id", "scenario.seed", "scenario.seeds",
    "scenario.out",
    "overlay.nodes", "overlay.zones", "overlay.leaf_size",
    "overlay.topology_file",
    "apps.count", "apps.counts",
    "bandit.c", "bandit.packets", "bandit.l", "bandit.hop_limits",
    "bandit.c_values", "bandit.policies",
    "graph.file", "graph.kind", "graph.nodes", "graph.links",
    "graph.delay_min_ms", "graph.delay_max_ms", "graph.theta_lo",
    "graph.theta_hi", "graph.collector_frac", "graph.nodes_grid",
    "graph.links_grid",
    "erasure.m", "erasure.k", "erasure.interval_ms", "erasure.m_grid",
    "erasure.k_grid", "erasure.state_mb",
    "scaling.alpha", "scaling.r", "scaling.q", "scaling.link_rate_tuples",
    "scaling.pressure_file", "scaling.stateful_ops",
};

void require_file(const std::string& field, const std::string& path) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path))
    throw ConfigError(field + ": file not found: " + path);
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text,
                              const std::string& path) {
  TomlTable t = TomlTable::parse(text);
  auto unknown = t.unknown_keys(kKnownKeys);
  if (!unknown.empty())
    throw ConfigError("unknown config key: " + unknown.front());

  ScenarioConfig c;
  c.path = path;
  c.experiment = t.get_string("scenario", "experiment", "");
  c.scenario_id = t.get_string("scenario", "id", c.experiment);
  c.seed = uint64_t(t.get_int("scenario", "seed", 1));
  c.seeds = int(t.get_int("scenario", "seeds", 1));
  c.out_dir = t.get_string("scenario", "out", "out");

  c.overlay_nodes = int(t.get_int("overlay", "nodes", 1000));
  c.overlay_zones = int(t.get_int("overlay", "zones", 16));
  c.leaf_size = int(t.get_int("overlay", "leaf_size", 24));
  c.topology_file = t.get_string("overlay", "topology_file", "");

  c.apps = int(t.get_int("apps", "count", 100));
  c.app_counts = t.get_int_array("apps", "counts");

  c.bandit_c = t.get_float("bandit", "c", 0.2);
  c.packets = int(t.get_int("bandit", "packets", 1000));
  c.lcb_l = t.get_float("bandit", "l", 1.0);
  c.hop_limits = t.get_int_array("bandit", "hop_limits");
  c.c_values = t.get_float_array("bandit", "c_values");
  c.policies = t.get_string_array("bandit", "policies");

  c.graph_file = t.get_string("graph", "file", "");
  c.graph_kind = t.get_string("graph", "kind", "grid-road");
  c.graph_nodes = int(t.get_int("graph", "nodes", 25));
  c.graph_links = int(t.get_int("graph", "links", 32));
  c.delay_min_ms = t.get_float("graph", "delay_min_ms", 50.0);
  c.delay_max_ms = t.get_float("graph", "delay_max_ms", 250.0);
  c.theta_lo = t.get_float("graph", "theta_lo", 0.5);
  c.theta_hi = t.get_float("graph", "theta_hi", 0.95);
  c.collector_frac = t.get_float("graph", "collector_frac", 0.2);
  c.nodes_grid = t.get_int_array("graph", "nodes_grid");
  c.links_grid = t.get_int_array("graph", "links_grid");

  c.erasure_m = int(t.get_int("erasure", "m", 4));
  c.erasure_k = int(t.get_int("erasure", "k", 2));
  c.checkpoint_interval_ms = int(t.get_int("erasure", "interval_ms", 1000));
  c.m_grid = t.get_int_array("erasure", "m_grid");
  c.k_grid = t.get_int_array("erasure", "k_grid");
  c.state_mb = t.get_float_array("erasure", "state_mb");

  c.alpha = t.get_float("scaling", "alpha", 0.5);
  c.rate_per_instance = t.get_float("scaling", "r", 30.0);
  c.queue_per_instance = t.get_float("scaling", "q", 10.0);
  c.link_rate_tuples = t.get_float("scaling", "link_rate_tuples", 10000.0);
  c.pressure_file = t.get_string("scaling", "pressure_file", "");
  c.stateful_ops = t.get_string_array("scaling", "stateful_ops");

  validate_scenario(c);
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  return parse_scenario(read_text_file(path), path);
}

void validate_scenario(const ScenarioConfig& c) {
  if (std::find(kExperimentKinds.begin(), kExperimentKinds.end(),
                c.experiment) == kExperimentKinds.end()) {
    std::string kinds;
    for (const auto& k : kExperimentKinds)
      kinds += (kinds.empty() ? "" : ", ") + k;
    throw ConfigError("scenario.experiment: must be one of {" + kinds +
                      "}, got '" + c.experiment + "'");
  }
  if (c.scenario_id.empty())
    throw ConfigError("scenario.id: must be non-empty");
  if (c.seeds < 1) throw ConfigError("scenario.seeds: must be >= 1");

  if (c.overlay_nodes < 1) throw ConfigError("overlay.nodes: must be >= 1");
  if (c.overlay_zones < 1) throw ConfigError("overlay.zones: must be >= 1");
  if (c.leaf_size < 1) throw ConfigError("overlay.leaf_size: must be >= 1");

  if (c.apps < 1) throw ConfigError("apps.count: must be >= 1");
  for (int64_t a : c.app_counts)
    if (a < 1) throw ConfigError("apps.counts: entries must be >= 1");

  if (c.bandit_c <= 0) throw ConfigError("bandit.c: must be > 0");
  if (c.packets < 1) throw ConfigError("bandit.packets: must be >= 1");
  if (c.lcb_l < 0) throw ConfigError("bandit.l: must be >= 0");
  for (int64_t h : c.hop_limits)
    if (h < 0) throw ConfigError("bandit.hop_limits: entries must be >= 0");
  for (double v : c.c_values)
    if (v <= 0) throw ConfigError("bandit.c_values: entries must be > 0");
  for (const auto& p : c.policies)
    if (p != "klucb" && p != "nexthop" && p != "endtoend" && p != "optimal")
      throw ConfigError("bandit.policies: unknown policy '" + p + "'");

  if (c.graph_kind != "grid-road" && c.graph_kind != "ring" &&
      c.graph_kind != "random")
    throw ConfigError("graph.kind: must be grid-road, ring, or random");
  if (c.graph_nodes < 2) throw ConfigError("graph.nodes: must be >= 2");
  if (c.graph_links < 1) throw ConfigError("graph.links: must be >= 1");
  if (c.delay_min_ms <= 0)
    throw ConfigError("graph.delay_min_ms: must be > 0");
  if (c.delay_max_ms < c.delay_min_ms)
    throw ConfigError("graph.delay_max_ms: must be >= graph.delay_min_ms");
  if (c.theta_lo <= 0 || c.theta_lo > c.theta_hi || c.theta_hi >= 1)
    throw ConfigError("graph.theta_lo/theta_hi: need 0 < lo <= hi < 1");
  if (c.collector_frac < 0 || c.collector_frac > 1)
    throw ConfigError("graph.collector_frac: must lie in [0,1]");
  if (c.nodes_grid.size() != c.links_grid.size())
    throw ConfigError("graph.nodes_grid/links_grid: lengths must match");

  if (c.erasure_m < 1) throw ConfigError("erasure.m: must be >= 1");
  if (c.erasure_k < 1) throw ConfigError("erasure.k: must be >= 1");
  if (c.erasure_m + c.erasure_k > 255)
    throw ConfigError("erasure.m+k: must be <= 255");
  if (c.checkpoint_interval_ms < 1)
    throw ConfigError("erasure.interval_ms: must be >= 1");
  for (int64_t m : c.m_grid)
    if (m < 1) throw ConfigError("erasure.m_grid: entries must be >= 1");
  for (int64_t k : c.k_grid)
    if (k < 1) throw ConfigError("erasure.k_grid: entries must be >= 1");
  for (double s : c.state_mb)
    if (s <= 0) throw ConfigError("erasure.state_mb: entries must be > 0");

  if (c.alpha < 0 || c.alpha > 1)
    throw ConfigError("scaling.alpha: must be in [0,1]");
  if (c.rate_per_instance <= 0) throw ConfigError("scaling.r: must be > 0");
  if (c.queue_per_instance <= 0) throw ConfigError("scaling.q: must be > 0");
  if (c.link_rate_tuples <= 0)
    throw ConfigError("scaling.link_rate_tuples: must be > 0");

  require_file("overlay.topology_file", c.topology_file);
  require_file("graph.file", c.graph_file);
  require_file("scaling.pressure_file", c.pressure_file);
}

}  // namespace ads
