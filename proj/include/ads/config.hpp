#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ads {

// Flat TOML subset: [section] headers, key = scalar | [scalar array],
// # comments. Strings are double-quoted; numbers split int/float by shape.
struct TomlValue {
  enum class Kind { Bool, Int, Float, String, Array };
  Kind kind = Kind::Int;
  bool b = false;
  int64_t i = 0;
  double f = 0.0;
  std::string s;
  std::vector<TomlValue> arr;

  double as_number(const std::string& where) const;
};

class TomlTable {
 public:
  static TomlTable parse(const std::string& text);

  bool has(const std::string& section, const std::string& key) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  double get_float(const std::string& section, const std::string& key,
                   double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::vector<int64_t> get_int_array(const std::string& section,
                                     const std::string& key) const;
  std::vector<double> get_float_array(const std::string& section,
                                      const std::string& key) const;
  std::vector<std::string> get_string_array(const std::string& section,
                                            const std::string& key) const;

  // Keys present in the file but never listed in `known` ("section.key").
  std::vector<std::string> unknown_keys(
      const std::vector<std::string>& known) const;

 private:
  const TomlValue* find(const std::string& section,
                        const std::string& key) const;
  std::map<std::string, std::map<std::string, TomlValue>> sections_;
};

struct ScenarioConfig {
  std::string path;  // source file, for error messages
  std::string experiment;
  std::string scenario_id;
  uint64_t seed = 1;
  int seeds = 1;
  std::string out_dir = "out";

  // overlay
  int overlay_nodes = 1000;
  int overlay_zones = 16;
  int leaf_size = 24;
  std::string topology_file;  // optional CSV; generated when empty

  // apps
  int apps = 100;
  std::vector<int64_t> app_counts;  // placement sweep; falls back to {apps}

  // bandit
  double bandit_c = 0.2;
  int packets = 1000;
  double lcb_l = 1.0;
  std::vector<int64_t> hop_limits;       // 0 = no limit
  std::vector<double> c_values;          // sweep-C grid
  std::vector<std::string> policies;     // default all four

  // graph (bandit network)
  std::string graph_file;  // optional; generated when empty
  std::string graph_kind = "grid-road";
  int graph_nodes = 25;
  int graph_links = 32;
  double delay_min_ms = 50.0;
  double delay_max_ms = 250.0;
  double theta_lo = 0.5;
  double theta_hi = 0.95;
  double collector_frac = 0.2;
  std::vector<int64_t> nodes_grid;  // paired size sweep for regret
  std::vector<int64_t> links_grid;

  // erasure
  int erasure_m = 4;
  int erasure_k = 2;
  int checkpoint_interval_ms = 1000;
  std::vector<int64_t> m_grid;
  std::vector<int64_t> k_grid;
  std::vector<double> state_mb;

  // scaling
  double alpha = 0.5;
  double rate_per_instance = 30.0;
  double queue_per_instance = 10.0;
  double link_rate_tuples = 10000.0;
  std::string pressure_file;  // optional; generated when empty
  std::vector<std::string> stateful_ops;
};

extern const std::vector<std::string> kExperimentKinds;

ScenarioConfig parse_scenario(const std::string& text,
                              const std::string& path);
ScenarioConfig load_scenario(const std::string& path);
void validate_scenario(const ScenarioConfig& cfg);

}  // namespace ads
