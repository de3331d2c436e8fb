#include "ads/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <thread>

#include "ads/banditnet.hpp"
#include "ads/dataflow.hpp"
#include "ads/error.hpp"
#include "ads/recovery.hpp"
#include "ads/topogen.hpp"

namespace ads {

namespace {

using Rows = std::vector<std::vector<std::string>>;

// Runs fn once per seed (optionally across threads) and concatenates results
// in seed order, so the emitted table never depends on scheduling.
Rows per_seed(const ScenarioConfig& cfg, int jobs,
              const std::function<Rows(uint64_t)>& fn) {
  std::vector<uint64_t> seeds;
  for (int i = 0; i < cfg.seeds; i++) seeds.push_back(cfg.seed + uint64_t(i));
  std::vector<Rows> batches(seeds.size());
  if (jobs <= 1 || seeds.size() <= 1) {
    for (size_t i = 0; i < seeds.size(); i++) batches[i] = fn(seeds[i]);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= seeds.size()) return;
        try {
          batches[i] = fn(seeds[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mu);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, int(seeds.size()));
    for (int i = 0; i < n; i++) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  Rows all;
  for (auto& b : batches)
    for (auto& r : b) all.push_back(std::move(r));
  return all;
}

std::string s_of(uint64_t v) { return std::to_string(v); }
std::string s_of(int v) { return std::to_string(v); }

EdgeTopology make_topology(const ScenarioConfig& cfg, uint64_t seed) {
  if (!cfg.topology_file.empty()) return read_edge_topology(cfg.topology_file);
  return gen_edge_topology(cfg.overlay_nodes, cfg.overlay_zones, seed);
}

NetGraph make_graph(const ScenarioConfig& cfg, int nodes, int links,
                    uint64_t seed) {
  if (!cfg.graph_file.empty()) return read_net_graph(cfg.graph_file);
  GraphGenParams p;
  p.kind = cfg.graph_kind;
  p.nodes = nodes;
  p.links = links;
  p.delay_min_ms = cfg.delay_min_ms;
  p.delay_max_ms = cfg.delay_max_ms;
  p.theta_lo = cfg.theta_lo;
  p.theta_hi = cfg.theta_hi;
  p.collector_frac = cfg.collector_frac;
  return gen_graph(p, seed);
}

BanditConfig make_bandit_cfg(const ScenarioConfig& cfg, double C,
                             int hop_limit) {
  BanditConfig b;
  b.C = C;
  b.L = cfg.lcb_l;
  b.hop_limit = hop_limit;
  return b;
}

Policy policy_of(const std::string& label) {
  if (label == "klucb") return Policy::KlUcb;
  if (label == "nexthop") return Policy::NextHop;
  if (label == "endtoend") return Policy::EndToEnd;
  if (label == "optimal") return Policy::Optimal;
  throw ConfigError("bandit.policies: unknown policy '" + label + "'");
}

std::vector<std::string> policies_of(const ScenarioConfig& cfg) {
  if (!cfg.policies.empty()) return cfg.policies;
  return {"klucb", "nexthop", "endtoend", "optimal"};
}

CsvTable experiment_placement(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed", "apps", "ops_per_node", "count"};
  std::vector<int64_t> counts =
      cfg.app_counts.empty() ? std::vector<int64_t>{cfg.apps} : cfg.app_counts;
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    EdgeTopology topo = make_topology(cfg, seed);
    Overlay overlay(&topo, cfg.leaf_size);
    overlay.build_all();
    Rows rows;
    for (int64_t count : counts) {
      Rng rng = Rng(seed).fork("placement/" + std::to_string(count));
      PlacementLoad load;
      for (int64_t a = 0; a < count; a++) {
        AppTopology app = gen_app(
            overlay, "app" + std::to_string(count) + "_" + std::to_string(a),
            rng);
        build_dataflow(overlay, app, load);
      }
      std::map<uint64_t, uint64_t> hist;  // ops hosted -> node count
      uint64_t loaded_nodes = 0;
      for (const auto& [node, ops] : load.per_node) {
        hist[ops]++;
        loaded_nodes++;
      }
      hist[0] += overlay.live_count() - loaded_nodes;
      for (const auto& [ops, nodes] : hist)
        rows.push_back({cfg.scenario_id, s_of(seed), s_of(uint64_t(count)),
                        s_of(ops), s_of(nodes)});
    }
    return rows;
  });
  return t;
}

CsvTable experiment_schedulers(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed",     "zone",
              "apps_in_zone", "schedulers", "expected",
              "mean_lookup_hops"};
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    EdgeTopology topo = make_topology(cfg, seed);
    Overlay overlay(&topo, cfg.leaf_size);
    overlay.build_all();
    std::vector<NodeId> ids = overlay.live_ids();
    Rng rng = Rng(seed).fork("schedulers");
    SchedulerRegistry registry;
    std::map<int, std::pair<uint64_t, uint64_t>> per_zone;  // apps, hops sum
    for (int a = 0; a < cfg.apps; a++) {
      NodeId origin = ids[rng.uniform_int(0, int(ids.size()) - 1)];
      SchedulerAssignment asg = registry.find_or_elect(overlay, origin);
      auto& z = per_zone[overlay.info(origin).zone];
      z.first++;
      z.second += uint64_t(asg.lookup_hops);
    }
    Rows rows;
    for (const auto& [zone, stats] : per_zone) {
      uint64_t apps = stats.first;
      uint64_t schedulers = registry.zone_schedulers(zone).size();
      uint64_t expected =
          (apps + SchedulerRegistry::kAppsPerScheduler - 1) /
          SchedulerRegistry::kAppsPerScheduler;
      rows.push_back({cfg.scenario_id, s_of(seed), s_of(zone), s_of(apps),
                      s_of(schedulers), s_of(expected),
                      fmt_g(double(stats.second) / double(apps))});
    }
    return rows;
  });
  return t;
}

CsvTable experiment_deployment(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed", "app_index", "operators",
              "messages",    "hops", "time_ms"};
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    EdgeTopology topo = make_topology(cfg, seed);
    Overlay overlay(&topo, cfg.leaf_size);
    overlay.build_all();
    Rng rng = Rng(seed).fork("deployment");
    PlacementLoad load;
    Rows rows;
    for (int a = 1; a <= cfg.apps; a++) {
      AppTopology app = gen_app(overlay, "app" + std::to_string(a), rng);
      DataflowGraph g = build_dataflow(overlay, app, load);
      DeploymentCost c = deployment_cost(overlay, g);
      rows.push_back({cfg.scenario_id, s_of(seed), s_of(a),
                      s_of(uint64_t(app.operators.size())), s_of(c.messages),
                      s_of(c.hops), fmt_g(c.time_ms)});
    }
    return rows;
  });
  return t;
}

CsvTable experiment_scaling(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed",   "time_s", "op_id",
              "instances",   "health", "action"};
  std::vector<PressureSample> schedule;
  ScalingScenarioConfig sc;
  sc.params.alpha = cfg.alpha;
  sc.params.r = cfg.rate_per_instance;
  sc.params.q = cfg.queue_per_instance;
  sc.link_rate_tuples = cfg.link_rate_tuples;
  if (cfg.pressure_file.empty()) {
    schedule = gen_pressure_schedule();
    sc.stateful_ops = {"op3"};
  } else {
    schedule = read_pressure_csv(cfg.pressure_file);
  }
  if (!cfg.stateful_ops.empty()) sc.stateful_ops = cfg.stateful_ops;
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    // The replay itself is deterministic; the seed column keys re-runs.
    std::vector<ScaleTraceRow> trace = run_scaling_scenario(schedule, sc);
    Rows rows;
    for (const auto& r : trace)
      rows.push_back({cfg.scenario_id, s_of(seed), fmt_g(r.time_s), r.op_id,
                      s_of(r.instances), fmt_g(r.health), r.action});
    return rows;
  });
  return t;
}

CsvTable experiment_recovery(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed", "state_mb", "m",
              "k",           "model_time", "sim_time_ms"};
  std::vector<double> states =
      cfg.state_mb.empty() ? std::vector<double>{16.0} : cfg.state_mb;
  std::vector<int64_t> ms =
      cfg.m_grid.empty() ? std::vector<int64_t>{cfg.erasure_m} : cfg.m_grid;
  std::vector<int64_t> ks =
      cfg.k_grid.empty() ? std::vector<int64_t>{cfg.erasure_k} : cfg.k_grid;
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    EdgeTopology topo = make_topology(cfg, seed);
    Overlay overlay(&topo, cfg.leaf_size);
    overlay.build_all();
    NodeId owner = overlay.id_of_topo(0);
    Rows rows;
    for (double mb : states)
      for (int64_t m : ms)
        for (int64_t k : ks) {
          ErasureConfig ec{int(m), int(k)};
          uint64_t bytes = uint64_t(mb * 1048576.0);
          CheckpointPlan plan = make_checkpoint_plan(
              overlay, owner, bytes, ec, uint64_t(cfg.checkpoint_interval_ms));
          RecoveryReport rep = recover(overlay, plan);
          if (!rep.success)
            throw InvariantError("recovery experiment: unrecoverable plan");
          rows.push_back({cfg.scenario_id, s_of(seed), fmt_g(mb),
                          s_of(uint64_t(m)), s_of(uint64_t(k)),
                          fmt_g(rep.model_time_ms), fmt_g(rep.sim_time_ms)});
        }
    return rows;
  });
  return t;
}

CsvTable experiment_regret(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id",     "seed",     "policy",
              "packet_k",        "expected_regret", "realized_delay_ms"};
  std::vector<std::pair<int, int>> sizes;
  if (cfg.nodes_grid.empty()) {
    sizes.emplace_back(cfg.graph_nodes, cfg.graph_links);
  } else {
    for (size_t i = 0; i < cfg.nodes_grid.size(); i++)
      sizes.emplace_back(int(cfg.nodes_grid[i]), int(cfg.links_grid[i]));
  }
  std::vector<std::string> policies = policies_of(cfg);
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    Rows rows;
    for (auto [nodes, links] : sizes) {
      std::string variant = cfg.scenario_id;
      if (sizes.size() > 1)
        variant += "/n" + std::to_string(nodes) + "_l" + std::to_string(links);
      NetGraph g = make_graph(cfg, nodes, links, seed);
      for (const auto& label : policies) {
        RegretSeries series = run_regret(g, policy_of(label), cfg.packets,
                                         seed, make_bandit_cfg(cfg, cfg.bandit_c, 0));
        for (int k = 1; k <= cfg.packets; k++)
          rows.push_back({variant, s_of(seed), label, s_of(k),
                          fmt_g(series.expected_regret[k - 1]),
                          fmt_g(series.realized_ms[k - 1])});
      }
    }
    return rows;
  });
  return t;
}

CsvTable experiment_convergence(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id",        "seed",
              "policy",             "first_optimal_trial",
              "final_expected_regret", "modal_expected_ms",
              "optimal_expected_ms"};
  std::vector<std::string> policies = policies_of(cfg);
  // Hop-limit variants widen the klucb label so the schema stays fixed.
  std::vector<std::pair<std::string, int>> variants;
  for (const auto& label : policies) {
    if (label == "klucb" && !cfg.hop_limits.empty()) {
      for (int64_t h : cfg.hop_limits)
        variants.emplace_back(
            h == 0 ? label : label + "_hop" + std::to_string(h), int(h));
    } else {
      variants.emplace_back(label, 0);
    }
  }
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    NetGraph g = make_graph(cfg, cfg.graph_nodes, cfg.graph_links, seed);
    Rows rows;
    for (const auto& [label, hop] : variants) {
      Policy p = policy_of(label.substr(0, label.find("_hop")));
      RegretSeries series = run_regret(g, p, cfg.packets, seed,
                                       make_bandit_cfg(cfg, cfg.bandit_c, hop));
      rows.push_back({cfg.scenario_id, s_of(seed), label,
                      s_of(series.first_optimal_trial),
                      fmt_g(series.final_expected_regret),
                      fmt_g(series.modal_path_expected_ms),
                      fmt_g(series.optimal_expected_ms)});
    }
    return rows;
  });
  return t;
}

CsvTable experiment_sweep_c(const ScenarioConfig& cfg, int jobs) {
  CsvTable t;
  t.header = {"scenario_id", "seed",
              "policy",      "c",
              "final_expected_regret", "first_optimal_trial"};
  std::vector<double> cs = cfg.c_values.empty()
                               ? std::vector<double>{0.1, 0.2, 0.4, 0.8}
                               : cfg.c_values;
  t.rows = per_seed(cfg, jobs, [&](uint64_t seed) {
    NetGraph g = make_graph(cfg, cfg.graph_nodes, cfg.graph_links, seed);
    Rows rows;
    for (double c : cs) {
      RegretSeries series = run_regret(g, Policy::KlUcb, cfg.packets, seed,
                                       make_bandit_cfg(cfg, c, 0));
      rows.push_back({cfg.scenario_id, s_of(seed), "klucb", fmt_g(c),
                      fmt_g(series.final_expected_regret),
                      s_of(series.first_optimal_trial)});
    }
    return rows;
  });
  return t;
}

}  // namespace

std::vector<PressureSample> gen_pressure_schedule() {
  std::vector<PressureSample> out;
  for (int t = 0; t <= 120; t += 5) {
    // op1: staged compute ramp, target instance count 10/20/30.
    double stage = t < 30 ? 1.0 : t < 60 ? 2.0 : 3.0;
    out.push_back({double(t), "op1", 300.0 * stage, 100.0 * stage});
    // op2: bandwidth spike at t=60s on an otherwise light operator.
    double spike2 = (t >= 60 && t < 90) ? 9500.0 : 400.0;
    out.push_back({double(t), "op2", spike2, 120.0});
    // op3: stateful operator saturating its link at t=90s.
    double spike3 = t >= 90 ? 9500.0 : 500.0;
    out.push_back({double(t), "op3", spike3, 150.0});
  }
  return out;
}

ExperimentResult run_experiment(const ScenarioConfig& cfg, int jobs) {
  ExperimentResult res;
  res.csv_name = cfg.experiment + ".csv";
  if (cfg.experiment == "placement") {
    res.table = experiment_placement(cfg, jobs);
  } else if (cfg.experiment == "schedulers") {
    res.table = experiment_schedulers(cfg, jobs);
  } else if (cfg.experiment == "deployment") {
    res.table = experiment_deployment(cfg, jobs);
  } else if (cfg.experiment == "scaling") {
    res.table = experiment_scaling(cfg, jobs);
  } else if (cfg.experiment == "recovery") {
    res.table = experiment_recovery(cfg, jobs);
  } else if (cfg.experiment == "regret") {
    res.table = experiment_regret(cfg, jobs);
  } else if (cfg.experiment == "convergence") {
    res.table = experiment_convergence(cfg, jobs);
  } else if (cfg.experiment == "sweep-C") {
    res.table = experiment_sweep_c(cfg, jobs);
  } else {
    throw ConfigError("scenario.experiment: unknown kind '" + cfg.experiment +
                      "'");
  }
  res.summary = nlohmann::ordered_json();
  res.summary["experiment"] = cfg.experiment;
  res.summary["scenario_id"] = cfg.scenario_id;
  res.summary["seed"] = cfg.seed;
  res.summary["seeds"] = cfg.seeds;
  nlohmann::ordered_json agg = summarize_table(res.table);
  res.summary["rows"] = agg["rows"];
  res.summary["columns"] = agg["columns"];
  return res;
}

std::pair<std::string, std::string> write_experiment(
    const ExperimentResult& res, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::string csv_path = out_dir + "/" + res.csv_name;
  std::string summary_path = out_dir + "/summary.json";
  write_text_file(csv_path, res.table.render());
  write_text_file(summary_path, res.summary.dump(2) + "\n");
  return {csv_path, summary_path};
}

}  // namespace ads
