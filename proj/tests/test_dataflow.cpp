#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ads/dataflow.hpp"
#include "ads/error.hpp"
#include "ads/overlay.hpp"
#include "ads/sim.hpp"
#include "ads/topogen.hpp"

using namespace ads;

// source -> inner -> sink chain with every binding on `node`.
static AppTopology chain_app(const std::string& app_id,
                             const std::string& node) {
  AppTopology app;
  app.app_id = app_id;
  app.operators = {{"src", "source", false, 1},
                   {"mid", "inner", false, 1},
                   {"out", "sink", false, 1}};
  app.edges = {{"src", "mid"}, {"mid", "out"}};
  app.source_bindings["src"] = node;
  app.sink_bindings["out"] = node;
  return app;
}

static EdgeTopology zoned_topology(
    const std::vector<std::tuple<std::string, int, int>>& spec) {
  EdgeTopology t;
  for (size_t i = 0; i < spec.size(); i++) {
    const auto& [name, zone, cap] = spec[i];
    t.nodes.push_back({name, zone, cap, double(i), 0.0});
  }
  return t;
}

static bool no_repeats(const std::vector<NodeId>& path) {
  for (size_t i = 0; i < path.size(); i++)
    for (size_t j = i + 1; j < path.size(); j++)
      if (path[i] == path[j]) return false;
  return true;
}

TEST_CASE("topology validation rejects malformed apps") {
  EdgeTopology t;
  t.nodes.push_back({"n0", 0, 4, 0.0, 0.0});
  Overlay ov(&t);
  ov.build_all();
  AppTopology good = chain_app("good", "n0");
  CHECK_NOTHROW(good.validate());

  AppTopology app;
  app.app_id = "bad";
  CHECK_THROWS_AS(app.validate(), ConfigError);  // no operators

  app = chain_app("bad", "n0");
  app.operators.push_back({"src", "inner", false, 1});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // duplicate id

  app = chain_app("bad", "n0");
  app.edges.push_back({"mid", "ghost"});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // unknown edge name

  app = chain_app("bad", "n0");
  app.edges.push_back({"mid", "mid"});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // cycle

  app = chain_app("bad", "n0");
  app.operators[1].parallelism = 0;
  CHECK_THROWS_AS(app.validate(), ConfigError);  // non-positive parallelism

  app = chain_app("bad", "n0");
  app.edges.push_back({"mid", "src"});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // source has inputs

  app = chain_app("bad", "n0");
  app.source_bindings.clear();
  CHECK_THROWS_AS(app.validate(), ConfigError);  // source unbound

  app = chain_app("bad", "n0");
  app.edges.push_back({"out", "mid"});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // sink has outputs (and cycle)

  app = chain_app("bad", "n0");
  app.sink_bindings.clear();
  CHECK_THROWS_AS(app.validate(), ConfigError);  // sink unbound

  app = chain_app("bad", "n0");
  app.operators[1].kind = "mapper";
  CHECK_THROWS_AS(app.validate(), ConfigError);  // unknown kind

  app = chain_app("bad", "n0");
  app.operators.push_back({"stray", "inner", false, 1});
  CHECK_THROWS_AS(app.validate(), ConfigError);  // disconnected operator

  app = chain_app("bad", "n0");
  app.operators[2].kind = "inner";
  app.sink_bindings.clear();
  CHECK_THROWS_AS(app.validate(), ConfigError);  // zero sinks

  app = chain_app("bad", "n0");
  app.operators.push_back({"out2", "sink", false, 1});
  app.edges.push_back({"mid", "out2"});
  app.sink_bindings["out2"] = "n0";
  CHECK_THROWS_AS(app.validate(), ConfigError);  // two sinks
}

TEST_CASE("topo order is a stable topological sort") {
  AppTopology app;
  app.app_id = "diamond";
  app.operators = {{"s", "source", false, 1},
                   {"a", "inner", false, 1},
                   {"b", "inner", false, 1},
                   {"t", "sink", false, 1}};
  app.edges = {{"s", "a"}, {"s", "b"}, {"a", "t"}, {"b", "t"}};
  app.source_bindings["s"] = "n0";
  app.sink_bindings["t"] = "n0";
  std::vector<int> order = app.topo_order();
  // Kahn with smallest ready index first: s, a, b, t.
  CHECK(order == std::vector<int>{0, 1, 2, 3});
  CHECK(app.op("b").kind == "inner");
  CHECK_THROWS_AS(app.op("ghost"), ConfigError);
}

TEST_CASE("single-node app places everything locally at zero cost") {
  EdgeTopology t;
  t.nodes.push_back({"solo", 0, 4, 1.0, 2.0});
  Overlay ov(&t);
  ov.build_all();
  NodeId solo = *ov.id_of_name("solo");

  PlacementLoad load;
  DataflowGraph g = build_dataflow(ov, chain_app("app", "solo"), load);
  CHECK(g.rendezvous == solo);
  CHECK(g.merged_route == std::vector<NodeId>{solo});
  REQUIRE(g.join_routes.size() == 1);
  CHECK(g.join_routes[0].first == "src");
  CHECK(g.join_routes[0].second == std::vector<NodeId>{solo});
  REQUIRE(g.placement.size() == 3);
  for (const auto& p : g.placement) CHECK(p.node == solo);
  for (const auto& [edge, path] : g.shuffle_paths)
    CHECK(path == std::vector<NodeId>{solo});
  CHECK(load.of(solo) == 3);
  CHECK(g.node_of("mid") == solo);
  CHECK_THROWS_AS(g.node_of("ghost"), InvariantError);

  DeploymentCost cost = deployment_cost(ov, g);
  CHECK(cost.messages == 1);
  CHECK(cost.hops == 0);
  CHECK(cost.time_ms == 0.0);
}

TEST_CASE("binding to an unknown or dead node is rejected") {
  EdgeTopology t = gen_edge_topology(8, 2, 901);
  Overlay ov(&t);
  ov.build_all();
  PlacementLoad load;
  AppTopology app = chain_app("app", "nowhere");
  CHECK_THROWS_AS(build_dataflow(ov, app, load), ConfigError);

  NodeId victim = ov.id_of_topo(0);
  ov.fail_nodes({victim});
  AppTopology dead = chain_app("app", t.nodes[0].name);
  CHECK_THROWS_AS(build_dataflow(ov, dead, load), ConfigError);
}

TEST_CASE("all join routes terminate on one rendezvous node") {
  EdgeTopology t = gen_edge_topology(64, 4, 902);
  Overlay ov(&t);
  ov.build_all();

  AppTopology app;
  app.app_id = "join";
  app.operators = {{"s1", "source", false, 1},
                   {"s2", "source", false, 1},
                   {"agg", "inner", true, 2},
                   {"out", "sink", false, 1}};
  app.edges = {{"s1", "agg"}, {"s2", "agg"}, {"agg", "out"}};
  app.source_bindings["s1"] = t.nodes[3].name;
  app.source_bindings["s2"] = t.nodes[47].name;
  app.sink_bindings["out"] = t.nodes[11].name;

  PlacementLoad load;
  DataflowGraph g = build_dataflow(ov, app, load);
  REQUIRE(g.join_routes.size() == 2);
  NodeId sink_node = *ov.id_of_name(t.nodes[11].name);
  CHECK(g.rendezvous == ov.closest_live(rendezvous_key(sink_node)));
  for (const auto& [op, route] : g.join_routes) {
    CHECK(route.back() == g.rendezvous);
    CHECK(no_repeats(route));
  }
  // merged_route is the de-duplicated union of the join routes, in order.
  std::set<u128> seen;
  for (NodeId n : g.merged_route) CHECK(seen.insert(n.v).second);
  size_t union_size = 0;
  for (const auto& [op, route] : g.join_routes)
    for (NodeId n : route)
      if (seen.count(n.v)) {
        seen.erase(n.v);
        union_size++;
      }
  CHECK(union_size == g.merged_route.size());
}

TEST_CASE("placement stays on live route-or-leaf nodes under shared load") {
  EdgeTopology t = gen_edge_topology(128, 4, 903);
  Overlay ov(&t);
  ov.build_all();
  Rng rng(904);
  PlacementLoad load;
  uint64_t placed = 0;
  for (int a = 0; a < 200; a++) {
    AppTopology app = gen_app(ov, "app" + std::to_string(a), rng);
    DataflowGraph g = build_dataflow(ov, app, load);
    std::set<u128> pool;
    for (NodeId n : g.merged_route) {
      pool.insert(n.v);
      for (NodeId m : ov.leaf_members(n)) pool.insert(m.v);
    }
    for (const auto& p : g.placement) {
      CHECK(ov.is_live(p.node));
      const OperatorSpec& o = app.op(p.op);
      if (o.kind == "source")
        CHECK(p.node == *ov.id_of_name(app.source_bindings.at(p.op)));
      else if (o.kind == "sink")
        CHECK(p.node == *ov.id_of_name(app.sink_bindings.at(p.op)));
      else
        CHECK(pool.count(p.node.v) == 1);
      placed++;
    }
    for (const auto& [a2, b2] : app.edges) {
      auto it = g.shuffle_paths.find({a2, b2});
      REQUIRE(it != g.shuffle_paths.end());
      CHECK(it->second.front() == g.node_of(a2));
      CHECK(it->second.back() == g.node_of(b2));
      CHECK(no_repeats(it->second));
    }
  }
  uint64_t counted = 0;
  for (const auto& [id, n] : load.per_node) counted += n;
  CHECK(counted == placed);
}

TEST_CASE("inner instances beyond route and leaf capacity are rejected") {
  EdgeTopology t;
  t.nodes.push_back({"solo", 0, 4, 0.0, 0.0});
  Overlay ov(&t);
  ov.build_all();
  AppTopology app = chain_app("wide", "solo");
  app.operators[1].parallelism = 64;  // pool is one node x 64 slots
  PlacementLoad load;
  CHECK_NOTHROW(build_dataflow(ov, app, load));
  app.operators[1].parallelism = 65;
  PlacementLoad fresh;
  CHECK_THROWS_AS(build_dataflow(ov, app, fresh), ConfigError);
}

TEST_CASE("deployment cost mirrors the join route rtts") {
  EdgeTopology t = gen_edge_topology(64, 4, 905);
  Overlay ov(&t);
  ov.build_all();
  Rng rng(906);
  PlacementLoad load;
  for (int a = 0; a < 50; a++) {
    AppTopology app = gen_app(ov, "app" + std::to_string(a), rng);
    DataflowGraph g = build_dataflow(ov, app, load);
    DeploymentCost cost = deployment_cost(ov, g);
    int srcs = 0;
    for (const auto& o : app.operators)
      if (o.kind == "source") srcs++;
    CHECK(cost.messages == srcs);
    int hops = 0;
    double worst = 0.0;
    for (const auto& [op, route] : g.join_routes) {
      CHECK(int(route.size()) - 1 <= ov.hop_bound());
      hops += int(route.size()) - 1;
      double ms = 0.0;
      for (size_t i = 1; i < route.size(); i++)
        ms += ov.rtt_ms(route[i - 1], route[i]);
      worst = std::max(worst, ms);
    }
    CHECK(cost.hops == hops);
    CHECK(cost.time_ms == doctest::Approx(worst).epsilon(1e-12));
  }
}

TEST_CASE("rerouting an edge avoids the named node without loops") {
  EdgeTopology t = gen_edge_topology(64, 4, 907);
  Overlay ov(&t);
  ov.build_all();
  Rng rng(908);
  PlacementLoad load;
  int rerouted = 0, long_paths = 0;
  for (int a = 0; a < 40 && rerouted < 10; a++) {
    AppTopology app = gen_app(ov, "app" + std::to_string(a), rng);
    DataflowGraph g = build_dataflow(ov, app, load);
    for (const auto& [edge, path] : g.shuffle_paths) {
      if (path.size() < 3) continue;
      long_paths++;
      NodeId avoid = path[1];
      NodeId u = path.front(), v = path.back();
      DataflowGraph trial = g;
      try {
        CHECK(reroute_edge(ov, trial, edge, avoid));
      } catch (const InvariantError&) {
        continue;  // no leaf alternative dodges this node
      }
      const auto& fresh = trial.shuffle_paths.at(edge);
      CHECK(fresh.front() == u);
      CHECK(fresh.back() == v);
      CHECK(no_repeats(fresh));
      CHECK(std::find(fresh.begin(), fresh.end(), avoid) == fresh.end());
      rerouted++;
    }
  }
  CHECK(long_paths > 0);
  CHECK(rerouted >= 10);
}

TEST_CASE("reroute edge cases: absent node, endpoints, unknown edge") {
  EdgeTopology t = gen_edge_topology(32, 2, 909);
  Overlay ov(&t);
  ov.build_all();
  AppTopology app = chain_app("app", t.nodes[0].name);
  app.sink_bindings["out"] = t.nodes[19].name;
  PlacementLoad load;
  DataflowGraph g = build_dataflow(ov, app, load);

  // A node on no shuffle path: rerouting is a no-op that reports false.
  std::set<u128> on_paths;
  for (const auto& [edge, path] : g.shuffle_paths)
    for (NodeId n : path) on_paths.insert(n.v);
  NodeId outsider{};
  bool found = false;
  for (NodeId id : ov.live_ids())
    if (!on_paths.count(id.v)) {
      outsider = id;
      found = true;
      break;
    }
  REQUIRE(found);
  auto before = g.shuffle_paths;
  for (const auto& [edge, path] : before)
    CHECK_FALSE(reroute_edge(ov, g, edge, outsider));
  CHECK(g.shuffle_paths == before);

  std::pair<std::string, std::string> edge{"src", "mid"};
  NodeId u = g.shuffle_paths.at(edge).front();
  CHECK_THROWS_AS(reroute_edge(ov, g, edge, u), InvariantError);
  CHECK_THROWS_AS(reroute_edge(ov, g, {"src", "ghost"}, outsider),
                  InvariantError);
}

TEST_CASE("relocation moves every instance off the failed node") {
  EdgeTopology t = gen_edge_topology(64, 4, 910);
  Overlay ov(&t);
  ov.build_all();
  Rng rng(911);
  PlacementLoad load;
  AppTopology app = gen_app(ov, "app", rng);
  DataflowGraph g = build_dataflow(ov, app, load);

  NodeId victim = g.node_of(app.operators[0].id);
  std::vector<NodeId> candidates = ov.leaf_members(victim);
  REQUIRE(!candidates.empty());
  ov.fail_nodes({victim});
  relocate_instances(ov, g, victim, candidates);
  NodeId expect{};
  for (NodeId c : candidates)
    if (ov.is_live(c)) {
      expect = c;
      break;
    }
  bool moved = false;
  for (const auto& p : g.placement) {
    CHECK(!(p.node == victim));
    if (p.node == expect) moved = true;
  }
  CHECK(moved);

  // No live candidate: fatal only if the node actually hosts instances.
  DataflowGraph empty_case = g;
  CHECK_NOTHROW(relocate_instances(ov, empty_case, victim, {}));
  NodeId hosted = g.placement.front().node;
  CHECK_THROWS_AS(relocate_instances(ov, g, hosted, {}), InvariantError);
}

TEST_CASE("first lookup in a zone elects its highest-capacity node") {
  EdgeTopology t = zoned_topology({{"a0", 0, 3},
                                   {"a1", 0, 9},
                                   {"a2", 0, 5},
                                   {"b0", 1, 16},
                                   {"b1", 1, 2}});
  Overlay ov(&t);
  ov.build_all();
  SchedulerRegistry reg;
  NodeId origin = *ov.id_of_name("a0");
  SchedulerAssignment s = reg.find_or_elect(ov, origin);
  CHECK(s.elected);
  CHECK(s.scheduler == *ov.id_of_name("a1"));  // capacity 9 beats 3 and 5
  CHECK(s.lookup_hops <= ov.hop_bound());
  REQUIRE(reg.zone_schedulers(0).size() == 1);
  CHECK(reg.zone_schedulers(0)[0].second == 1);
  CHECK(reg.zone_schedulers(1).empty());

  // Repeat lookups reuse the scheduler instead of electing again.
  SchedulerAssignment again = reg.find_or_elect(ov, *ov.id_of_name("a2"));
  CHECK_FALSE(again.elected);
  CHECK(again.scheduler == s.scheduler);
  CHECK(reg.zone_schedulers(0)[0].second == 2);
  CHECK(reg.zones_seen() == 1);
}

TEST_CASE("capacity ties elect the lowest node id") {
  EdgeTopology t = zoned_topology(
      {{"c0", 0, 7}, {"c1", 0, 7}, {"c2", 0, 7}, {"c3", 0, 7}});
  Overlay ov(&t);
  ov.build_all();
  SchedulerRegistry reg;
  SchedulerAssignment s = reg.find_or_elect(ov, *ov.id_of_name("c2"));
  CHECK(s.elected);
  CHECK(s.scheduler == ov.live_ids().front());
}

TEST_CASE("a full scheduler triggers a second election") {
  EdgeTopology t = zoned_topology({{"z0", 0, 8},
                                   {"z1", 0, 6},
                                   {"z2", 0, 4},
                                   {"z3", 0, 2}});
  Overlay ov(&t);
  ov.build_all();
  SchedulerRegistry reg;
  NodeId origin = *ov.id_of_name("z3");
  NodeId first = reg.find_or_elect(ov, origin).scheduler;
  CHECK(first == *ov.id_of_name("z0"));
  for (int i = 1; i < SchedulerRegistry::kAppsPerScheduler; i++) {
    SchedulerAssignment s = reg.find_or_elect(ov, origin);
    CHECK(s.scheduler == first);
    CHECK_FALSE(s.elected);
  }
  SchedulerAssignment next = reg.find_or_elect(ov, origin);
  CHECK(next.elected);
  CHECK(!(next.scheduler == first));
  CHECK(next.scheduler == *ov.id_of_name("z1"));  // next capacity down
  auto scheds = reg.zone_schedulers(0);
  REQUIRE(scheds.size() == 2);
  int load_first = 0, load_next = 0;
  for (const auto& [id, n] : scheds) {
    if (id == first) load_first = n;
    if (id == next.scheduler) load_next = n;
  }
  CHECK(load_first == SchedulerRegistry::kAppsPerScheduler);
  CHECK(load_next == 1);
}

TEST_CASE("a dead scheduler is replaced on the next lookup") {
  EdgeTopology t = zoned_topology(
      {{"d0", 0, 9}, {"d1", 0, 5}, {"d2", 0, 3}, {"e0", 1, 1}});
  Overlay ov(&t);
  ov.build_all();
  SchedulerRegistry reg;
  NodeId origin = *ov.id_of_name("d2");
  NodeId first = reg.find_or_elect(ov, origin).scheduler;
  ov.fail_nodes({first});
  SchedulerAssignment s = reg.find_or_elect(ov, origin);
  CHECK(s.elected);
  CHECK(!(s.scheduler == first));
  CHECK(ov.is_live(s.scheduler));
}

TEST_CASE("a zone with no live nodes cannot elect") {
  EdgeTopology t = zoned_topology(
      {{"f0", 0, 4}, {"f1", 0, 4}, {"g0", 1, 4}, {"g1", 1, 4}});
  Overlay ov(&t);
  ov.build_all();
  NodeId doomed = *ov.id_of_name("g0");
  ov.fail_nodes({doomed, *ov.id_of_name("g1")});
  SchedulerRegistry reg;
  CHECK_THROWS_AS(reg.find_or_elect(ov, doomed), InvariantError);
}

TEST_CASE("scheduler count per zone tracks app volume") {
  EdgeTopology t = gen_edge_topology(400, 20, 912);
  Overlay ov(&t);
  ov.build_all();
  std::vector<NodeId> ids = ov.live_ids();
  SchedulerRegistry reg;
  std::map<int, int> apps_in_zone;
  double hop_sum = 0.0;
  const int kApps = 1000;
  for (int a = 0; a < kApps; a++) {
    NodeId origin = ids[size_t(a) % ids.size()];
    SchedulerAssignment s = reg.find_or_elect(ov, origin);
    CHECK(ov.is_live(s.scheduler));
    CHECK(ov.info(s.scheduler).zone == ov.info(origin).zone);
    apps_in_zone[ov.info(origin).zone]++;
    hop_sum += s.lookup_hops;
  }
  CHECK(hop_sum / kApps <= 4.0);
  CHECK(int(reg.zones_seen()) == int(apps_in_zone.size()));
  for (const auto& [zone, apps] : apps_in_zone) {
    int need = (apps + SchedulerRegistry::kAppsPerScheduler - 1) /
               SchedulerRegistry::kAppsPerScheduler;
    int have = int(reg.zone_schedulers(zone).size());
    CHECK(have >= need);
    CHECK(have <= need + 1);
    int total = 0;
    for (const auto& [id, n] : reg.zone_schedulers(zone)) total += n;
    CHECK(total == apps);
  }
}

TEST_CASE("rendezvous keys spread uniformly around the ring") {
  // 64 equal ring segments; chi-square df=63, p=0.01 critical value.
  const int kKeys = 10000, kBuckets = 64;
  std::vector<int> count(kBuckets, 0);
  for (int i = 0; i < kKeys; i++) {
    NodeId sink = node_id_from_name("sink-" + std::to_string(i));
    NodeId key = rendezvous_key(sink);
    count[int(key.v >> 122)]++;
  }
  double expect = double(kKeys) / kBuckets, chi2 = 0.0;
  for (int c : count) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 92.01002361413214);
}

TEST_CASE("generated apps are valid and within the advertised shape") {
  EdgeTopology t = gen_edge_topology(64, 4, 913);
  Overlay ov(&t);
  ov.build_all();
  Rng rng(914);
  for (int a = 0; a < 300; a++) {
    AppTopology app = gen_app(ov, "app" + std::to_string(a), rng);
    CHECK_NOTHROW(app.validate());
    CHECK(app.operators.size() >= 5);
    CHECK(app.operators.size() <= 15);
    int sources = 0, sinks = 0;
    for (const auto& o : app.operators) {
      if (o.kind == "source") sources++;
      if (o.kind == "sink") sinks++;
      CHECK(o.parallelism >= 1);
    }
    CHECK(sources >= 1);
    CHECK(sources <= 2);
    CHECK(sinks == 1);
    for (const auto& [op, name] : app.source_bindings)
      CHECK(ov.is_live(*ov.id_of_name(name)));
    for (const auto& [op, name] : app.sink_bindings)
      CHECK(ov.is_live(*ov.id_of_name(name)));
  }
}
