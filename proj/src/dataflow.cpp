#include "ads/dataflow.hpp"

#include <algorithm>
#include <set>

#include "ads/error.hpp"

namespace ads {

const OperatorSpec& AppTopology::op(const std::string& id) const {
  for (const auto& o : operators)
    if (o.id == id) return o;
  throw ConfigError("app " + app_id + ": unknown operator " + id);
}

std::vector<int> AppTopology::topo_order() const {
  std::map<std::string, int> index;
  for (size_t i = 0; i < operators.size(); i++) {
    if (!index.emplace(operators[i].id, int(i)).second)
      throw ConfigError("app " + app_id + ": duplicate operator id " +
                        operators[i].id);
  }
  std::vector<std::vector<int>> out(operators.size());
  std::vector<int> indeg(operators.size(), 0);
  for (const auto& [a, b] : edges) {
    auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end())
      throw ConfigError("app " + app_id + ": edge names unknown operator");
    out[ia->second].push_back(ib->second);
    indeg[ib->second]++;
  }
  // Kahn, smallest operator index first, so the order is stable.
  std::vector<int> ready, order;
  for (size_t i = 0; i < operators.size(); i++)
    if (indeg[i] == 0) ready.push_back(int(i));
  while (!ready.empty()) {
    std::sort(ready.begin(), ready.end(), std::greater<int>());
    int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (int w : out[v])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  if (order.size() != operators.size())
    throw ConfigError("app " + app_id + ": operator graph has a cycle");
  return order;
}

void AppTopology::validate() const {
  if (operators.empty())
    throw ConfigError("app " + app_id + ": no operators");
  std::vector<int> order = topo_order();  // also checks DAG + names
  std::set<std::string> has_in, has_out;
  for (const auto& [a, b] : edges) {
    has_out.insert(a);
    has_in.insert(b);
  }
  int sinks = 0;
  for (const auto& o : operators) {
    if (o.parallelism < 1)
      throw ConfigError("app " + app_id + ": non-positive parallelism");
    if (o.kind == "source") {
      if (has_in.count(o.id))
        throw ConfigError("app " + app_id + ": source " + o.id + " has inputs");
      if (!source_bindings.count(o.id))
        throw ConfigError("app " + app_id + ": source " + o.id + " unbound");
    } else if (o.kind == "sink") {
      sinks++;
      if (has_out.count(o.id))
        throw ConfigError("app " + app_id + ": sink " + o.id + " has outputs");
      if (!sink_bindings.count(o.id))
        throw ConfigError("app " + app_id + ": sink " + o.id + " unbound");
    } else if (o.kind != "inner") {
      throw ConfigError("app " + app_id + ": unknown kind " + o.kind);
    }
    if (operators.size() > 1 && !has_in.count(o.id) && !has_out.count(o.id))
      throw ConfigError("app " + app_id + ": operator " + o.id +
                        " is disconnected");
  }
  if (sinks != 1)
    throw ConfigError("app " + app_id + ": exactly one sink required");
  (void)order;
}

NodeId DataflowGraph::node_of(const std::string& op, int replica) const {
  for (const auto& p : placement)
    if (p.op == op && p.replica == replica) return p.node;
  throw InvariantError("dataflow " + app_id + ": unplaced operator " + op);
}

static NodeId bound_node(const Overlay& overlay, const std::string& app_id,
                         const std::string& name) {
  auto id = overlay.id_of_name(name);
  if (!id || !overlay.is_live(*id))
    throw ConfigError("app " + app_id + ": binding to unknown node " + name);
  return *id;
}

DataflowGraph build_dataflow(const Overlay& overlay, const AppTopology& app,
                             PlacementLoad& load) {
  app.validate();
  DataflowGraph g;
  g.app_id = app.app_id;

  const OperatorSpec* sink_op = nullptr;
  for (const auto& o : app.operators)
    if (o.kind == "sink") sink_op = &o;
  NodeId sink_node =
      bound_node(overlay, app.app_id, app.sink_bindings.at(sink_op->id));

  // Join messages route toward the hash of the sink's node id; they all
  // terminate on the same rendezvous node.
  NodeId key = rendezvous_key(sink_node);
  bool have_rv = false;
  for (const auto& o : app.operators) {
    if (o.kind != "source") continue;
    NodeId src = bound_node(overlay, app.app_id, app.source_bindings.at(o.id));
    RouteResult r = overlay.route(src, key);
    if (!have_rv) {
      g.rendezvous = r.path.back();
      have_rv = true;
    } else if (!(g.rendezvous == r.path.back())) {
      throw InvariantError("dataflow " + app.app_id +
                           ": join routes diverged");
    }
    g.join_routes.push_back({o.id, r.path});
  }
  if (!have_rv) throw ConfigError("app " + app.app_id + ": no source operator");

  for (const auto& [op, route] : g.join_routes)
    for (NodeId n : route)
      if (std::find(g.merged_route.begin(), g.merged_route.end(), n) ==
          g.merged_route.end())
        g.merged_route.push_back(n);

  auto place = [&](const std::string& op, int replica, NodeId node) {
    g.placement.push_back(InstancePlacement{op, replica, node});
    load.per_node[node.v]++;
  };
  for (const auto& o : app.operators) {
    if (o.kind == "source") {
      NodeId n = bound_node(overlay, app.app_id, app.source_bindings.at(o.id));
      for (int r = 0; r < o.parallelism; r++) place(o.id, r, n);
    } else if (o.kind == "sink") {
      for (int r = 0; r < o.parallelism; r++) place(o.id, r, sink_node);
    }
  }

  // Inner operators: rotate over the merged route in topological order; each
  // slot may spill to the lightest of the route node's leaf set.
  uint64_t inner_instances = 0;
  for (const auto& o : app.operators)
    if (o.kind == "inner") inner_instances += uint64_t(o.parallelism);
  std::set<u128> pool_nodes;
  for (NodeId n : g.merged_route) {
    pool_nodes.insert(n.v);
    for (NodeId m : overlay.leaf_members(n)) pool_nodes.insert(m.v);
  }
  if (inner_instances > pool_nodes.size() * load.max_ops_per_node)
    throw ConfigError("app " + app.app_id +
                      ": operators exceed route+leaf capacity");
  size_t cursor = 0;
  for (int oi : app.topo_order()) {
    const OperatorSpec& o = app.operators[oi];
    if (o.kind != "inner") continue;
    for (int r = 0; r < o.parallelism; r++) {
      NodeId anchor = g.merged_route[cursor % g.merged_route.size()];
      cursor++;
      NodeId best = anchor;
      uint64_t best_load = load.of(anchor);
      for (NodeId m : overlay.leaf_members(anchor)) {
        uint64_t l = load.of(m);
        if (l < best_load || (l == best_load && m.v < best.v)) {
          best = m;
          best_load = l;
        }
      }
      place(o.id, r, best);
    }
  }

  for (const auto& [a, b] : app.edges) {
    NodeId u = g.node_of(a), v = g.node_of(b);
    if (u == v) {
      g.shuffle_paths[{a, b}] = {u};
    } else {
      g.shuffle_paths[{a, b}] = overlay.route(u, v).path;
    }
  }
  return g;
}

static void splice_loops(std::vector<NodeId>& path) {
  for (size_t i = 0; i < path.size(); i++) {
    for (size_t j = path.size(); j > i + 1; j--) {
      if (path[j - 1] == path[i]) {
        path.erase(path.begin() + i + 1, path.begin() + j);
        break;
      }
    }
  }
}

bool reroute_edge(const Overlay& overlay, DataflowGraph& graph,
                  const std::pair<std::string, std::string>& edge,
                  NodeId avoid) {
  auto it = graph.shuffle_paths.find(edge);
  if (it == graph.shuffle_paths.end())
    throw InvariantError("reroute: unknown edge " + edge.first + "->" +
                         edge.second);
  auto& path = it->second;
  if (std::find(path.begin(), path.end(), avoid) == path.end()) return false;
  NodeId u = path.front(), v = path.back();
  if (u == avoid || v == avoid)
    throw InvariantError("reroute: cannot avoid an edge endpoint");
  for (NodeId alt : overlay.leaf_members(u)) {
    if (alt == avoid || alt == u) continue;
    std::vector<NodeId> trial{u};
    if (!(alt == v)) trial.push_back(alt);
    RouteResult r = overlay.route(trial.back(), v);
    trial.insert(trial.end(), r.path.begin() + 1, r.path.end());
    if (trial.back() == v && trial.front() == u) {
      splice_loops(trial);
      if (std::find(trial.begin(), trial.end(), avoid) == trial.end()) {
        path = trial;
        return true;
      }
    }
  }
  throw InvariantError("reroute: no leaf alternative avoids " + avoid.hex());
}

void relocate_instances(const Overlay& overlay, DataflowGraph& graph,
                        NodeId failed, const std::vector<NodeId>& candidates) {
  NodeId target;
  bool found = false;
  for (NodeId c : candidates) {
    if (overlay.is_live(c)) {
      target = c;
      found = true;
      break;
    }
  }
  for (auto& p : graph.placement) {
    if (p.node == failed) {
      if (!found)
        throw InvariantError("relocate: no live leaf member for " +
                             failed.hex());
      p.node = target;
    }
  }
}

const std::vector<std::pair<NodeId, int>>& SchedulerRegistry::zone_schedulers(
    int zone) const {
  static const std::vector<std::pair<NodeId, int>> empty;
  auto it = by_zone_.find(zone);
  return it == by_zone_.end() ? empty : it->second;
}

SchedulerAssignment SchedulerRegistry::find_or_elect(const Overlay& overlay,
                                                     NodeId origin) {
  int zone = overlay.info(origin).zone;
  auto& scheds = by_zone_[zone];
  // Log-bounded lookup: an existing scheduler in this zone counts as
  // reachable when the overlay finds it within ceil(log16 N) hops.
  int bound = overlay.hop_bound() - 2;
  int best = -1, best_hops = 0;
  for (size_t i = 0; i < scheds.size(); i++) {
    if (scheds[i].second >= kAppsPerScheduler) continue;
    if (!overlay.is_live(scheds[i].first)) continue;
    int hops = origin == scheds[i].first
                   ? 0
                   : overlay.route(origin, scheds[i].first).hops();
    if (hops > bound) continue;
    if (best < 0 || hops < best_hops ||
        (hops == best_hops && scheds[i].first.v < scheds[best].first.v)) {
      best = int(i);
      best_hops = hops;
    }
  }
  if (best >= 0) {
    scheds[best].second++;
    return SchedulerAssignment{scheds[best].first, best_hops, false};
  }
  // Elect the highest-capacity non-scheduler node in the zone.
  NodeId winner;
  int winner_cap = -1;
  bool found = false;
  for (NodeId id : overlay.live_ids()) {
    const TopoNode& info = overlay.info(id);
    if (info.zone != zone) continue;
    bool taken = false;
    for (const auto& [sid, _] : scheds)
      if (sid == id) taken = true;
    if (taken) continue;
    if (info.capacity > winner_cap ||
        (info.capacity == winner_cap && found && id.v < winner.v)) {
      winner = id;
      winner_cap = info.capacity;
      found = true;
    }
  }
  if (!found) {
    // Every zone node already runs a scheduler: reuse the least loaded.
    if (scheds.empty())
      throw InvariantError("scheduler election: empty zone");
    size_t pick = 0;
    for (size_t i = 1; i < scheds.size(); i++)
      if (scheds[i].second < scheds[pick].second ||
          (scheds[i].second == scheds[pick].second &&
           scheds[i].first.v < scheds[pick].first.v))
        pick = i;
    scheds[pick].second++;
    int hops = origin == scheds[pick].first
                   ? 0
                   : overlay.route(origin, scheds[pick].first).hops();
    return SchedulerAssignment{scheds[pick].first, hops, false};
  }
  scheds.push_back({winner, 1});
  int hops = origin == winner ? 0 : overlay.route(origin, winner).hops();
  return SchedulerAssignment{winner, hops, true};
}

DeploymentCost deployment_cost(const Overlay& overlay,
                               const DataflowGraph& graph) {
  DeploymentCost cost;
  for (const auto& [op, route] : graph.join_routes) {
    cost.messages++;
    cost.hops += int(route.size()) - 1;
    double t = 0.0;
    for (size_t i = 1; i < route.size(); i++)
      t += overlay.rtt_ms(route[i - 1], route[i]);
    cost.time_ms = std::max(cost.time_ms, t);
  }
  return cost;
}

AppTopology gen_app(const Overlay& overlay, const std::string& app_id,
                    Rng& rng) {
  std::vector<NodeId> ids = overlay.live_ids();
  if (ids.empty()) throw InvariantError("gen_app: empty overlay");
  auto pick_node = [&]() {
    return overlay.info(ids[rng.uniform_int(0, int(ids.size()) - 1)]).name;
  };
  AppTopology app;
  app.app_id = app_id;
  int total = rng.uniform_int(5, 15);
  int sources = total >= 6 ? rng.uniform_int(1, 2) : 1;
  for (int i = 0; i < total; i++) {
    OperatorSpec o;
    o.id = "op" + std::to_string(i);
    if (i < sources)
      o.kind = "source";
    else if (i == total - 1)
      o.kind = "sink";
    else
      o.kind = "inner";
    o.stateful = o.kind == "inner" && rng.bernoulli(0.5);
    app.operators.push_back(o);
  }
  // Wire every non-source op to 1-2 earlier ops, then give childless
  // non-sink ops an edge to the sink so everything drains.
  for (int i = sources; i < total; i++) {
    int fanin = rng.uniform_int(1, 2);
    std::set<int> parents;
    for (int f = 0; f < fanin; f++) parents.insert(rng.uniform_int(0, i - 1));
    for (int p : parents)
      app.edges.push_back({"op" + std::to_string(p), "op" + std::to_string(i)});
  }
  std::set<std::string> has_out;
  for (const auto& [a, b] : app.edges) has_out.insert(a);
  for (int i = 0; i < total - 1; i++) {
    std::string id = "op" + std::to_string(i);
    if (!has_out.count(id))
      app.edges.push_back({id, "op" + std::to_string(total - 1)});
  }
  for (int i = 0; i < sources; i++)
    app.source_bindings["op" + std::to_string(i)] = pick_node();
  app.sink_bindings["op" + std::to_string(total - 1)] = pick_node();
  return app;
}

}  // namespace ads
