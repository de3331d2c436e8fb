#pragma once
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ads/overlay.hpp"
#include "ads/sim.hpp"

namespace ads {

struct OperatorSpec {
  std::string id;
  std::string kind;  // source | inner | sink
  bool stateful = false;
  int parallelism = 1;
};

struct AppTopology {
  std::string app_id;
  std::vector<OperatorSpec> operators;
  std::vector<std::pair<std::string, std::string>> edges;
  std::map<std::string, std::string> source_bindings;  // op -> node name
  std::map<std::string, std::string> sink_bindings;

  void validate() const;                 // DAG + binding coverage
  std::vector<int> topo_order() const;   // operator indices, stable
  const OperatorSpec& op(const std::string& id) const;
};

// Global operator pressure per overlay node, shared across deployed apps so
// placement can prefer lightly loaded hosts.
struct PlacementLoad {
  std::map<u128, uint64_t> per_node;
  uint64_t max_ops_per_node = 64;
  uint64_t of(NodeId id) const {
    auto it = per_node.find(id.v);
    return it == per_node.end() ? 0 : it->second;
  }
};

struct InstancePlacement {
  std::string op;
  int replica = 0;
  NodeId node;
};

struct DataflowGraph {
  std::string app_id;
  NodeId rendezvous;  // where the join routes converge
  std::vector<std::pair<std::string, std::vector<NodeId>>> join_routes;
  std::vector<NodeId> merged_route;  // route nodes, first-seen order
  std::vector<InstancePlacement> placement;
  std::map<std::pair<std::string, std::string>, std::vector<NodeId>>
      shuffle_paths;

  NodeId node_of(const std::string& op, int replica = 0) const;
};

DataflowGraph build_dataflow(const Overlay& overlay, const AppTopology& app,
                             PlacementLoad& load);

// Recomputes one edge's shuffle path through a leaf-set alternative of the
// upstream placement, avoiding the named node. No-op when the node is not on
// the current path.
bool reroute_edge(const Overlay& overlay, DataflowGraph& graph,
                  const std::pair<std::string, std::string>& edge,
                  NodeId avoid);

// Moves instances off a failed node onto the nearest live candidate
// (candidates = the failed node's leaf set captured before the failure).
void relocate_instances(const Overlay& overlay, DataflowGraph& graph,
                        NodeId failed, const std::vector<NodeId>& candidates);

struct SchedulerAssignment {
  NodeId scheduler;
  int lookup_hops = 0;
  bool elected = false;
};

// One scheduler per 50 apps per zone; elections pick the highest-capacity
// zone node (ties to the lowest id).
class SchedulerRegistry {
 public:
  static constexpr int kAppsPerScheduler = 50;
  SchedulerAssignment find_or_elect(const Overlay& overlay, NodeId origin);
  const std::vector<std::pair<NodeId, int>>& zone_schedulers(int zone) const;
  int zones_seen() const { return int(by_zone_.size()); }

 private:
  std::map<int, std::vector<std::pair<NodeId, int>>> by_zone_;  // (id, load)
};

struct DeploymentCost {
  int messages = 0;
  int hops = 0;
  double time_ms = 0.0;  // parallel join routing, max over sources
};

DeploymentCost deployment_cost(const Overlay& overlay,
                               const DataflowGraph& graph);

// Synthetic app generator: 5..15 operators, 1-2 sources, single sink, random
// DAG wiring, bindings drawn from the live overlay nodes.
AppTopology gen_app(const Overlay& overlay, const std::string& app_id,
                    Rng& rng);

}  // namespace ads
