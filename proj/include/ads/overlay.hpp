#pragma once
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ads {

using u128 = unsigned __int128;

// 128-bit ring identifier, read as 32 hex digits (4-bit digits, MSB first).
struct NodeId {
  u128 v = 0;
  static constexpr int kDigits = 32;
  int digit(int i) const { return int((v >> (124 - 4 * i)) & 0xF); }
  std::string hex() const;
  friend bool operator==(const NodeId&, const NodeId&) = default;
  friend bool operator<(const NodeId& a, const NodeId& b) { return a.v < b.v; }
};

u128 ring_distance(NodeId a, NodeId b);       // min(|a-b|, 2^128-|a-b|)
int shared_prefix_digits(NodeId a, NodeId b); // leading 4-bit digits in common
NodeId node_id_from_name(std::string_view name);
NodeId rendezvous_key(NodeId sink);           // hash of the id bytes

struct TopoNode {
  std::string name;
  int zone = 0;
  int capacity = 0;
  double x = 0.0;
  double y = 0.0;
};

// Physical substrate: node positions give pairwise RTT (1 distance unit =
// 1 ms), zones partition the deployment, capacity is an abstract host score.
struct EdgeTopology {
  std::vector<TopoNode> nodes;
  double link_rate_mbit_s = 100.0;  // uniform transfer rate between peers
  double rtt_ms(int a, int b) const;
  double bytes_per_ms() const { return link_rate_mbit_s * 125.0; }
};

struct RouteResult {
  std::vector<NodeId> path;  // starts at origin, ends at terminal node
  int hops() const { return int(path.size()) - 1; }
};

struct HopCandidate {
  NodeId id;
  double rtt_ms = 0.0;
  int capacity = 0;
};

struct RepairReport {
  uint64_t entries_repaired = 0;
  double time_ms = 0.0;
};

// Prefix-routing overlay. Per node: a 32x16 routing table (one best entry
// per cell by (rtt, capacity desc, id)), a leaf set of physically nearest
// peers, and a ring set of numerically nearest peers each way used for
// terminal hops (prefix tables alone cannot finish at the numeric argmin).
class Overlay {
 public:
  explicit Overlay(const EdgeTopology* topo, int leaf_capacity = 24,
                   int ring_half = 8);

  void join(int topo_index);
  void build_all();

  RouteResult route(NodeId from, NodeId key) const;
  std::vector<HopCandidate> next_hop_candidates(NodeId at, NodeId key) const;
  RepairReport fail_nodes(const std::vector<NodeId>& victims);

  std::vector<std::string> invariant_violations() const;
  NodeId closest_live(NodeId key) const;  // linear scan, also the test oracle
  int hop_bound() const;                  // ceil(log16 N) + 2

  size_t live_count() const { return live_count_; }
  bool is_live(NodeId id) const;
  std::vector<NodeId> live_ids() const;   // ascending
  std::vector<NodeId> leaf_members(NodeId id) const;  // by physical distance
  const TopoNode& info(NodeId id) const;
  NodeId id_of_topo(int topo_index) const;
  std::optional<NodeId> id_of_name(std::string_view name) const;
  double rtt_ms(NodeId a, NodeId b) const;
  const EdgeTopology& topo() const { return *topo_; }
  int leaf_capacity() const { return leaf_capacity_; }

 private:
  struct Cell {
    int slot = -1;  // -1 = empty
    float rtt = 0.0f;
  };
  struct NodeState {
    NodeId id;
    int topo_index = -1;
    bool live = false;
    std::array<std::array<Cell, 16>, 32> table;
    std::vector<std::pair<double, int>> leaf;  // (dist^2, slot) ascending
    std::vector<std::pair<u128, int>> succ;    // (ring delta, slot) ascending
    std::vector<std::pair<u128, int>> pred;
  };

  const EdgeTopology* topo_;
  int leaf_capacity_;
  int ring_half_;
  std::vector<NodeState> nodes_;
  std::vector<std::pair<u128, int>> index_;  // (id value, slot), sorted
  size_t live_count_ = 0;

  int slot_of(NodeId id) const;  // -1 if unknown
  int require_live_slot(NodeId id) const;
  void offer_pair(int a, int b);  // mutual table/leaf/ring candidacy
  void offer_table(NodeState& owner, int cand_slot, double rtt);
  void offer_leaf(NodeState& owner, int cand_slot, double d2);
  void offer_ring(NodeState& owner, int cand_slot);
  bool cell_better(const NodeState& owner, const Cell& incumbent, int cand_slot,
                   double cand_rtt) const;
  double dist2(int a, int b) const;
  int best_numeric(const NodeState& st, NodeId key, bool include_self) const;
  bool ring_covers(const NodeState& st, NodeId key) const;
};

}  // namespace ads
