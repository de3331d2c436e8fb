#include "ads/overlay.hpp"

#include <algorithm>
#include <cmath>

#include "ads/error.hpp"
#include "ads/hash.hpp"

namespace ads {

std::string NodeId::hex() const {
  static const char* k = "0123456789abcdef";
  std::string s(32, '0');
  for (int i = 0; i < 32; i++) s[i] = k[digit(i)];
  return s;
}

u128 ring_distance(NodeId a, NodeId b) {
  u128 d = a.v - b.v;
  u128 nd = ~d + 1;
  return d < nd ? d : nd;
}

int shared_prefix_digits(NodeId a, NodeId b) {
  u128 x = a.v ^ b.v;
  if (x == 0) return 32;
  uint64_t hi = uint64_t(x >> 64);
  int clz = hi ? __builtin_clzll(hi) : 64 + __builtin_clzll(uint64_t(x));
  return clz / 4;
}

static NodeId id_from_digest(Digest128 d) {
  return NodeId{(u128(d.hi) << 64) | d.lo};
}

NodeId node_id_from_name(std::string_view name) {
  return id_from_digest(murmur3_128(name));
}

NodeId rendezvous_key(NodeId sink) {
  uint8_t bytes[16];
  for (int i = 0; i < 16; i++) bytes[i] = uint8_t((sink.v >> (8 * i)) & 0xFF);
  return id_from_digest(murmur3_128(bytes, 16));
}

double EdgeTopology::rtt_ms(int a, int b) const {
  double dx = nodes[a].x - nodes[b].x;
  double dy = nodes[a].y - nodes[b].y;
  return std::sqrt(dx * dx + dy * dy);
}

Overlay::Overlay(const EdgeTopology* topo, int leaf_capacity, int ring_half)
    : topo_(topo), leaf_capacity_(leaf_capacity), ring_half_(ring_half) {
  if (leaf_capacity_ < 1 || ring_half_ < 1)
    throw ConfigError("overlay: leaf capacity and ring half must be positive");
  nodes_.reserve(topo->nodes.size());
  index_.reserve(topo->nodes.size());
}

int Overlay::slot_of(NodeId id) const {
  auto it = std::lower_bound(index_.begin(), index_.end(),
                             std::make_pair(id.v, -1));
  if (it == index_.end() || it->first != id.v) return -1;
  return it->second;
}

int Overlay::require_live_slot(NodeId id) const {
  int s = slot_of(id);
  if (s < 0 || !nodes_[s].live)
    throw InvariantError("overlay: unknown or dead node " + id.hex());
  return s;
}

double Overlay::dist2(int a, int b) const {
  const TopoNode& na = topo_->nodes[nodes_[a].topo_index];
  const TopoNode& nb = topo_->nodes[nodes_[b].topo_index];
  double dx = na.x - nb.x, dy = na.y - nb.y;
  return dx * dx + dy * dy;
}

bool Overlay::cell_better(const NodeState&, const Cell& incumbent,
                          int cand_slot, double cand_rtt) const {
  if (incumbent.slot < 0) return true;
  if (cand_rtt != incumbent.rtt) return cand_rtt < incumbent.rtt;
  int cap_c = topo_->nodes[nodes_[cand_slot].topo_index].capacity;
  int cap_i = topo_->nodes[nodes_[incumbent.slot].topo_index].capacity;
  if (cap_c != cap_i) return cap_c > cap_i;
  return nodes_[cand_slot].id.v < nodes_[incumbent.slot].id.v;
}

void Overlay::offer_table(NodeState& owner, int cand_slot, double rtt) {
  int sp = shared_prefix_digits(owner.id, nodes_[cand_slot].id);
  if (sp >= 32) return;
  int col = nodes_[cand_slot].id.digit(sp);
  Cell& cell = owner.table[sp][col];
  if (cell.slot == cand_slot) return;
  if (cell_better(owner, cell, cand_slot, rtt))
    cell = Cell{cand_slot, float(rtt)};
}

void Overlay::offer_leaf(NodeState& owner, int cand_slot, double d2) {
  auto key = std::make_pair(d2, nodes_[cand_slot].id.v);
  auto less = [this](const std::pair<double, int>& e, decltype(key) k) {
    if (e.first != k.first) return e.first < k.first;
    return nodes_[e.second].id.v < k.second;
  };
  if (int(owner.leaf.size()) >= leaf_capacity_) {
    auto& back = owner.leaf.back();
    if (!(key.first < back.first ||
          (key.first == back.first && key.second < nodes_[back.second].id.v)))
      return;
  }
  auto it = std::lower_bound(owner.leaf.begin(), owner.leaf.end(), key, less);
  if (it != owner.leaf.end() && it->second == cand_slot) return;
  owner.leaf.insert(it, {d2, cand_slot});
  if (int(owner.leaf.size()) > leaf_capacity_) owner.leaf.pop_back();
}

void Overlay::offer_ring(NodeState& owner, int cand_slot) {
  u128 fwd = nodes_[cand_slot].id.v - owner.id.v;
  u128 bwd = owner.id.v - nodes_[cand_slot].id.v;
  auto put = [&](std::vector<std::pair<u128, int>>& list, u128 delta) {
    if (int(list.size()) >= ring_half_ && delta >= list.back().first) return;
    auto it = std::lower_bound(
        list.begin(), list.end(), delta,
        [](const std::pair<u128, int>& e, u128 d) { return e.first < d; });
    if (it != list.end() && it->first == delta) return;
    list.insert(it, {delta, cand_slot});
    if (int(list.size()) > ring_half_) list.pop_back();
  };
  put(owner.succ, fwd);
  put(owner.pred, bwd);
}

void Overlay::offer_pair(int a, int b) {
  double d2 = dist2(a, b);
  double rtt = std::sqrt(d2);
  offer_table(nodes_[a], b, rtt);
  offer_table(nodes_[b], a, rtt);
  offer_leaf(nodes_[a], b, d2);
  offer_leaf(nodes_[b], a, d2);
  offer_ring(nodes_[a], b);
  offer_ring(nodes_[b], a);
}

void Overlay::join(int topo_index) {
  NodeId id = node_id_from_name(topo_->nodes[topo_index].name);
  if (slot_of(id) >= 0)
    throw InvariantError("overlay: duplicate node id for " +
                         topo_->nodes[topo_index].name);
  int slot = int(nodes_.size());
  nodes_.push_back(NodeState{});
  NodeState& st = nodes_.back();
  st.id = id;
  st.topo_index = topo_index;
  st.live = true;
  auto it = std::lower_bound(index_.begin(), index_.end(),
                             std::make_pair(id.v, -1));
  index_.insert(it, {id.v, slot});
  live_count_++;
  for (int other = 0; other < slot; other++)
    if (nodes_[other].live) offer_pair(slot, other);
}

void Overlay::build_all() {
  for (size_t i = 0; i < topo_->nodes.size(); i++) join(int(i));
}

bool Overlay::ring_covers(const NodeState& st, NodeId key) const {
  if (int(st.succ.size()) < ring_half_ || int(st.pred.size()) < ring_half_)
    return true;  // ring sets span every live peer
  u128 fwd = key.v - st.id.v;
  u128 bwd = st.id.v - key.v;
  return fwd <= st.succ.back().first || bwd <= st.pred.back().first;
}

int Overlay::best_numeric(const NodeState& st, NodeId key,
                          bool include_self) const {
  int best = -1;
  u128 best_d = 0;
  u128 best_id = 0;
  auto consider = [&](int slot) {
    const NodeState& n = nodes_[slot];
    if (!n.live) return;
    u128 d = ring_distance(n.id, key);
    if (best < 0 || d < best_d || (d == best_d && n.id.v < best_id)) {
      best = slot;
      best_d = d;
      best_id = n.id.v;
    }
  };
  if (include_self) consider(int(&st - nodes_.data()));
  for (const auto& e : st.succ) consider(e.second);
  for (const auto& e : st.pred) consider(e.second);
  return best;
}

RouteResult Overlay::route(NodeId from, NodeId key) const {
  int cur = require_live_slot(from);
  RouteResult out;
  out.path.push_back(from);
  std::vector<int> visited{cur};
  auto hop = [&](int next) {
    for (int v : visited)
      if (v == next) throw InvariantError("overlay: routing loop at " +
                                          nodes_[next].id.hex());
    visited.push_back(next);
    out.path.push_back(nodes_[next].id);
    cur = next;
  };
  for (int iter = 0; iter < 64; iter++) {
    const NodeState& st = nodes_[cur];
    if (st.id == key) return out;
    // Endgame: once the key falls inside the known ring window the numeric
    // argmin over it is the global argmin.
    if (ring_covers(st, key)) {
      int t = best_numeric(st, key, true);
      if (t == cur) return out;
      hop(t);
      continue;
    }
    int L = shared_prefix_digits(st.id, key);
    const Cell& cell = st.table[L][key.digit(L)];
    if (cell.slot >= 0 && nodes_[cell.slot].live &&
        std::find(visited.begin(), visited.end(), cell.slot) == visited.end()) {
      hop(cell.slot);
      continue;
    }
    // Stalled: jump to the numerically closest known peer that improves.
    u128 here = ring_distance(st.id, key);
    int best = -1;
    u128 best_d = here;
    u128 best_id = 0;
    auto consider = [&](int slot) {
      if (slot < 0 || !nodes_[slot].live) return;
      if (std::find(visited.begin(), visited.end(), slot) != visited.end())
        return;
      u128 d = ring_distance(nodes_[slot].id, key);
      if (d < best_d || (d == best_d && best >= 0 && nodes_[slot].id.v < best_id)) {
        best = slot;
        best_d = d;
        best_id = nodes_[slot].id.v;
      }
    };
    for (const auto& row : st.table)
      for (const auto& c : row) consider(c.slot);
    for (const auto& e : st.leaf) consider(e.second);
    for (const auto& e : st.succ) consider(e.second);
    for (const auto& e : st.pred) consider(e.second);
    if (best >= 0) {
      hop(best);
      continue;
    }
    int t = best_numeric(st, key, true);
    if (t == cur) return out;
    throw InvariantError("overlay: routing stalled at " + st.id.hex());
  }
  throw InvariantError("overlay: routing exceeded hop cap");
}

std::vector<HopCandidate> Overlay::next_hop_candidates(NodeId at,
                                                       NodeId key) const {
  int cur = require_live_slot(at);
  const NodeState& st = nodes_[cur];
  int L = shared_prefix_digits(st.id, key);
  if (L >= 32) return {};
  std::vector<int> slots;
  auto add = [&](int slot) {
    if (slot < 0 || !nodes_[slot].live) return;
    if (shared_prefix_digits(nodes_[slot].id, key) <= L) return;
    if (std::find(slots.begin(), slots.end(), slot) == slots.end())
      slots.push_back(slot);
  };
  add(st.table[L][key.digit(L)].slot);
  for (const auto& e : st.leaf) add(e.second);
  for (const auto& e : st.succ) add(e.second);
  for (const auto& e : st.pred) add(e.second);
  std::vector<HopCandidate> out;
  for (int slot : slots) {
    const NodeState& n = nodes_[slot];
    out.push_back(HopCandidate{n.id, topo_->rtt_ms(st.topo_index, n.topo_index),
                               topo_->nodes[n.topo_index].capacity});
  }
  std::sort(out.begin(), out.end(), [](const HopCandidate& a, const HopCandidate& b) {
    if (a.rtt_ms != b.rtt_ms) return a.rtt_ms < b.rtt_ms;
    if (a.capacity != b.capacity) return a.capacity > b.capacity;
    return a.id.v < b.id.v;
  });
  return out;
}

RepairReport Overlay::fail_nodes(const std::vector<NodeId>& victims) {
  if (victims.empty()) return {};
  for (NodeId id : victims) {
    int s = require_live_slot(id);
    nodes_[s].live = false;
    live_count_--;
  }
  if (live_count_ == 0)
    throw InvariantError("overlay: all nodes failed");

  RepairReport report;
  std::vector<uint64_t> repaired(nodes_.size(), 0);
  auto alive = [&](int slot) { return slot >= 0 && nodes_[slot].live; };

  // Scrub every survivor's state of dead references.
  for (auto& st : nodes_) {
    if (!st.live) continue;
    for (auto& row : st.table)
      for (auto& c : row)
        if (c.slot >= 0 && !alive(c.slot)) c = Cell{};
    auto drop = [&](auto& list) {
      list.erase(std::remove_if(list.begin(), list.end(),
                                [&](const auto& e) { return !alive(e.second); }),
                 list.end());
    };
    drop(st.leaf);
    drop(st.succ);
    drop(st.pred);
  }

  // Peer-wise refill: pull knowledge from surviving leaf/ring members for a
  // few rounds. Ring sets become exact again because each survivor's nearest
  // live successor is reachable through successor chains.
  auto peers_of = [&](const NodeState& st) {
    std::vector<int> peers;
    auto addp = [&](int slot) {
      if (alive(slot) &&
          std::find(peers.begin(), peers.end(), slot) == peers.end())
        peers.push_back(slot);
    };
    for (const auto& e : st.succ) addp(e.second);
    for (const auto& e : st.pred) addp(e.second);
    for (const auto& e : st.leaf) addp(e.second);
    return peers;
  };
  for (int round = 0; round < 4; round++) {
    for (auto& st : nodes_) {
      if (!st.live) continue;
      int self = int(&st - nodes_.data());
      size_t before = st.succ.size() + st.pred.size() + st.leaf.size();
      for (int peer : peers_of(st)) {
        const NodeState& p = nodes_[peer];
        auto feed = [&](const auto& list) {
          for (const auto& e : list) {
            if (!alive(e.second) || e.second == self) continue;
            offer_ring(st, e.second);
            offer_leaf(st, e.second, dist2(self, e.second));
          }
        };
        feed(p.succ);
        feed(p.pred);
        feed(p.leaf);
      }
      size_t after = st.succ.size() + st.pred.size() + st.leaf.size();
      if (after > before) repaired[self] += after - before;
    }
  }

  // Routing-table refill from one-hop knowledge.
  for (auto& st : nodes_) {
    if (!st.live) continue;
    int self = int(&st - nodes_.data());
    auto offer = [&](int slot) {
      if (!alive(slot) || slot == self) return;
      int sp = shared_prefix_digits(st.id, nodes_[slot].id);
      if (sp >= 32) return;
      Cell& cell = st.table[sp][nodes_[slot].id.digit(sp)];
      bool was_empty = cell.slot < 0;
      double rtt = topo_->rtt_ms(st.topo_index, nodes_[slot].topo_index);
      if (cell_better(st, cell, slot, rtt)) {
        cell = Cell{slot, float(rtt)};
        if (was_empty) repaired[self]++;
      }
    };
    for (int peer : peers_of(st)) {
      const NodeState& p = nodes_[peer];
      offer(peer);
      for (const auto& row : p.table)
        for (const auto& c : row) offer(c.slot);
      for (const auto& e : p.leaf) offer(e.second);
      for (const auto& e : p.succ) offer(e.second);
      for (const auto& e : p.pred) offer(e.second);
    }
  }

  // Survivors repair in parallel; fetches run in batches of 8 entries over
  // the mean leaf RTT, so wall time stays nearly flat in the victim count.
  double worst = 0.0;
  for (const auto& st : nodes_) {
    if (!st.live) continue;
    int self = int(&st - nodes_.data());
    report.entries_repaired += repaired[self];
    if (repaired[self] == 0) continue;
    double rtt_sum = 0.0;
    int cnt = 0;
    for (const auto& e : st.leaf) {
      rtt_sum += topo_->rtt_ms(st.topo_index, nodes_[e.second].topo_index);
      cnt++;
    }
    double mean_rtt = cnt ? rtt_sum / cnt : 1.0;
    double batches = std::ceil(double(repaired[self]) / 8.0);
    worst = std::max(worst, (1.0 + batches) * mean_rtt);
  }
  report.time_ms = worst;
  return report;
}

std::vector<std::string> Overlay::invariant_violations() const {
  std::vector<std::string> bad;
  auto complain = [&](const std::string& s) {
    if (bad.size() < 20) bad.push_back(s);
  };
  std::vector<std::pair<u128, int>> ring;  // live ids ascending
  for (size_t s = 0; s < nodes_.size(); s++)
    if (nodes_[s].live) ring.push_back({nodes_[s].id.v, int(s)});
  std::sort(ring.begin(), ring.end());
  size_t n = ring.size();

  for (const auto& st : nodes_) {
    if (!st.live) continue;
    std::string who = st.id.hex().substr(0, 8);
    for (int row = 0; row < 32; row++) {
      for (int col = 0; col < 16; col++) {
        const Cell& c = st.table[row][col];
        if (c.slot < 0) continue;
        const NodeState& e = nodes_[c.slot];
        if (!e.live) complain(who + ": table entry references dead node");
        if (shared_prefix_digits(st.id, e.id) != row)
          complain(who + ": table entry prefix mismatch");
        if (e.id.digit(row) != col)
          complain(who + ": table entry in wrong column");
        if (col == st.id.digit(row))
          complain(who + ": entry in owner's own digit column");
      }
    }
    size_t want_leaf = std::min<size_t>(leaf_capacity_, n - 1);
    if (st.leaf.size() != want_leaf)
      complain(who + ": leaf set size " + std::to_string(st.leaf.size()) +
               " want " + std::to_string(want_leaf));
    for (size_t i = 0; i < st.leaf.size(); i++) {
      if (!nodes_[st.leaf[i].second].live)
        complain(who + ": leaf member dead");
      if (i > 0 && st.leaf[i].first < st.leaf[i - 1].first)
        complain(who + ": leaf set not sorted");
    }
    // Ring sets must match the true nearest live ids each way.
    size_t want_ring = std::min<size_t>(ring_half_, n - 1);
    if (st.succ.size() != want_ring || st.pred.size() != want_ring) {
      complain(who + ": ring set size");
    } else if (n > 1) {
      auto it = std::lower_bound(ring.begin(), ring.end(),
                                 std::make_pair(st.id.v, 0));
      size_t pos = size_t(it - ring.begin());
      for (size_t i = 0; i < want_ring; i++) {
        int expect_succ = ring[(pos + 1 + i) % n].second;
        int expect_pred = ring[(pos + n - 1 - i) % n].second;
        if (st.succ[i].second != expect_succ)
          complain(who + ": succ[" + std::to_string(i) + "] wrong");
        if (st.pred[i].second != expect_pred)
          complain(who + ": pred[" + std::to_string(i) + "] wrong");
      }
    }
  }
  return bad;
}

NodeId Overlay::closest_live(NodeId key) const {
  int best = -1;
  u128 best_d = 0;
  for (size_t s = 0; s < nodes_.size(); s++) {
    if (!nodes_[s].live) continue;
    u128 d = ring_distance(nodes_[s].id, key);
    if (best < 0 || d < best_d ||
        (d == best_d && nodes_[s].id.v < nodes_[best].id.v)) {
      best = int(s);
      best_d = d;
    }
  }
  if (best < 0) throw InvariantError("overlay: no live nodes");
  return nodes_[best].id;
}

int Overlay::hop_bound() const {
  size_t p = 1;
  int k = 0;
  while (p < live_count_) {
    p *= 16;
    k++;
  }
  return k + 2;
}

bool Overlay::is_live(NodeId id) const {
  int s = slot_of(id);
  return s >= 0 && nodes_[s].live;
}

std::vector<NodeId> Overlay::live_ids() const {
  std::vector<NodeId> out;
  out.reserve(live_count_);
  for (const auto& e : index_)
    if (nodes_[e.second].live) out.push_back(NodeId{e.first});
  return out;
}

std::vector<NodeId> Overlay::leaf_members(NodeId id) const {
  const NodeState& st = nodes_[require_live_slot(id)];
  std::vector<NodeId> out;
  out.reserve(st.leaf.size());
  for (const auto& e : st.leaf) out.push_back(nodes_[e.second].id);
  return out;
}

const TopoNode& Overlay::info(NodeId id) const {
  int s = slot_of(id);
  if (s < 0) throw InvariantError("overlay: unknown node " + id.hex());
  return topo_->nodes[nodes_[s].topo_index];
}

NodeId Overlay::id_of_topo(int topo_index) const {
  return node_id_from_name(topo_->nodes[topo_index].name);
}

std::optional<NodeId> Overlay::id_of_name(std::string_view name) const {
  NodeId id = node_id_from_name(name);
  return slot_of(id) >= 0 ? std::optional<NodeId>(id) : std::nullopt;
}

double Overlay::rtt_ms(NodeId a, NodeId b) const {
  int sa = slot_of(a), sb = slot_of(b);
  if (sa < 0 || sb < 0) throw InvariantError("overlay: rtt of unknown node");
  return topo_->rtt_ms(nodes_[sa].topo_index, nodes_[sb].topo_index);
}

}  // namespace ads
