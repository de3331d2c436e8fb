#include "ads/topogen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "ads/error.hpp"

namespace ads {

namespace {

void assign_link_params(NetGraph& g, const GraphGenParams& p, Rng& rng,
                        const std::vector<char>& fast_mask) {
  double span = p.delay_max_ms - p.delay_min_ms;
  for (size_t i = 0; i < g.links.size(); i++) {
    auto& l = g.links[i];
    double expected;
    if (fast_mask.empty()) {
      expected = rng.uniform_real(p.delay_min_ms, p.delay_max_ms);
    } else if (fast_mask[i]) {
      // Arterial road: the fast end of the delay range.
      expected =
          rng.uniform_real(p.delay_min_ms, p.delay_min_ms + 0.2 * span);
    } else if (rng.next_double() < p.collector_frac) {
      // Collector road: a fast entry that still feeds the slow mesh.
      expected = rng.uniform_real(p.delay_min_ms + 0.1 * span,
                                  p.delay_min_ms + 0.45 * span);
    } else {
      // Side street: congested, the slow end of the range.
      expected =
          rng.uniform_real(p.delay_min_ms + 0.5 * span, p.delay_max_ms);
    }
    l.theta = rng.uniform_real(p.theta_lo, p.theta_hi);
    l.base_delay_ms = expected * l.theta;  // so base/theta lands in range
  }
}

// Keeps only links that lie on some source->sink path.
std::vector<char> useful_links(int n, int source, int sink,
                               const std::vector<std::pair<int, int>>& links) {
  std::vector<std::vector<int>> out(n), in(n);
  for (size_t i = 0; i < links.size(); i++) {
    out[links[i].first].push_back(int(i));
    in[links[i].second].push_back(int(i));
  }
  auto bfs = [&](int start, const std::vector<std::vector<int>>& adj,
                 bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<int> q{start};
    seen[start] = 1;
    while (!q.empty()) {
      int v = q.back();
      q.pop_back();
      for (int li : adj[v]) {
        int w = forward ? links[li].second : links[li].first;
        if (!seen[w]) {
          seen[w] = 1;
          q.push_back(w);
        }
      }
    }
    return seen;
  };
  std::vector<char> from_s = bfs(source, out, true);
  std::vector<char> to_d = bfs(sink, in, false);
  std::vector<char> ok(links.size(), 0);
  for (size_t i = 0; i < links.size(); i++)
    ok[i] = from_s[links[i].first] && to_d[links[i].second];
  return ok;
}

NetGraph gen_grid_road(const GraphGenParams& p, Rng& rng,
                       std::vector<char>* fast_out) {
  int g = int(std::lround(std::sqrt(double(p.nodes))));
  if (g * g != p.nodes)
    throw ConfigError("gen-topology: grid-road needs a square node count");
  auto id = [&](int r, int c) { return r * g + c; };
  std::vector<std::pair<int, int>> cands;
  for (int r = 0; r < g; r++)
    for (int c = 0; c < g; c++) {
      if (c + 1 < g) cands.push_back({id(r, c), id(r, c + 1)});
      if (r + 1 < g) cands.push_back({id(r, c), id(r + 1, c)});
      if (r + 1 < g && c + 1 < g) cands.push_back({id(r, c), id(r + 1, c + 1)});
    }
  if (p.links > int(cands.size()))
    throw ConfigError("gen-topology: more links than the road mesh offers");
  int source = 0, sink = p.nodes - 1;
  std::map<std::pair<int, int>, int> cand_idx;
  for (size_t i = 0; i < cands.size(); i++) cand_idx[cands[i]] = int(i);

  // Every map gets one arterial route: a staircase of fast roads from the
  // source corner to the sink corner. The rest of the mesh is side streets.
  std::vector<char> artery(cands.size(), 0);
  int artery_len = 0;
  for (int r = 0, c = 0; r != g - 1 || c != g - 1;) {
    int nr = r, nc = c;
    if (r + 1 < g && c + 1 < g && rng.next_double() < 0.5) {
      nr++, nc++;
    } else if (r + 1 >= g) {
      nc++;
    } else if (c + 1 >= g) {
      nr++;
    } else if (rng.uniform_int(0, 1)) {
      nr++;
    } else {
      nc++;
    }
    artery[cand_idx[{id(r, c), id(nr, nc)}]] = 1;
    artery_len++;
    r = nr, c = nc;
  }
  if (p.links < artery_len)
    throw ConfigError("gen-topology: too few links for an arterial route");

  // Sample, drop links that ended up off every source->sink path, resample.
  // The artery is on a source->sink path by construction, so it survives.
  std::vector<int> order(cands.size());
  for (size_t i = 0; i < order.size(); i++) order[i] = int(i);
  for (size_t i = order.size(); i > 1; i--)
    std::swap(order[i - 1], order[rng.uniform_int(0, int(i) - 1)]);
  std::vector<char> chosen = artery;
  int want = p.links;
  size_t cursor = 0;
  auto take_more = [&](int count) {
    while (count > 0 && cursor < order.size()) {
      if (!chosen[order[cursor]]) {
        chosen[order[cursor]] = 1;
        count--;
      }
      cursor++;
    }
    return count == 0;
  };
  if (!take_more(want - artery_len))
    throw ConfigError("gen-topology: mesh exhausted");
  for (int round = 0; round < 500; round++) {
    std::vector<std::pair<int, int>> cur;
    std::vector<int> cur_idx;
    for (size_t i = 0; i < cands.size(); i++)
      if (chosen[i]) {
        cur.push_back(cands[i]);
        cur_idx.push_back(int(i));
      }
    std::vector<char> ok = useful_links(p.nodes, source, sink, cur);
    int dropped = 0;
    for (size_t i = 0; i < cur.size(); i++)
      if (!ok[i]) {
        chosen[cur_idx[i]] = 0;
        dropped++;
      }
    if (dropped == 0 && int(cur.size()) == want) {
      NetGraph net;
      net.n = p.nodes;
      net.source = source;
      net.sink = sink;
      for (auto [s, d] : cur) net.links.push_back(NetLink{s, d, 1.0, 1.0});
      if (fast_out) {
        fast_out->clear();
        for (int i : cur_idx) fast_out->push_back(artery[i]);
      }
      return net;
    }
    if (!take_more(dropped)) {
      // Mesh ran dry for this shuffle; restart with a fresh order.
      cursor = 0;
      chosen = artery;
      for (size_t i = order.size(); i > 1; i--)
        std::swap(order[i - 1], order[rng.uniform_int(0, int(i) - 1)]);
      if (!take_more(want - artery_len))
        throw ConfigError("gen-topology: mesh exhausted");
    }
  }
  throw InvariantError("gen-topology: grid sampling did not converge");
}

NetGraph gen_ring(const GraphGenParams& p, Rng& rng) {
  if (p.links < p.nodes)
    throw ConfigError("gen-topology: ring needs links >= nodes");
  NetGraph net;
  net.n = p.nodes;
  net.source = 0;
  net.sink = p.nodes - 1;
  std::set<std::pair<int, int>> used;
  for (int i = 0; i < p.nodes; i++) {
    int j = (i + 1) % p.nodes;
    net.links.push_back(NetLink{i, j, 1.0, 1.0});
    used.insert({i, j});
  }
  int extra = p.links - p.nodes;
  int guard = 0;
  while (extra > 0) {
    if (++guard > 100000)
      throw InvariantError("gen-topology: ring chord sampling stuck");
    int a = rng.uniform_int(0, p.nodes - 1);
    int b = rng.uniform_int(0, p.nodes - 1);
    if (a == b || used.count({a, b})) continue;
    used.insert({a, b});
    net.links.push_back(NetLink{a, b, 1.0, 1.0});
    extra--;
  }
  return net;
}

NetGraph gen_random(const GraphGenParams& p, Rng& rng) {
  int max_links = p.nodes * (p.nodes - 1);
  if (p.links > max_links)
    throw ConfigError("gen-topology: more links than node pairs");
  for (int attempt = 0; attempt < 200; attempt++) {
    std::set<std::pair<int, int>> used;
    while (int(used.size()) < p.links) {
      int a = rng.uniform_int(0, p.nodes - 1);
      int b = rng.uniform_int(0, p.nodes - 1);
      if (a != b) used.insert({a, b});
    }
    std::vector<std::pair<int, int>> links(used.begin(), used.end());
    std::vector<char> ok = useful_links(p.nodes, 0, p.nodes - 1, links);
    bool connected = false;
    for (size_t i = 0; i < links.size(); i++)
      if (ok[i] && links[i].first == 0) connected = true;
    if (!connected) continue;
    NetGraph net;
    net.n = p.nodes;
    net.source = 0;
    net.sink = p.nodes - 1;
    for (auto [s, d] : links) net.links.push_back(NetLink{s, d, 1.0, 1.0});
    return net;
  }
  throw InvariantError("gen-topology: random graph never connected");
}

}  // namespace

NetGraph gen_graph(const GraphGenParams& p, uint64_t seed) {
  if (p.nodes < 2) throw ConfigError("gen-topology: need at least two nodes");
  if (p.links < 1) throw ConfigError("gen-topology: need at least one link");
  if (!(p.delay_min_ms > 0.0) || p.delay_max_ms < p.delay_min_ms)
    throw ConfigError("gen-topology: bad delay range");
  if (!(p.theta_lo > 0.0 && p.theta_hi <= 1.0 && p.theta_lo <= p.theta_hi))
    throw ConfigError("gen-topology: bad theta range");
  if (!(p.collector_frac >= 0.0 && p.collector_frac <= 1.0))
    throw ConfigError("gen-topology: collector fraction outside [0,1]");
  Rng rng = Rng(seed).fork("topogen/" + p.kind);
  NetGraph net;
  std::vector<char> fast_mask;
  if (p.kind == "grid-road")
    net = gen_grid_road(p, rng, &fast_mask);
  else if (p.kind == "ring")
    net = gen_ring(p, rng);
  else if (p.kind == "random")
    net = gen_random(p, rng);
  else
    throw ConfigError("gen-topology: unknown kind " + p.kind);
  assign_link_params(net, p, rng, fast_mask);
  net.finalize();
  return net;
}

EdgeTopology gen_edge_topology(int nodes, int zones, uint64_t seed,
                               double area_side) {
  if (nodes < 1) throw ConfigError("topology: need at least one node");
  if (zones < 1 || zones > nodes)
    throw ConfigError("topology: zones must be in [1, nodes]");
  Rng rng = Rng(seed).fork("edgetopo");
  int zcols = int(std::ceil(std::sqrt(double(zones))));
  int zrows = (zones + zcols - 1) / zcols;
  EdgeTopology topo;
  topo.nodes.reserve(nodes);
  char name[32];
  for (int i = 0; i < nodes; i++) {
    TopoNode n;
    std::snprintf(name, sizeof name, "n%05d", i);
    n.name = name;
    n.x = rng.uniform_real(0.0, area_side);
    n.y = rng.uniform_real(0.0, area_side);
    int zc = std::min(zcols - 1, int(n.x / area_side * zcols));
    int zr = std::min(zrows - 1, int(n.y / area_side * zrows));
    n.zone = std::min(zones - 1, zr * zcols + zc);
    n.capacity = rng.uniform_int(1, 16);
    topo.nodes.push_back(std::move(n));
  }
  return topo;
}

}  // namespace ads
