#include "ads/banditnet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "ads/error.hpp"

namespace ads {

const char* policy_label(Policy p) {
  switch (p) {
    case Policy::KlUcb: return "klucb";
    case Policy::NextHop: return "nexthop";
    case Policy::EndToEnd: return "endtoend";
    case Policy::Optimal: return "optimal";
  }
  return "?";
}

void NetGraph::finalize() {
  if (n <= 0) throw ConfigError("graph: empty node set");
  if (source < 0 || source >= n || sink < 0 || sink >= n)
    throw ConfigError("graph: source/sink out of range");
  std::set<std::pair<int, int>> seen;
  for (const auto& l : links) {
    if (l.src < 0 || l.src >= n || l.dst < 0 || l.dst >= n)
      throw ConfigError("graph: link endpoint out of range");
    if (l.src == l.dst) throw ConfigError("graph: self-loop link");
    if (!(l.theta > 0.0 && l.theta <= 1.0))
      throw ConfigError("graph: theta outside (0,1]");
    if (!(l.base_delay_ms > 0.0))
      throw ConfigError("graph: non-positive base delay");
    if (!seen.insert({l.src, l.dst}).second)
      throw ConfigError("graph: duplicate link");
  }
  out.assign(n, {});
  for (size_t i = 0; i < links.size(); i++) out[links[i].src].push_back(int(i));
  for (auto& lst : out)
    std::sort(lst.begin(), lst.end(),
              [&](int a, int b) { return links[a].dst < links[b].dst; });
  // reverse reachability to the sink
  std::vector<std::vector<int>> in(n);
  for (const auto& l : links) in[l.dst].push_back(l.src);
  reach.assign(n, 0);
  std::vector<int> q{sink};
  reach[sink] = 1;
  while (!q.empty()) {
    int v = q.back();
    q.pop_back();
    for (int u : in[v])
      if (!reach[u]) {
        reach[u] = 1;
        q.push_back(u);
      }
  }
  if (!reach[source])
    throw ConfigError("graph: sink unreachable from source");
}

double kl_bernoulli(double p, double u) {
  if (!(p >= 0.0 && p <= 1.0) || !(u >= 0.0 && u <= 1.0))
    throw std::domain_error("kl_bernoulli: arguments outside [0,1]");
  if (p == u) return 0.0;
  double a = 0.0, b = 0.0;
  if (p > 0.0) {
    if (u == 0.0) return kInf;
    a = p * std::log(p / u);
  }
  if (p < 1.0) {
    if (u == 1.0) return kInf;
    b = (1.0 - p) * std::log((1.0 - p) / (1.0 - u));
  }
  return a + b;
}

double omega_index(uint64_t attempts, uint64_t successes, uint64_t tau,
                   double C, double u_tol) {
  if (tau < 1) throw std::domain_error("omega_index: tau < 1");
  if (successes > attempts)
    throw std::domain_error("omega_index: successes > attempts");
  if (attempts == 0) return 1.0;
  double th = double(successes) / double(attempts);
  if (th >= 1.0) return 1.0;
  double budget = C * std::log(double(tau));
  double t = double(attempts);
  // Zero budget pins u* at theta_hat exactly; bisecting would wobble on
  // the cancellation of kl(p, p+eps) near the left edge.
  if (budget <= 0.0) return th > 0.0 ? 1.0 / th : kInf;
  // Largest feasible u; kl(th, .) is increasing on [th, 1].
  double lo = th, hi = 1.0;
  if (t * kl_bernoulli(th, std::nextafter(1.0, 0.0)) <= budget) return 1.0;
  while (hi - lo > u_tol) {
    double mid = 0.5 * (lo + hi);
    if (t * kl_bernoulli(th, mid) <= budget)
      lo = mid;
    else
      hi = mid;
  }
  if (lo <= 0.0) return kInf;
  return 1.0 / lo;
}

std::vector<double> long_term_costs(const NetGraph& g,
                                    const std::vector<double>& omega,
                                    int hop_limit) {
  if (omega.size() != g.links.size())
    throw std::domain_error("long_term_costs: omega size mismatch");
  std::vector<double> J(g.n, kInf);
  if (hop_limit <= 0) {
    // Dijkstra from the sink over reversed links; omega >= 1 keeps sums
    // minimal on simple paths.
    std::vector<std::vector<int>> rin(g.n);
    for (size_t i = 0; i < g.links.size(); i++) rin[g.links[i].dst].push_back(int(i));
    using QE = std::pair<double, int>;
    std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
    J[g.sink] = 0.0;
    pq.push({0.0, g.sink});
    while (!pq.empty()) {
      auto [d, v] = pq.top();
      pq.pop();
      if (d > J[v]) continue;
      for (int li : rin[v]) {
        if (omega[li] == kInf) continue;
        double w = omega[li] * g.links[li].base_delay_ms;
        int u = g.links[li].src;
        if (J[v] + w < J[u]) {
          J[u] = J[v] + w;
          pq.push({J[u], u});
        }
      }
    }
    return J;
  }
  // Truncated lookahead: cheapest loop-free window of hop_limit links that
  // can still be extended to the sink; the remainder is not charged.
  std::vector<char> onpath(g.n, 0);
  auto dfs = [&](auto&& self, int v, int depth) -> double {
    if (v == g.sink) return 0.0;
    if (depth == 0) return g.reach[v] ? 0.0 : kInf;
    double best = kInf;
    for (int li : g.out[v]) {
      int w = g.links[li].dst;
      if (onpath[w] || !g.reach[w] || omega[li] == kInf) continue;
      onpath[w] = 1;
      double rest = self(self, w, depth - 1);
      onpath[w] = 0;
      if (rest < kInf)
        best = std::min(best, omega[li] * g.links[li].base_delay_ms + rest);
    }
    return best;
  };
  for (int v = 0; v < g.n; v++) {
    if (!g.reach[v]) continue;
    onpath.assign(g.n, 0);
    onpath[v] = 1;
    J[v] = dfs(dfs, v, hop_limit);
  }
  return J;
}

std::vector<std::vector<int>> enumerate_paths(const NetGraph& g, size_t cap) {
  std::vector<std::vector<int>> paths;
  std::vector<int> stack;
  std::vector<char> onpath(g.n, 0);
  auto dfs = [&](auto&& self, int v) -> void {
    if (v == g.sink) {
      if (paths.size() >= cap)
        throw InvariantError("enumerate_paths: path cap exceeded");
      paths.push_back(stack);
      return;
    }
    for (int li : g.out[v]) {
      int w = g.links[li].dst;
      if (onpath[w] || !g.reach[w]) continue;
      onpath[w] = 1;
      stack.push_back(li);
      self(self, w);
      stack.pop_back();
      onpath[w] = 0;
    }
  };
  onpath[g.source] = 1;
  dfs(dfs, g.source);
  return paths;
}

double expected_delay_of_links(const NetGraph& g, const std::vector<int>& links) {
  double s = 0.0;
  for (int li : links) s += g.expected_delay(li);
  return s;
}

OptimalPath optimal_path(const NetGraph& g) {
  std::vector<double> dist(g.n, kInf);
  std::vector<int> via(g.n, -1);  // link taken into node
  using QE = std::pair<double, int>;
  std::priority_queue<QE, std::vector<QE>, std::greater<QE>> pq;
  dist[g.source] = 0.0;
  pq.push({0.0, g.source});
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (int li : g.out[v]) {
      int w = g.links[li].dst;
      double nd = d + g.expected_delay(li);
      if (nd < dist[w]) {
        dist[w] = nd;
        via[w] = li;
        pq.push({nd, w});
      }
    }
  }
  if (dist[g.sink] == kInf)
    throw InvariantError("optimal_path: sink unreachable");
  OptimalPath p;
  for (int v = g.sink; v != g.source;) {
    p.links.push_back(via[v]);
    v = g.links[via[v]].src;
  }
  std::reverse(p.links.begin(), p.links.end());
  p.nodes.push_back(g.source);
  for (int li : p.links) p.nodes.push_back(g.links[li].dst);
  p.expected_ms = expected_delay_of_links(g, p.links);
  return p;
}

BanditSession::BanditSession(const NetGraph* g, Policy policy,
                             const BanditConfig& cfg, uint64_t seed)
    : g_(g), policy_(policy), cfg_(cfg), rng_(Rng(seed).fork("banditnet")) {
  stats_.assign(g_->links.size(), LinkStats{});
  node_visits_.assign(g_->n, 0);
  opt_ = optimal_path(*g_);
  if (policy_ == Policy::EndToEnd) {
    paths_ = enumerate_paths(*g_, cfg_.path_cap);
    path_nodes_.reserve(paths_.size());
    for (const auto& p : paths_) {
      std::vector<int> nodes{g_->source};
      for (int li : p) nodes.push_back(g_->links[li].dst);
      path_nodes_.push_back(std::move(nodes));
    }
    path_count_.assign(paths_.size(), 0);
    path_delay_sum_.assign(paths_.size(), 0.0);
  }
}

double BanditSession::transmit(int link) {
  uint64_t attempts =
      rng_.geometric(g_->links[link].theta, cfg_.theta_min, cfg_.attempt_cap);
  double realized = double(attempts) * g_->links[link].base_delay_ms;
  LinkStats& st = stats_[link];
  st.attempts += attempts;
  st.successes += 1;
  st.delay_sum_ms += realized;
  tau_ += attempts;
  clock_ms_ += realized;
  return realized;
}

int BanditSession::pick_klucb(int at) const {
  std::vector<double> om(g_->links.size());
  for (size_t i = 0; i < om.size(); i++)
    om[i] = omega_index(stats_[i].attempts, stats_[i].successes, tau_, cfg_.C,
                        cfg_.u_tol);
  std::vector<double> J = long_term_costs(*g_, om, cfg_.hop_limit);
  int best = -1;
  double best_cost = kInf;
  for (int li : g_->out[at]) {
    int w = g_->links[li].dst;
    if (J[w] == kInf || om[li] == kInf) continue;
    double c = om[li] * g_->links[li].base_delay_ms + J[w];
    if (c < best_cost) {  // out[] sorted by dst: ties keep lowest node id
      best_cost = c;
      best = li;
    }
  }
  if (best < 0)
    throw InvariantError("klucb: no usable next hop");
  return best;
}

int BanditSession::pick_nexthop(int at, const std::vector<char>& visited) {
  node_visits_[at] += 1;
  uint64_t nv = node_visits_[at];
  std::vector<int> cands;
  for (int li : g_->out[at]) {
    int w = g_->links[li].dst;
    if (g_->reach[w] && !visited[w]) cands.push_back(li);
  }
  if (cands.empty()) {
    for (int li : g_->out[at])
      if (g_->reach[g_->links[li].dst]) cands.push_back(li);
  }
  if (cands.empty()) throw InvariantError("nexthop: dead end");
  // Exploit with probability 1 - 1/N(v); N = 1 always explores.
  if (rng_.next_double() < 1.0 / double(nv))
    return cands[rng_.uniform_int(0, int(cands.size()) - 1)];
  int best = cands[0];
  double best_d = kInf;
  for (int li : cands) {
    double d = stats_[li].successes ? stats_[li].mean_delay_ms() : 1.0;
    if (d < best_d) {
      best_d = d;
      best = li;
    }
  }
  return best;
}

size_t BanditSession::pick_endtoend() const {
  double logt = std::log(double(tau_));
  size_t best = paths_.size();
  double best_lcb = kInf;
  for (size_t i = 0; i < paths_.size(); i++) {
    double lcb;
    if (path_count_[i] == 0) {
      lcb = -kInf;  // forced exploration, first in lexicographic order
    } else {
      uint64_t visits = 0;
      for (int li : paths_[i]) visits += stats_[li].successes;
      double mean = path_delay_sum_[i] / double(path_count_[i]);
      lcb = mean - std::sqrt((cfg_.L + 1.0) * logt / double(visits));
    }
    if (lcb < best_lcb) {  // paths_ lexicographic: ties keep smaller path
      best_lcb = lcb;
      best = i;
    }
  }
  if (best == paths_.size())
    throw InvariantError("endtoend: no candidate path");
  return best;
}

PacketResult BanditSession::send_packet() {
  PacketResult res;
  if (policy_ == Policy::EndToEnd || policy_ == Policy::Optimal) {
    const std::vector<int>* links;
    size_t pi = 0;
    if (policy_ == Policy::EndToEnd) {
      pi = pick_endtoend();
      links = &paths_[pi];
    } else {
      links = &opt_.links;
    }
    res.nodes.push_back(g_->source);
    for (int li : *links) {
      res.realized_ms += transmit(li);
      res.links.push_back(li);
      res.nodes.push_back(g_->links[li].dst);
    }
    if (policy_ == Policy::EndToEnd) {
      path_count_[pi] += 1;
      path_delay_sum_[pi] += res.realized_ms;
    }
  } else {
    int at = g_->source;
    std::vector<char> visited(g_->n, 0);
    visited[at] = 1;
    res.nodes.push_back(at);
    int hop_cap = 16 * g_->n;
    while (at != g_->sink) {
      if (--hop_cap < 0)
        throw InvariantError("send_packet: hop cap exceeded (no progress)");
      int li = policy_ == Policy::KlUcb ? pick_klucb(at)
                                        : pick_nexthop(at, visited);
      res.realized_ms += transmit(li);
      at = g_->links[li].dst;
      visited[at] = 1;
      res.links.push_back(li);
      res.nodes.push_back(at);
    }
  }
  res.expected_ms = expected_delay_of_links(*g_, res.links);
  return res;
}

RegretSeries run_regret(const NetGraph& g, Policy policy, int packets,
                        uint64_t seed, const BanditConfig& cfg) {
  BanditSession session(&g, policy, cfg, seed);
  RegretSeries out;
  out.expected_regret.reserve(packets);
  out.realized_ms.reserve(packets);
  out.optimal_expected_ms = session.optimal().expected_ms;
  out.first_optimal_trial = packets + 1;
  std::map<std::vector<int>, int> path_freq;
  double cum = 0.0;
  for (int k = 1; k <= packets; k++) {
    PacketResult r = session.send_packet();
    cum += r.expected_ms - out.optimal_expected_ms;
    out.expected_regret.push_back(cum);
    out.realized_ms.push_back(r.realized_ms);
    if (out.first_optimal_trial > packets && r.nodes == session.optimal().nodes)
      out.first_optimal_trial = k;
    path_freq[r.links] += 1;
  }
  out.final_expected_regret = cum;
  int best_count = 0;
  for (const auto& [links, count] : path_freq) {
    if (count > best_count) {  // map order: ties keep lexicographic smaller
      best_count = count;
      out.modal_path_expected_ms = expected_delay_of_links(g, links);
    }
  }
  return out;
}

}  // namespace ads
