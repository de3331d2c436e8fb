#pragma once
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "ads/sim.hpp"

namespace ads {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NetLink {
  int src = 0;
  int dst = 0;
  double theta = 1.0;          // per-attempt success probability
  double base_delay_ms = 1.0;  // cost of one attempt
};

// Directed lossy network. Node ids are dense ints; adjacency is kept sorted
// by destination so every argmin tie-break is "lowest node id".
struct NetGraph {
  int n = 0;
  int source = 0;
  int sink = 0;
  std::vector<NetLink> links;
  std::vector<std::vector<int>> out;  // link indices per src, sorted by dst
  std::vector<char> reach;            // node can still reach the sink

  void finalize();  // builds out/reach, validates
  double expected_delay(int link) const {
    return links[link].base_delay_ms / links[link].theta;
  }
};

struct LinkStats {
  uint64_t attempts = 0;   // t'
  uint64_t successes = 0;  // packets that got through
  double delay_sum_ms = 0.0;
  double theta_hat() const {
    return attempts ? double(successes) / double(attempts) : 0.0;
  }
  double mean_delay_ms() const {
    return successes ? delay_sum_ms / double(successes) : 0.0;
  }
};

struct BanditConfig {
  double C = 0.2;               // exploration factor
  double u_tol = 1e-9;          // bisection tolerance for the KL index
  double theta_min = 0.01;      // links are clamped to stay usable
  uint64_t attempt_cap = 1000000;
  int hop_limit = 0;            // 0 = full lookahead, else 1..3 links
  double L = 1.0;               // end-to-end LCB constant
  size_t path_cap = 100000;     // loop-free enumeration limit
};

enum class Policy { KlUcb, NextHop, EndToEnd, Optimal };
const char* policy_label(Policy p);

// kl(p,u) for Bernoulli with the 0 log 0 conventions; +inf when u pins an
// impossible event.
double kl_bernoulli(double p, double u);

// Inflation factor omega = 1 / u*, u* the largest u in [theta_hat, 1] with
// t' * kl(theta_hat, u) <= C log tau, found by bisection. Unvisited links and
// theta_hat = 1 give 1; theta_hat = 0 at tau = 1 gives +inf.
double omega_index(uint64_t attempts, uint64_t successes, uint64_t tau,
                   double C, double u_tol = 1e-9);

// Optimistic cost-to-sink per node given per-link omega. hop_limit = 0 takes
// the full path sum (Dijkstra; valid since omega >= 1); 1..3 truncates each
// candidate continuation to its first hop_limit links (loop-free window).
std::vector<double> long_term_costs(const NetGraph& g,
                                    const std::vector<double>& omega,
                                    int hop_limit = 0);

// All loop-free source->sink paths as link sequences, lexicographic by node
// sequence. Throws past cap.
std::vector<std::vector<int>> enumerate_paths(const NetGraph& g, size_t cap);

// True-expectation shortest path (the play regret is measured against).
struct OptimalPath {
  std::vector<int> links;
  std::vector<int> nodes;
  double expected_ms = 0.0;
};
OptimalPath optimal_path(const NetGraph& g);

double expected_delay_of_links(const NetGraph& g, const std::vector<int>& links);

struct PacketResult {
  std::vector<int> nodes;
  std::vector<int> links;
  double realized_ms = 0.0;
  double expected_ms = 0.0;  // sum of true base/theta over traversed links
};

// One (graph, policy, seed) learning run. The attempt-slot counter tau is
// shared by every link; stats persist across packets.
class BanditSession {
 public:
  BanditSession(const NetGraph* g, Policy policy, const BanditConfig& cfg,
                uint64_t seed);

  PacketResult send_packet();
  uint64_t tau() const { return tau_; }
  double clock_ms() const { return clock_ms_; }
  const LinkStats& stats(int link) const { return stats_[link]; }
  const OptimalPath& optimal() const { return opt_; }

 private:
  const NetGraph* g_;
  Policy policy_;
  BanditConfig cfg_;
  Rng rng_;
  uint64_t tau_ = 1;
  double clock_ms_ = 0.0;
  std::vector<LinkStats> stats_;
  std::vector<uint64_t> node_visits_;
  OptimalPath opt_;
  // End-to-end state
  std::vector<std::vector<int>> paths_;
  std::vector<std::vector<int>> path_nodes_;
  std::vector<uint64_t> path_count_;
  std::vector<double> path_delay_sum_;

  double transmit(int link);
  int pick_klucb(int at) const;
  int pick_nexthop(int at, const std::vector<char>& visited);
  size_t pick_endtoend() const;
};

struct RegretSeries {
  std::vector<double> expected_regret;  // cumulative, one entry per packet
  std::vector<double> realized_ms;      // per-packet realized delay
  int first_optimal_trial = 0;          // 1-based; K+1 if never
  double final_expected_regret = 0.0;
  double modal_path_expected_ms = 0.0;  // most frequently chosen path
  double optimal_expected_ms = 0.0;
};

RegretSeries run_regret(const NetGraph& g, Policy policy, int packets,
                        uint64_t seed, const BanditConfig& cfg);

}  // namespace ads
