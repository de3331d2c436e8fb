#pragma once
#include <cstdint>
#include <functional>
#include <queue>
#include <string_view>
#include <vector>

namespace ads {

// xoshiro256** seeded through splitmix64. One root stream per scenario;
// substreams are forked by label so module draw order can't perturb siblings.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  double next_double();                       // [0,1)
  uint64_t uniform_u64(uint64_t lo, uint64_t hi);  // inclusive bounds
  int uniform_int(int lo, int hi);            // inclusive bounds
  double uniform_real(double lo, double hi);
  bool bernoulli(double p);                   // domain error outside [0,1]
  // Trial count of the first success, mean 1/theta. theta is clamped below
  // at theta_min; counts past attempt_cap raise an invariant error.
  uint64_t geometric(double theta, double theta_min = 0.01,
                     uint64_t attempt_cap = 1000000);
  Rng fork(std::string_view label) const;
  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  uint64_t s_[4];
};

struct SimClock {
  uint64_t now_ms = 0;
};

// Deterministic discrete-event queue: events pop in (timestamp, seq) order,
// seq being the scheduling sequence number.
class EventQueue {
 public:
  explicit EventQueue(SimClock* clock) : clock_(clock) {}

  uint64_t schedule(uint64_t at_ms, std::function<void()> fn);
  // Runs every event with timestamp <= deadline (including newly scheduled
  // ones). The clock ends at the latest processed timestamp.
  void run_until(uint64_t deadline_ms);
  void run_all();
  size_t pending() const { return heap_.size(); }
  SimClock& clock() { return *clock_; }

 private:
  struct Ev {
    uint64_t t;
    uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };
  SimClock* clock_;
  uint64_t next_seq_ = 0;
  std::priority_queue<Ev, std::vector<Ev>, Later> heap_;
};

}  // namespace ads
