#include "ads/sim.hpp"

#include <cmath>
#include <stdexcept>

#include "ads/error.hpp"
#include "ads/hash.hpp"

namespace ads {

static uint64_t splitmix64(uint64_t& x) {
  uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed) {
  uint64_t x = seed;
  for (auto& s : s_) s = splitmix64(x);
}

static inline uint64_t rotl(uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

uint64_t Rng::next_u64() {
  const uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::next_double() {
  return double(next_u64() >> 11) * 0x1.0p-53;
}

uint64_t Rng::uniform_u64(uint64_t lo, uint64_t hi) {
  if (hi < lo) throw std::domain_error("uniform_u64: hi < lo");
  uint64_t span = hi - lo + 1;
  if (span == 0) return next_u64();  // full range
  // Rejection sampling keeps the draw unbiased.
  uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return lo + v % span;
}

int Rng::uniform_int(int lo, int hi) {
  return int(uniform_u64(uint64_t(0), uint64_t(hi - lo))) + lo;
}

double Rng::uniform_real(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

bool Rng::bernoulli(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("bernoulli: p outside [0,1]");
  return next_double() < p;
}

uint64_t Rng::geometric(double theta, double theta_min, uint64_t attempt_cap) {
  if (!(theta > 0.0 && theta <= 1.0))
    throw std::domain_error("geometric: theta outside (0,1]");
  if (theta < theta_min) theta = theta_min;
  if (theta >= 1.0) return 1;
  // Inversion: ceil(log(1-u)/log(1-theta)) has P(X=k) = (1-theta)^(k-1) theta.
  double u = next_double();
  double k = std::ceil(std::log1p(-u) / std::log1p(-theta));
  uint64_t attempts = k < 1.0 ? 1 : uint64_t(k);
  if (attempts > attempt_cap)
    throw InvariantError("geometric: attempt cap exceeded (pathological link)");
  return attempts;
}

Rng Rng::fork(std::string_view label) const {
  uint64_t x = seed_ ^ hash64(label);
  return Rng(splitmix64(x));
}

uint64_t EventQueue::schedule(uint64_t at_ms, std::function<void()> fn) {
  if (at_ms < clock_->now_ms)
    throw InvariantError("EventQueue: scheduling in the past");
  uint64_t seq = next_seq_++;
  heap_.push(Ev{at_ms, seq, std::move(fn)});
  return seq;
}

void EventQueue::run_until(uint64_t deadline_ms) {
  while (!heap_.empty() && heap_.top().t <= deadline_ms) {
    Ev ev = heap_.top();
    heap_.pop();
    clock_->now_ms = ev.t;
    ev.fn();
  }
}

void EventQueue::run_all() {
  run_until(UINT64_MAX);
}

}  // namespace ads
