#pragma once
#include <optional>
#include <string>
#include <vector>

#include "ads/overlay.hpp"

namespace ads {

// Per-instance capacities: r tuples/s of processing, q tuples/s of queue
// drain. alpha weighs the two pressure terms.
struct ScaleParams {
  double alpha = 0.5;
  double r = 30.0;
  double q = 10.0;
};

// f(x) = alpha*(x*r/R) + (1-alpha)*(x*q/Q); 1 means exactly provisioned.
// nullopt when R or Q is zero (degenerate load: caller treats as healthy).
std::optional<double> health_score(double x, double R, double Q,
                                   const ScaleParams& p);

constexpr double kHealthLo = 0.9;
constexpr double kHealthHi = 1.1;
constexpr double kEpsilonInstances = 1e-6;  // stand-in for x = 0

struct SecantPair {
  double x_prev = 0.0;
  double f_prev = 0.0;
  double x_curr = 0.0;
  double f_curr = 0.0;
};

// x_next = x_curr + (1 - f_curr) * (x_curr - x_prev) / (f_curr - f_prev).
// nullopt on a flat secant (f_curr == f_prev).
std::optional<double> secant_step(const SecantPair& s);

int actuate_instances(double x);  // round half-up, clamp >= 1

enum class ScaleAction { None, ScaleUp, ScaleOut, Migrate };
const char* action_label(ScaleAction a);

struct OperatorMetrics {
  std::vector<double> queue_len;  // trailing samples, last = current
  double input_rate = 0.0;
  double output_rate = 0.0;
  double link_utilization = 0.0;
};

struct PeerOption {
  NodeId node;
  uint64_t load = 0;
};

struct ScaleDecision {
  ScaleAction action = ScaleAction::None;
  NodeId target;  // for ScaleOut / Migrate: least-loaded leaf peer
};

// Bottleneck classifier: link utilization >= 0.9 is a bandwidth bottleneck
// (stateless -> scale out, stateful -> migrate with state); queue growth over
// three consecutive samples with spare link capacity is a compute bottleneck
// (scale up in place).
ScaleDecision decide(const OperatorMetrics& m, bool stateful,
                     const std::vector<PeerOption>& peers);

struct PressureSample {
  double time_s = 0.0;
  std::string op_id;
  double input_rate = 0.0;
  double queue_size = 0.0;
};

struct ScaleTraceRow {
  double time_s = 0.0;
  std::string op_id;
  int instances = 0;
  double health = 0.0;
  std::string action;
};

struct ScalingScenarioConfig {
  ScaleParams params;
  double link_rate_tuples = 10000.0;  // modeled link capacity
  std::vector<std::string> stateful_ops;
  int max_steps_per_sample = 8;
};

// Replays a pressure schedule: per sample the op is reclassified, unhealthy
// scores trigger secant resizes (pair reseeded when the phase shifts).
std::vector<ScaleTraceRow> run_scaling_scenario(
    const std::vector<PressureSample>& schedule,
    const ScalingScenarioConfig& cfg);

}  // namespace ads
