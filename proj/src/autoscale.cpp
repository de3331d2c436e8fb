#include "ads/autoscale.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ads/error.hpp"

namespace ads {

std::optional<double> health_score(double x, double R, double Q,
                                   const ScaleParams& p) {
  if (!(p.alpha >= 0.0 && p.alpha <= 1.0))
    throw std::domain_error("health_score: alpha outside [0,1]");
  if (x < 0.0) throw std::domain_error("health_score: negative instances");
  if (R == 0.0 || Q == 0.0) return std::nullopt;
  return p.alpha * (x * p.r / R) + (1.0 - p.alpha) * (x * p.q / Q);
}

std::optional<double> secant_step(const SecantPair& s) {
  if (s.f_curr == s.f_prev) return std::nullopt;
  return s.x_curr +
         (1.0 - s.f_curr) * (s.x_curr - s.x_prev) / (s.f_curr - s.f_prev);
}

int actuate_instances(double x) {
  int n = int(std::floor(x + 0.5));
  return n < 1 ? 1 : n;
}

const char* action_label(ScaleAction a) {
  switch (a) {
    case ScaleAction::None: return "none";
    case ScaleAction::ScaleUp: return "scale-up";
    case ScaleAction::ScaleOut: return "scale-out";
    case ScaleAction::Migrate: return "migrate";
  }
  return "?";
}

static NodeId pick_peer(const std::vector<PeerOption>& peers) {
  if (peers.empty())
    throw InvariantError("decide: no leaf peer available for placement");
  const PeerOption* best = &peers[0];
  for (const auto& p : peers)
    if (p.load < best->load || (p.load == best->load && p.node.v < best->node.v))
      best = &p;
  return best->node;
}

ScaleDecision decide(const OperatorMetrics& m, bool stateful,
                     const std::vector<PeerOption>& peers) {
  if (m.link_utilization >= 0.9) {
    ScaleDecision d;
    d.action = stateful ? ScaleAction::Migrate : ScaleAction::ScaleOut;
    d.target = pick_peer(peers);
    return d;
  }
  const auto& q = m.queue_len;
  bool growing = q.size() >= 3 && q[q.size() - 1] > q[q.size() - 2] &&
                 q[q.size() - 2] > q[q.size() - 3];
  if (growing) return ScaleDecision{ScaleAction::ScaleUp, NodeId{}};
  return ScaleDecision{ScaleAction::None, NodeId{}};
}

namespace {

struct OpState {
  int instances = 1;
  double phase_R = -1.0, phase_Q = -1.0;
  bool have_pair = false;
  SecantPair pair;
  std::vector<double> queue_hist;
};

}  // namespace

std::vector<ScaleTraceRow> run_scaling_scenario(
    const std::vector<PressureSample>& schedule,
    const ScalingScenarioConfig& cfg) {
  std::map<std::string, OpState> ops;
  std::vector<ScaleTraceRow> trace;
  auto is_stateful = [&](const std::string& id) {
    return std::find(cfg.stateful_ops.begin(), cfg.stateful_ops.end(), id) !=
           cfg.stateful_ops.end();
  };
  for (const auto& s : schedule) {
    OpState& st = ops[s.op_id];
    st.queue_hist.push_back(s.queue_size);
    if (st.queue_hist.size() > 3)
      st.queue_hist.erase(st.queue_hist.begin());
    double util =
        cfg.link_rate_tuples > 0.0 ? s.input_rate / cfg.link_rate_tuples : 0.0;

    ScaleTraceRow row;
    row.time_s = s.time_s;
    row.op_id = s.op_id;
    row.action = "none";

    auto f = health_score(double(st.instances), s.input_rate, s.queue_size,
                          cfg.params);
    row.health = f.value_or(1.0);

    if (util >= 0.9) {
      row.action = is_stateful(s.op_id) ? "migrate" : "scale-out";
      if (!is_stateful(s.op_id)) st.instances += 1;
      row.instances = st.instances;
      trace.push_back(row);
      continue;
    }

    if (!f || (*f >= kHealthLo && *f <= kHealthHi)) {
      st.have_pair = false;  // healthy: next breach reseeds the pair
      row.instances = st.instances;
      trace.push_back(row);
      continue;
    }

    // Unhealthy: one secant resize per sample. On a fresh breach (or a phase
    // shift) seed the pair with a half-count virtual probe.
    bool phase_shift = s.input_rate != st.phase_R || s.queue_size != st.phase_Q;
    st.phase_R = s.input_rate;
    st.phase_Q = s.queue_size;
    if (!st.have_pair || phase_shift) {
      double x1 = double(st.instances);
      double x0 = std::max(kEpsilonInstances, x1 / 2.0);
      if (x0 == x1) x0 = kEpsilonInstances;
      double f0 = health_score(x0, s.input_rate, s.queue_size, cfg.params)
                      .value_or(1.0);
      st.pair = SecantPair{x0, f0, x1, *f};
      st.have_pair = true;
    } else {
      st.pair.x_prev = st.pair.x_curr;
      st.pair.f_prev = st.pair.f_curr;
      st.pair.x_curr = double(st.instances);
      st.pair.f_curr = *f;
    }
    auto next = secant_step(st.pair);
    if (next) {
      int before = st.instances;
      st.instances = actuate_instances(*next);
      st.pair.x_prev = st.pair.x_curr;
      st.pair.f_prev = st.pair.f_curr;
      st.pair.x_curr = *next;
      st.pair.f_curr =
          health_score(*next, s.input_rate, s.queue_size, cfg.params)
              .value_or(1.0);
      if (st.instances > before)
        row.action = "scale-up";
      else if (st.instances < before)
        row.action = "scale-down";
    }
    row.instances = st.instances;
    row.health = health_score(double(st.instances), s.input_rate, s.queue_size,
                              cfg.params)
                     .value_or(1.0);
    trace.push_back(row);
  }
  return trace;
}

}  // namespace ads
