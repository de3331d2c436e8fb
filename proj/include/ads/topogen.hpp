#pragma once
#include <string>

#include "ads/banditnet.hpp"
#include "ads/overlay.hpp"
#include "ads/sim.hpp"

namespace ads {

// Lossy-network generators. Per link the expected delay (base/theta) is drawn
// from [delay_min, delay_max] ms and theta from [theta_lo, theta_hi]. grid-road
// splits the range into road classes (see below); ring/random draw uniformly.
struct GraphGenParams {
  std::string kind = "grid-road";  // grid-road | ring | random
  int nodes = 25;
  int links = 32;
  double delay_min_ms = 50.0;
  double delay_max_ms = 250.0;
  double theta_lo = 0.5;
  double theta_hi = 0.95;
  double collector_frac = 0.2;  // grid-road: share of fast-entry side roads
};

// grid-road: g x g road mesh (right/down/diagonal steps), corner to corner,
// pruned/resampled until exactly `links` links all sit on a source->sink path.
// One arterial route (fastest delay band) always connects source to sink;
// side streets are slow, except a collector_frac share that starts fast but
// still feeds the slow mesh.
NetGraph gen_graph(const GraphGenParams& p, uint64_t seed);

// Physical deployment: uniform positions on a square, grid-partitioned zones,
// integer capacities in [1, 16].
EdgeTopology gen_edge_topology(int nodes, int zones, uint64_t seed,
                               double area_side = 100.0);

}  // namespace ads
