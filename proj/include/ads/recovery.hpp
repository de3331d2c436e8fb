#pragma once
#include <cstdint>
#include <vector>

#include "ads/overlay.hpp"
#include "ads/sim.hpp"

namespace ads {

// Systematic Reed-Solomon over GF(2^8) (polynomial 0x11d), Vandermonde rows
// normalized so the first m fragments are the plain data blocks. Any m of the
// n = m+k fragments reconstruct the state; n is capped at 255.
struct ErasureConfig {
  int m = 4;  // data fragments
  int k = 2;  // parity fragments
  int n() const { return m + k; }
};

struct Fragment {
  uint64_t original_len = 0;
  uint32_t epoch = 0;
  uint8_t index = 0;
  std::vector<uint8_t> block;
};

constexpr size_t kFragmentHeaderBytes = 13;  // 8B length + 4B epoch + 1B index

std::vector<Fragment> erasure_encode(const std::vector<uint8_t>& state,
                                     const ErasureConfig& cfg, uint32_t epoch);
std::vector<uint8_t> erasure_decode(const std::vector<Fragment>& fragments,
                                    const ErasureConfig& cfg);

std::vector<uint8_t> serialize_fragment(const Fragment& f);
Fragment parse_fragment(const std::vector<uint8_t>& bytes);

// Checkpoint placement: fragments go to the n physically nearest live leaf
// members of the owner; re-encoded every interval on the event queue.
struct CheckpointPlan {
  NodeId owner;
  ErasureConfig cfg;
  uint64_t state_bytes = 0;
  uint64_t interval_ms = 0;
  std::vector<NodeId> holders;        // n distinct leaf members
  std::vector<NodeId> leaf_snapshot;  // owner's leaf set at plan time
  uint32_t epochs = 0;
};

CheckpointPlan make_checkpoint_plan(const Overlay& overlay, NodeId owner,
                                    uint64_t state_bytes,
                                    const ErasureConfig& cfg,
                                    uint64_t interval_ms);
void start_checkpoints(EventQueue& queue, CheckpointPlan* plan);

// Closed-form recovery cost: m*B/(m+k-1) bytes of per-peer upload pressure,
// B defaulting to the checkpointed state size, over the peer link rate.
double recovery_model_ms(int m, int k, double upload_bytes,
                         double bytes_per_ms);

struct RecoveryReport {
  bool success = false;
  bool stateless_restart = false;  // fell back to restart without state
  NodeId restart_node;
  uint32_t fragments_fetched = 0;
  double sim_time_ms = 0.0;    // parallel fetch, max over the m transfers
  double model_time_ms = 0.0;
};

// Restart on the nearest live leaf member; fetch the m nearest live fragments
// in parallel. More dead holders than parity -> unrecoverable, flagged as a
// stateless restart. `stateless` ops skip the fetch entirely.
RecoveryReport recover(const Overlay& overlay, const CheckpointPlan& plan,
                       bool stateless = false);

}  // namespace ads
