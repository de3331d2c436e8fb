#include "ads/recovery.hpp"

#include <algorithm>
#include <cstring>

#include "ads/error.hpp"

namespace ads {

namespace gf {

// GF(2^8) with primitive polynomial x^8+x^4+x^3+x^2+1 (0x11d), generator 2.
struct Tables {
  uint8_t exp[512];
  uint8_t log[256];
  Tables() {
    int x = 1;
    for (int i = 0; i < 255; i++) {
      exp[i] = uint8_t(x);
      log[x] = uint8_t(i);
      x <<= 1;
      if (x & 0x100) x ^= 0x11d;
    }
    for (int i = 255; i < 512; i++) exp[i] = exp[i - 255];
    log[0] = 0;
  }
};
static const Tables T;

inline uint8_t mul(uint8_t a, uint8_t b) {
  if (a == 0 || b == 0) return 0;
  return T.exp[T.log[a] + T.log[b]];
}

inline uint8_t inv(uint8_t a) {
  if (a == 0) throw InvariantError("gf256: inverse of zero");
  return T.exp[255 - T.log[a]];
}

inline uint8_t pow(uint8_t a, int e) {
  if (e == 0) return 1;
  if (a == 0) return 0;
  return T.exp[(T.log[a] * e) % 255];
}

// In-place Gauss-Jordan inverse of a square matrix.
std::vector<uint8_t> invert(std::vector<uint8_t> a, int n) {
  std::vector<uint8_t> inv_m(n * n, 0);
  for (int i = 0; i < n; i++) inv_m[i * n + i] = 1;
  for (int col = 0; col < n; col++) {
    int pivot = -1;
    for (int r = col; r < n; r++)
      if (a[r * n + col] != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) throw InvariantError("gf256: singular decode matrix");
    if (pivot != col)
      for (int c = 0; c < n; c++) {
        std::swap(a[pivot * n + c], a[col * n + c]);
        std::swap(inv_m[pivot * n + c], inv_m[col * n + c]);
      }
    uint8_t piv_inv = inv(a[col * n + col]);
    for (int c = 0; c < n; c++) {
      a[col * n + c] = mul(a[col * n + c], piv_inv);
      inv_m[col * n + c] = mul(inv_m[col * n + c], piv_inv);
    }
    for (int r = 0; r < n; r++) {
      if (r == col || a[r * n + col] == 0) continue;
      uint8_t f = a[r * n + col];
      for (int c = 0; c < n; c++) {
        a[r * n + c] ^= mul(f, a[col * n + c]);
        inv_m[r * n + c] ^= mul(f, inv_m[col * n + c]);
      }
    }
  }
  return inv_m;
}

// y += coeff * x over a whole block, via a 256-entry product table.
void mul_add(uint8_t* y, const uint8_t* x, size_t len, uint8_t coeff) {
  if (coeff == 0) return;
  uint8_t tbl[256];
  for (int b = 0; b < 256; b++) tbl[b] = mul(coeff, uint8_t(b));
  for (size_t i = 0; i < len; i++) y[i] ^= tbl[x[i]];
}

}  // namespace gf

// Row i of the n x m encode matrix. Rows 0..m-1 are the identity; parity rows
// come from a Vandermonde matrix right-multiplied by the inverse of its top
// m x m block, which keeps every m-row subset invertible.
static std::vector<uint8_t> encode_matrix(int m, int n) {
  std::vector<uint8_t> v(n * m);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < m; j++)
      v[i * m + j] = gf::pow(uint8_t(i), j);  // 0^0 = 1
  std::vector<uint8_t> top(v.begin(), v.begin() + m * m);
  std::vector<uint8_t> top_inv = gf::invert(std::move(top), m);
  std::vector<uint8_t> e(n * m, 0);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < m; j++) {
      uint8_t acc = 0;
      for (int t = 0; t < m; t++)
        acc ^= gf::mul(v[i * m + t], top_inv[t * m + j]);
      e[i * m + j] = acc;
    }
  return e;
}

static void check_cfg(const ErasureConfig& cfg) {
  if (cfg.m < 1 || cfg.k < 1)
    throw ConfigError("erasure: m and k must be positive");
  if (cfg.n() > 255) throw ConfigError("erasure: m+k exceeds field size 255");
}

std::vector<Fragment> erasure_encode(const std::vector<uint8_t>& state,
                                     const ErasureConfig& cfg, uint32_t epoch) {
  check_cfg(cfg);
  if (state.empty()) throw ConfigError("erasure: empty state");
  int m = cfg.m, n = cfg.n();
  size_t block = (state.size() + m - 1) / m;
  std::vector<uint8_t> enc = encode_matrix(m, n);
  std::vector<Fragment> out(n);
  for (int i = 0; i < n; i++) {
    out[i].original_len = state.size();
    out[i].epoch = epoch;
    out[i].index = uint8_t(i);
    out[i].block.assign(block, 0);
  }
  for (int j = 0; j < m; j++) {
    size_t off = size_t(j) * block;
    size_t len = off < state.size() ? std::min(block, state.size() - off) : 0;
    if (len) std::memcpy(out[j].block.data(), state.data() + off, len);
  }
  for (int i = m; i < n; i++)
    for (int j = 0; j < m; j++)
      gf::mul_add(out[i].block.data(), out[j].block.data(), block,
                  enc[i * m + j]);
  return out;
}

std::vector<uint8_t> erasure_decode(const std::vector<Fragment>& fragments,
                                    const ErasureConfig& cfg) {
  check_cfg(cfg);
  int m = cfg.m, n = cfg.n();
  if (int(fragments.size()) < m)
    throw InvariantError("erasure: insufficient fragments");
  // Deterministic pick: lowest m distinct indices.
  std::vector<const Fragment*> use;
  std::vector<const Fragment*> sorted;
  for (const auto& f : fragments) sorted.push_back(&f);
  std::sort(sorted.begin(), sorted.end(),
            [](const Fragment* a, const Fragment* b) { return a->index < b->index; });
  for (const Fragment* f : sorted) {
    if (f->index >= n) throw InvariantError("erasure: fragment index out of range");
    if (!use.empty() && use.back()->index == f->index) continue;
    use.push_back(f);
    if (int(use.size()) == m) break;
  }
  if (int(use.size()) < m)
    throw InvariantError("erasure: insufficient distinct fragments");
  uint64_t len = use[0]->original_len;
  uint32_t epoch = use[0]->epoch;
  size_t block = use[0]->block.size();
  for (const Fragment* f : use) {
    if (f->epoch != epoch) throw InvariantError("erasure: mixed-epoch fragments");
    if (f->original_len != len || f->block.size() != block)
      throw InvariantError("erasure: inconsistent fragment shape");
  }
  if (block != (len + m - 1) / m)
    throw InvariantError("erasure: block size mismatch");

  std::vector<uint8_t> enc = encode_matrix(m, n);
  std::vector<uint8_t> sub(m * m);
  for (int r = 0; r < m; r++)
    std::memcpy(&sub[r * m], &enc[use[r]->index * m], m);
  std::vector<uint8_t> inv = gf::invert(std::move(sub), m);

  std::vector<uint8_t> state(size_t(m) * block, 0);
  for (int j = 0; j < m; j++)
    for (int r = 0; r < m; r++)
      gf::mul_add(state.data() + size_t(j) * block, use[r]->block.data(), block,
                  inv[j * m + r]);
  state.resize(len);
  return state;
}

std::vector<uint8_t> serialize_fragment(const Fragment& f) {
  std::vector<uint8_t> out(kFragmentHeaderBytes + f.block.size());
  for (int i = 0; i < 8; i++) out[i] = uint8_t(f.original_len >> (8 * i));
  for (int i = 0; i < 4; i++) out[8 + i] = uint8_t(f.epoch >> (8 * i));
  out[12] = f.index;
  std::memcpy(out.data() + kFragmentHeaderBytes, f.block.data(),
              f.block.size());
  return out;
}

Fragment parse_fragment(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kFragmentHeaderBytes)
    throw InvariantError("fragment: truncated header");
  Fragment f;
  for (int i = 7; i >= 0; i--) f.original_len = (f.original_len << 8) | bytes[i];
  for (int i = 3; i >= 0; i--) f.epoch = (f.epoch << 8) | bytes[8 + i];
  f.index = bytes[12];
  f.block.assign(bytes.begin() + kFragmentHeaderBytes, bytes.end());
  return f;
}

CheckpointPlan make_checkpoint_plan(const Overlay& overlay, NodeId owner,
                                    uint64_t state_bytes,
                                    const ErasureConfig& cfg,
                                    uint64_t interval_ms) {
  check_cfg(cfg);
  if (state_bytes == 0) throw ConfigError("checkpoint: empty state");
  CheckpointPlan plan;
  plan.owner = owner;
  plan.cfg = cfg;
  plan.state_bytes = state_bytes;
  plan.interval_ms = interval_ms;
  plan.leaf_snapshot = overlay.leaf_members(owner);
  if (int(plan.leaf_snapshot.size()) < cfg.n())
    throw ConfigError("checkpoint: leaf set smaller than fragment count");
  plan.holders.assign(plan.leaf_snapshot.begin(),
                      plan.leaf_snapshot.begin() + cfg.n());
  return plan;
}

void start_checkpoints(EventQueue& queue, CheckpointPlan* plan) {
  if (plan->interval_ms == 0)
    throw ConfigError("checkpoint: zero interval");
  uint64_t at = queue.clock().now_ms + plan->interval_ms;
  queue.schedule(at, [&queue, plan]() {
    plan->epochs++;
    start_checkpoints(queue, plan);
  });
}

double recovery_model_ms(int m, int k, double upload_bytes,
                         double bytes_per_ms) {
  if (m < 1 || k < 1) throw std::domain_error("recovery model: m,k >= 1");
  return double(m) * upload_bytes / double(m + k - 1) / bytes_per_ms;
}

RecoveryReport recover(const Overlay& overlay, const CheckpointPlan& plan,
                       bool stateless) {
  RecoveryReport rep;
  rep.model_time_ms =
      recovery_model_ms(plan.cfg.m, plan.cfg.k, double(plan.state_bytes),
                        overlay.topo().bytes_per_ms());
  // Restart target: nearest live leaf member of the failed owner.
  bool placed = false;
  for (NodeId c : plan.leaf_snapshot) {
    if (overlay.is_live(c)) {
      rep.restart_node = c;
      placed = true;
      break;
    }
  }
  if (!placed) return rep;  // nowhere to restart

  if (stateless) {
    rep.success = true;
    rep.stateless_restart = true;
    rep.sim_time_ms = 0.0;
    return rep;
  }

  std::vector<NodeId> live_holders;
  for (NodeId h : plan.holders)
    if (overlay.is_live(h)) live_holders.push_back(h);
  if (int(live_holders.size()) < plan.cfg.m) {
    rep.stateless_restart = true;  // more than k holders gone
    return rep;
  }
  std::sort(live_holders.begin(), live_holders.end(),
            [&](NodeId a, NodeId b) {
              double ra = overlay.rtt_ms(rep.restart_node, a);
              double rb = overlay.rtt_ms(rep.restart_node, b);
              if (ra != rb) return ra < rb;
              return a.v < b.v;
            });
  size_t block = (plan.state_bytes + plan.cfg.m - 1) / plan.cfg.m;
  double frag_bytes = double(block + kFragmentHeaderBytes);
  double rate = overlay.topo().bytes_per_ms();
  for (int i = 0; i < plan.cfg.m; i++) {
    rep.fragments_fetched++;
    rep.sim_time_ms = std::max(rep.sim_time_ms, frag_bytes / rate);
  }
  rep.success = true;
  return rep;
}

}  // namespace ads
