#pragma once

// Algorithm: a classical bitstring walks gate by gate; monomial gates update
// it deterministically, non-monomial gates draw the successor inside the
// active block with probabilities |amp|^2 / p_block from the amplitude
// oracle. The chain's marginal at every step equals the circuit's
// measurement distribution.

#include <atomic>
#include <functional>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <thread>
#include <unordered_map>

#include "pwsim/amplitude_oracle.hpp"
#include "pwsim/rng.hpp"

namespace pwsim {

struct SampleRecord {
  Bits bits;
  uint64_t seed = 0;
  uint64_t oracle_calls = 0;  // amplitudes requested
  std::optional<double> energy;
};

inline uint64_t derived_seed(uint64_t master_seed, uint64_t k) {
  return splitmix64_mix(master_seed + k * 0x9e3779b97f4a7c15ULL);
}

namespace sampler_detail {

// Concurrent memo of normalized within-block cumulative probabilities,
// keyed by (gate position, full state). Enabled for n <= 32; entries are
// capped, after which lookups continue but inserts stop.
class BlockMemo {
 public:
  static constexpr size_t kMaxBlock = 4;
  struct Value {
    std::array<double, kMaxBlock> cum;
    uint8_t size = 0;
  };

  explicit BlockMemo(size_t cap = 1'500'000) : cap_(cap) {}

  bool lookup(uint64_t key, Value& out) const {
    auto& sh = shards_[shard_of(key)];
    std::shared_lock lock(sh.mu);
    const auto it = sh.map.find(key);
    if (it == sh.map.end()) return false;
    out = it->second;
    return true;
  }

  void insert(uint64_t key, const Value& v) {
    if (entries_.load(std::memory_order_relaxed) >= cap_) return;
    auto& sh = shards_[shard_of(key)];
    std::unique_lock lock(sh.mu);
    if (sh.map.emplace(key, v).second)
      entries_.fetch_add(1, std::memory_order_relaxed);
  }

 private:
  static size_t shard_of(uint64_t key) {
    return (key * 0x9e3779b97f4a7c15ULL) >> 60;
  }
  struct Shard {
    mutable std::shared_mutex mu;
    std::unordered_map<uint64_t, Value> map;
  };
  std::array<Shard, 16> shards_;
  std::atomic<size_t> entries_{0};
  size_t cap_;
};

inline void write_label(Bits& s, const std::vector<uint32_t>& targets,
                        uint32_t label) {
  const size_t m = targets.size();
  for (size_t j = 0; j < m; ++j) s[targets[j]] = (label >> (m - 1 - j)) & 1;
}

}  // namespace sampler_detail

// Single chain step for the prefix whose last gate is active. Returns the
// number of amplitudes requested.
inline uint64_t update_state_with(const AmplitudeOracle& oracle, size_t t,
                                  Bits& s, Rng& rng,
                                  sampler_detail::BlockMemo* memo = nullptr) {
  const Gate& g = oracle.circuit().gate(t - 1);
  switch (g.kind()) {
    case GateKind::Diagonal:
      return 0;
    case GateKind::Monomial: {
      const uint32_t local = g.local_label(s);
      sampler_detail::write_label(s, g.targets(), g.cls().sigma[local]);
      return 0;
    }
    case GateKind::General:
      break;
  }
  const uint32_t local = g.local_label(s);
  const auto& block = g.block_of(local);
  if (block.size() == 1) return 0;

  const bool memoable = memo != nullptr && oracle.n_qubits() <= 32 &&
                        block.size() <= sampler_detail::BlockMemo::kMaxBlock;
  const double u = rng.uniform();
  uint32_t chosen = block.back();
  uint64_t key = 0;
  sampler_detail::BlockMemo::Value val;
  bool have = false;
  if (memoable) {
    key = (uint64_t{t} << 32) | bits_to_index(s);
    have = memo->lookup(key, val);
  }
  if (!have) {
    cplx amps[64];
    oracle.block_amps(t, s, block.data(), block.size(), amps);
    double mass = 0.0;
    for (size_t i = 0; i < block.size(); ++i) mass += std::norm(amps[i]);
    if (mass <= 1e-300)
      throw ZeroMassBlock("zero-mass block at position " + std::to_string(t));
    double acc = 0.0;
    bool done = false;
    for (size_t i = 0; i < block.size(); ++i) {
      acc += std::norm(amps[i]) / mass;
      if (memoable) val.cum[i] = acc;
      if (!done && u < acc) {
        chosen = block[i];
        done = true;
      }
    }
    if (memoable) {
      val.size = static_cast<uint8_t>(block.size());
      memo->insert(key, val);
    }
  } else {
    for (size_t i = 0; i < block.size(); ++i)
      if (u < val.cum[i]) {
        chosen = block[i];
        break;
      }
  }
  sampler_detail::write_label(s, g.targets(), chosen);
  return block.size();
}

// One-shot form matching the per-operation contract; the last gate of
// `prefix` is the active gate.
inline Bits update_state(const Circuit& prefix, Bits s, Rng& rng) {
  if (prefix.size() == 0) throw InvalidParams("empty prefix");
  AmplitudeOracle oracle(prefix);
  update_state_with(oracle, prefix.size(), s, rng);
  return s;
}

class Sampler {
 public:
  explicit Sampler(Circuit c, OracleOptions opt = OracleOptions{})
      : oracle_(std::make_shared<AmplitudeOracle>(std::move(c), opt)) {}
  explicit Sampler(std::shared_ptr<const AmplitudeOracle> oracle)
      : oracle_(std::move(oracle)) {}

  const Circuit& circuit() const { return oracle_->circuit(); }
  const AmplitudeOracle& oracle() const { return *oracle_; }

  SampleRecord sample(uint64_t seed) const {
    Rng rng(seed);
    SampleRecord rec;
    rec.seed = seed;
    rec.bits.assign(circuit().n_qubits(), 0);
    for (size_t t = 1; t <= circuit().size(); ++t)
      rec.oracle_calls += update_state_with(*oracle_, t, rec.bits, rng, &memo_);
    return rec;
  }

  // Samples indices [begin, end); sink(index, record) may be called from any
  // worker, exactly once per index, with records independent of the worker
  // count.
  void sample_range(size_t begin, size_t end, uint64_t master_seed,
                    int workers,
                    const std::function<void(size_t, SampleRecord&&)>& sink) const {
    const size_t count = end - begin;
    if (count == 0) return;
    if (workers <= 0)
      workers = static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, 64));
    if (workers == 1 || count < 32) {
      for (size_t k = begin; k < end; ++k)
        sink(k, sample(derived_seed(master_seed, k)));
      return;
    }
    std::atomic<size_t> next{begin};
    const size_t chunk = std::max<size_t>(1, count / (8 * workers));
    auto work = [&] {
      for (;;) {
        const size_t lo = next.fetch_add(chunk);
        if (lo >= end) return;
        const size_t hi = std::min(end, lo + chunk);
        for (size_t k = lo; k < hi; ++k)
          sink(k, sample(derived_seed(master_seed, k)));
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
  }

  std::vector<SampleRecord> sample_batch(size_t K, uint64_t master_seed,
                                         int workers = 1) const {
    std::vector<SampleRecord> out(K);
    // each index is written by exactly one worker
    sample_range(0, K, master_seed, workers,
                 [&](size_t k, SampleRecord&& rec) { out[k] = std::move(rec); });
    return out;
  }

 private:
  std::shared_ptr<const AmplitudeOracle> oracle_;
  mutable sampler_detail::BlockMemo memo_;
};

inline SampleRecord sample(const Circuit& c, uint64_t seed) {
  return Sampler(c).sample(seed);
}

// --- Sample sinks ---------------------------------------------------------

inline void write_sample_jsonl(std::ostream& os, const SampleRecord& rec) {
  os << "{\"bits\": \"" << bits_to_string(rec.bits) << "\", \"seed\": "
     << rec.seed << ", \"oracle_calls\": " << rec.oracle_calls << "}\n";
}

// Compact binary record: n bits packed little-endian.
inline void write_sample_bin(std::ostream& os, const SampleRecord& rec) {
  const auto packed = bits_pack(rec.bits);
  os.write(reinterpret_cast<const char*>(packed.data()),
           static_cast<std::streamsize>(packed.size()));
}

}  // namespace pwsim
