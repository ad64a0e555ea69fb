#pragma once

// Noisy sampling without growing the tensor network: channel events draw a
// Kraus index from the classical state alone, antidiagonal factors flip a
// pending X frame, and the residual diagonal factors fuse onto the live legs
// of the noiseless network as per-chain weights. Gates added after an X flip
// are stored conjugated (X A X), tracked as a per-gate mask.

#include <unordered_map>

#include "pwsim/noise_model.hpp"
#include "pwsim/sampler.hpp"

namespace pwsim {

namespace noise_detail {

struct ChannelTables {
  // probs[s * k + i] = Pr(i | s); cumulative in i for the draw
  std::vector<double> cum;
  size_t k = 0;
  size_t dim = 0;
  LsmDecomposition lsm;
};

struct ChainScratch {
  Bits s, x;
  std::vector<uint8_t> conj;  // per gate
  std::vector<std::array<cplx, 2>> weight;
  std::vector<uint8_t> weight_set;
  std::vector<LegId> dirty;

  void reset(size_t n, size_t T, uint32_t legs) {
    s.assign(n, 0);
    x.assign(n, 0);
    conj.assign(T, 0);
    if (weight.size() < legs) {
      weight.resize(legs, {cplx(1.0), cplx(1.0)});
      weight_set.resize(legs, 0);
    }
    for (LegId l : dirty) {
      weight[l] = {cplx(1.0), cplx(1.0)};
      weight_set[l] = 0;
    }
    dirty.clear();
  }

  void fuse(LegId leg, cplx d0, cplx d1) {
    if (!weight_set[leg]) {
      weight_set[leg] = 1;
      weight[leg] = {d0, d1};
      dirty.push_back(leg);
    } else {
      weight[leg][0] *= d0;
      weight[leg][1] *= d1;
    }
  }
};

inline ChainScratch& chain_scratch() {
  thread_local ChainScratch s;
  return s;
}

}  // namespace noise_detail

// Observer invoked before every stochastic update while sampling noisily:
// receives the accumulated circuit C'' (original gates conjugated by the
// X frame, plus fused 1-qubit diagonal noise factors), the noiseless prefix
// length, and the open qubits of the active gate.
using NoisyStepObserver =
    std::function<void(const Circuit& cpp, size_t t, const std::vector<uint8_t>& open_qubits)>;

struct NoisySampleStats {
  uint64_t update_calls = 0;   // amplitudes requested by state updates
  uint64_t channel_calls = 0;  // amplitudes requested by channel events
  uint64_t channel_events = 0;
};

class NoisySampler {
 public:
  explicit NoisySampler(NoisyCircuit nc, OracleOptions opt = OracleOptions{})
      : nc_(std::move(nc)),
        oracle_(std::make_shared<AmplitudeOracle>(nc_.unitary_circuit(), opt)) {
    for (const auto& ev : nc_.events) {
      const auto* ce = std::get_if<ChannelEvent>(&ev);
      if (!ce) continue;
      const KrausChannel* ch = ce->channel.get();
      if (tables_.count(ch)) continue;
      auto dec = lsm_decompose(*ch);
      if (!dec)
        throw NonLSMChannel("channel " + ch->tag +
                            " is not local-submonomial");
      noise_detail::ChannelTables tab;
      tab.lsm = std::move(*dec);
      tab.k = ch->operators.size();
      tab.dim = ch->operators.front().dim;
      tab.cum.resize(tab.dim * tab.k);
      for (size_t s = 0; s < tab.dim; ++s) {
        double acc = 0.0;
        for (size_t i = 0; i < tab.k; ++i) {
          double p = 0.0;
          for (size_t r = 0; r < tab.dim; ++r)
            p += std::norm(ch->operators[i].at(r, s));
          acc += p;
          tab.cum[s * tab.k + i] = acc;
        }
      }
      tables_.emplace(ch, std::move(tab));
    }
  }

  const NoisyCircuit& noisy_circuit() const { return nc_; }
  const AmplitudeOracle& oracle() const { return *oracle_; }

  SampleRecord sample(uint64_t seed) const {
    return sample_detailed(seed, nullptr, nullptr);
  }

  SampleRecord sample_detailed(uint64_t seed, NoisySampleStats* stats,
                               const NoisyStepObserver* observer) const {
    Rng rng(seed);
    SampleRecord rec;
    rec.seed = seed;
    const size_t n = nc_.n_qubits;
    const size_t T = oracle_->circuit().size();
    auto& cs = noise_detail::chain_scratch();
    cs.reset(n, T, oracle_->leg_count());

    // explicit C'' is maintained only when an observer wants to inspect it
    std::optional<Circuit> cpp;
    if (observer) cpp.emplace(n);

    ChainMods mods;
    mods.gate_conj = cs.conj.data();
    mods.leg_has_weight = cs.weight_set.data();
    mods.leg_weight = cs.weight.data();

    size_t t = 0;  // unitary gates consumed
    for (const auto& ev : nc_.events) {
      if (const Gate* g = std::get_if<Gate>(&ev)) {
        uint8_t c = 0;
        const size_t m = g->arity();
        for (size_t j = 0; j < m; ++j)
          if (cs.x[g->targets()[j]]) c |= uint8_t{1} << j;
        cs.conj[t] = c;
        ++t;
        if (observer) cpp->push_back(propagate_x(cs.x, *g));
        if (g->kind() == GateKind::Diagonal) continue;
        // conjugated classification: sigma'(v) = c~ ^ sigma(v ^ c~) with the
        // mask expressed in local-label bit order
        uint32_t cl = 0;
        for (size_t j = 0; j < m; ++j)
          if ((c >> j) & 1) cl |= uint32_t{1} << (m - 1 - j);
        const uint32_t local = g->local_label(cs.s);
        if (g->kind() == GateKind::Monomial) {
          sampler_detail::write_label(cs.s, g->targets(),
                                      cl ^ g->cls().sigma[local ^ cl]);
          continue;
        }
        const auto& base_block = g->block_of(local ^ cl);
        if (base_block.size() == 1) continue;
        uint32_t labels[64];
        for (size_t i = 0; i < base_block.size(); ++i)
          labels[i] = base_block[i] ^ cl;
        std::sort(labels, labels + base_block.size());
        if (observer) {
          std::vector<uint8_t> open(n, 0);
          for (size_t j = 0; j < m; ++j)
            if (!g->diagonal_on(j)) open[g->targets()[j]] = 1;
          (*observer)(*cpp, t, open);
        }
        cplx amps[64];
        oracle_->block_amps(t, cs.s, labels, base_block.size(), amps, &mods);
        rec.oracle_calls += base_block.size();
        if (stats) stats->update_calls += base_block.size();
        double mass = 0.0;
        for (size_t i = 0; i < base_block.size(); ++i)
          mass += std::norm(amps[i]);
        if (mass <= 1e-300)
          throw ZeroMassBlock("zero-mass block at position " +
                              std::to_string(t));
        const double u = rng.uniform();
        uint32_t chosen = labels[base_block.size() - 1];
        double acc = 0.0;
        for (size_t i = 0; i < base_block.size(); ++i) {
          acc += std::norm(amps[i]) / mass;
          if (u < acc) {
            chosen = labels[i];
            break;
          }
        }
        sampler_detail::write_label(cs.s, g->targets(), chosen);
      } else {
        const auto& ce = std::get<ChannelEvent>(ev);
        if (stats) stats->channel_events += 1;
        const auto& tab = tables_.at(ce.channel.get());
        const size_t m = ce.targets.size();
        uint32_t phys = 0;
        for (size_t j = 0; j < m; ++j) {
          const uint32_t q = ce.targets[j];
          phys = (phys << 1) | static_cast<uint32_t>(cs.s[q] ^ cs.x[q]);
        }
        const double u = rng.uniform();
        const double* cum = tab.cum.data() + phys * tab.k;
        size_t idx = tab.k - 1;
        for (size_t i = 0; i < tab.k; ++i)
          if (u < cum[i]) {
            idx = i;
            break;
          }
        const auto& factors = tab.lsm.factors[idx];
        for (size_t j = 0; j < m; ++j) {
          const uint32_t q = ce.targets[j];
          const Factor2& f = factors[j];
          cplx d0, d1;
          if (f.antidiagonal) {
            cs.x[q] ^= 1;
            d0 = f.v0;  // M * X = diag(M01, M10)
            d1 = f.v1;
          } else {
            d0 = f.v0;
            d1 = f.v1;
          }
          if (cs.x[q]) std::swap(d0, d1);  // propagate through the X frame
          cs.fuse(oracle_->live_leg(t, q), d0, d1);
          if (observer)
            cpp->push_back(Gate(CMat(2, {d0, 0, 0, d1}), {q}, "noise_diag",
                                /*check_unitary=*/false));
        }
      }
    }
    rec.bits.resize(n);
    for (size_t q = 0; q < n; ++q) rec.bits[q] = cs.s[q] ^ cs.x[q];
    rec.bits = apply_readout_error(std::move(rec.bits), nc_.p_readout, rng);
    return rec;
  }

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
    sample_range(0, K, master_seed, workers,
                 [&](size_t k, SampleRecord&& rec) { out[k] = std::move(rec); });
    return out;
  }

 private:
  NoisyCircuit nc_;
  std::shared_ptr<const AmplitudeOracle> oracle_;
  std::unordered_map<const KrausChannel*, noise_detail::ChannelTables> tables_;
};

inline SampleRecord noisy_sample(const NoisyCircuit& nc, uint64_t seed) {
  return NoisySampler(nc).sample(seed);
}

}  // namespace pwsim
