#pragma once

// Experiment-layer analysis: energy histograms, pseudo-Boltzmann beta fits,
// ground-state probability estimation with a hit-count stopping rule, and
// the best-of-batch comparison harness.

#include <chrono>
#include <unordered_map>

#include "pwsim/baselines.hpp"
#include "pwsim/noise.hpp"
#include "pwsim/qaoa.hpp"
#include "pwsim/sampler.hpp"
#include "pwsim/stats.hpp"

namespace pwsim {

struct EnergyHistogram {
  std::vector<double> bin_edges;  // size bins + 1
  std::vector<uint64_t> counts;
  uint64_t total = 0;

  std::vector<double> normalization() const {
    std::vector<double> f(counts.size());
    for (size_t i = 0; i < counts.size(); ++i)
      f[i] = total ? static_cast<double>(counts[i]) /
                         static_cast<double>(total)
                   : 0.0;
    return f;
  }
};

inline EnergyHistogram make_histogram(const std::vector<double>& energies,
                                      size_t bins) {
  if (energies.empty() || bins < 1) throw InvalidParams("histogram inputs");
  EnergyHistogram h;
  double lo = energies[0], hi = energies[0];
  for (double e : energies) {
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  if (hi == lo) hi = lo + 1.0;
  h.bin_edges.resize(bins + 1);
  for (size_t i = 0; i <= bins; ++i)
    h.bin_edges[i] = lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double e : energies) {
    size_t b = static_cast<size_t>((e - lo) / (hi - lo) *
                                   static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    h.counts[b] += 1;
    h.total += 1;
  }
  return h;
}

// Aggregated bitstring frequencies; states are packed indices (n <= 64).
struct StateCounts {
  size_t n = 0;
  uint64_t total = 0;
  std::unordered_map<uint64_t, uint64_t> counts;

  void add(const Bits& bits) {
    counts[bits_to_index(bits)] += 1;
    total += 1;
  }
  void add_index(uint64_t idx) {
    counts[idx] += 1;
    total += 1;
  }
};

struct BetaFit {
  double beta = 0.0;
  double window_lo = 0.0, window_hi = 0.0;
  double r2 = 0.0;
  size_t distinct_states = 0;
};

// Restricts to the low-energy tail: the observed states whose energies lie
// below the `window_quantile` of the distinct observed energies (the states
// themselves, not the sample multiset, so a dominant ground state cannot
// collapse the window). Aggregates duplicate bitstrings and fits
// log(frequency) against energy weighted by counts; beta is minus the slope.
inline BetaFit fit_beta(const StateCounts& sc, const IsingModel& model,
                        double window_quantile = 0.25) {
  if (sc.total == 0) throw InvalidParams("no samples");
  if (!(window_quantile > 0.0 && window_quantile <= 0.5))
    throw ParameterOutOfRange("window quantile outside (0, 0.5]");
  struct Row {
    double e;
    uint64_t c;
    uint64_t state;
  };
  std::vector<Row> rows;
  rows.reserve(sc.counts.size());
  for (const auto& [state, count] : sc.counts)
    rows.push_back({energy(model, bits_from_index(state, sc.n)), count, state});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.e != b.e ? a.e < b.e : a.state < b.state;
  });
  const size_t want = std::max<size_t>(
      1, static_cast<size_t>(window_quantile *
                             static_cast<double>(rows.size())));
  const double threshold = rows[std::min(want, rows.size()) - 1].e;
  std::vector<double> xs, ys, ws;
  std::vector<double> distinct_energies;
  for (const auto& r : rows) {
    if (r.e > threshold) break;
    xs.push_back(r.e);
    ys.push_back(std::log(static_cast<double>(r.c) /
                          static_cast<double>(sc.total)));
    ws.push_back(static_cast<double>(r.c));
    if (distinct_energies.empty() ||
        std::abs(distinct_energies.back() - r.e) > 1e-12)
      distinct_energies.push_back(r.e);
  }
  if (distinct_energies.size() < 5)
    throw InsufficientDistinctStates(
        "beta fit needs >= 5 distinct energy levels in the window");
  const LinFit f = weighted_linfit(xs, ys, ws);
  BetaFit out;
  out.beta = -f.slope;
  out.window_lo = xs.front();
  out.window_hi = threshold;
  out.r2 = f.r2;
  out.distinct_states = xs.size();
  return out;
}

inline BetaFit fit_beta(const std::vector<SampleRecord>& samples,
                        const IsingModel& model,
                        double window_quantile = 0.25) {
  StateCounts sc;
  sc.n = model.n();
  for (const auto& r : samples) sc.add(r.bits);
  return fit_beta(sc, model, window_quantile);
}

// --- Ground-state probability ------------------------------------------------

struct GsProbEstimate {
  double estimate = 0.0;
  uint64_t hits = 0;
  uint64_t samples_used = 0;
  bool truncated = false;  // the sample cap stopped the stream
};

// Consumes energies in stream order until the ground energy occurred
// `min_hits` times or `sample_cap` draws were used.
class GsProbAccumulator {
 public:
  GsProbAccumulator(double gs_energy, uint64_t min_hits = 10,
                    uint64_t sample_cap = 100'000'000)
      : gs_energy_(gs_energy), min_hits_(min_hits), cap_(sample_cap) {}

  // returns false once the stopping rule fired
  bool add(double e) {
    if (done()) return false;
    ++used_;
    if (std::abs(e - gs_energy_) <= 1e-9) ++hits_;
    return !done();
  }

  bool done() const { return hits_ >= min_hits_ || used_ >= cap_; }

  GsProbEstimate result() const {
    GsProbEstimate r;
    r.hits = hits_;
    r.samples_used = used_;
    r.estimate = used_ ? static_cast<double>(hits_) /
                             static_cast<double>(used_)
                       : 0.0;
    r.truncated = hits_ < min_hits_;
    return r;
  }

 private:
  double gs_energy_;
  uint64_t min_hits_, cap_;
  uint64_t hits_ = 0, used_ = 0;
};

// Deterministic chunked driver over an index-seeded sampler.
template <typename SampleEnergyFn>
GsProbEstimate gs_probability(SampleEnergyFn&& energy_of_index,
                              double gs_energy, uint64_t min_hits = 10,
                              uint64_t sample_cap = 100'000'000) {
  GsProbAccumulator acc(gs_energy, min_hits, sample_cap);
  for (uint64_t k = 0; !acc.done(); ++k) acc.add(energy_of_index(k));
  return acc.result();
}

// --- Best-of-batch comparison -------------------------------------------------

struct AlgoSpec {
  enum class Kind { Qaoa, NoisyQaoa, Hastings, Uniform, Anneal };
  Kind kind = Kind::Uniform;
  std::string name;
  QaoaParams qaoa;        // Qaoa / NoisyQaoa
  NoiseModel noise;       // NoisyQaoa
  size_t hastings_steps = 1;
  double hastings_c = -0.3;  // negative: minimize
  size_t anneal_sweeps = 100;
};

struct BestEnergyDistribution {
  std::string algorithm;
  std::vector<double> best_energies;  // one per repetition
};

inline BestEnergyDistribution run_best_of_batch(
    const IsingModel& model, const AlgoSpec& spec, size_t repetitions,
    size_t batch, uint64_t master_seed, int workers = 1) {
  BestEnergyDistribution out;
  out.algorithm = spec.name;
  out.best_energies.assign(repetitions, 0.0);
  const size_t total = repetitions * batch;
  std::vector<double> energies(total);

  auto reduce = [&] {
    for (size_t rep = 0; rep < repetitions; ++rep) {
      double best = energies[rep * batch];
      for (size_t i = 1; i < batch; ++i)
        best = std::min(best, energies[rep * batch + i]);
      out.best_energies[rep] = best;
    }
  };

  switch (spec.kind) {
    case AlgoSpec::Kind::Qaoa: {
      Sampler sampler(build_qaoa(model, spec.qaoa));
      sampler.sample_range(0, total, master_seed, workers,
                           [&](size_t k, SampleRecord&& rec) {
                             energies[k] = energy(model, rec.bits);
                           });
      break;
    }
    case AlgoSpec::Kind::NoisyQaoa: {
      NoisySampler sampler(
          insert_noise(build_qaoa(model, spec.qaoa), spec.noise));
      sampler.sample_range(0, total, master_seed, workers,
                           [&](size_t k, SampleRecord&& rec) {
                             energies[k] = energy(model, rec.bits);
                           });
      break;
    }
    case AlgoSpec::Kind::Hastings: {
      for (size_t k = 0; k < total; ++k) {
        Rng rng = Rng::stream(master_seed, k);
        energies[k] =
            energy(model, hastings(model, spec.hastings_steps,
                                   spec.hastings_c, rng));
      }
      break;
    }
    case AlgoSpec::Kind::Uniform: {
      for (size_t k = 0; k < total; ++k) {
        Rng rng = Rng::stream(master_seed, k);
        energies[k] = energy(model, uniform_sample(model.n(), rng));
      }
      break;
    }
    case AlgoSpec::Kind::Anneal: {
      const auto sched = geometric_beta_schedule(spec.anneal_sweeps);
      for (size_t k = 0; k < total; ++k) {
        Rng rng = Rng::stream(master_seed, k);
        energies[k] = energy(
            model, metropolis_anneal(model, spec.anneal_sweeps, sched, rng));
      }
      break;
    }
  }
  reduce();
  return out;
}

inline std::vector<BestEnergyDistribution> compare_experiment(
    const IsingModel& model, const std::vector<AlgoSpec>& algorithms,
    size_t repetitions = 4000, size_t batch = 100, uint64_t master_seed = 1,
    int workers = 1) {
  std::vector<BestEnergyDistribution> out;
  for (size_t a = 0; a < algorithms.size(); ++a)
    out.push_back(run_best_of_batch(model, algorithms[a], repetitions, batch,
                                    derived_seed(master_seed, a), workers));
  return out;
}

// --- Timing sweep -------------------------------------------------------------

struct TimingRow {
  std::string topology;
  size_t n = 0;
  size_t instances = 0;
  size_t batch = 0;
  double mean_seconds = 0.0;
  double std_seconds = 0.0;
};

inline TimingRow timing_sweep_cell(const std::string& topology,
                                   const std::vector<size_t>& params, size_t p,
                                   size_t batch, size_t instances,
                                   uint64_t master_seed,
                                   const NoiseModel* noise = nullptr,
                                   int workers = 1) {
  TimingRow row;
  row.topology = topology;
  row.instances = instances;
  row.batch = batch;
  std::vector<double> times;
  for (size_t inst = 0; inst < instances; ++inst) {
    const uint64_t seed = derived_seed(master_seed, inst);
    ProblemGraph g = build_topology(topology, params, seed);
    row.n = g.n;
    IsingModel model = gaussian_ising(std::move(g), seed);
    Circuit circ = build_qaoa(model, default_schedule(p));
    const auto t0 = std::chrono::steady_clock::now();
    if (noise) {
      NoisySampler sampler(insert_noise(circ, *noise));
      sampler.sample_batch(batch, seed, workers);
    } else {
      Sampler sampler(circ);
      sampler.sample_batch(batch, seed, workers);
    }
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  row.mean_seconds = mean_of(times);
  row.std_seconds = stddev_of(times);
  return row;
}

}  // namespace pwsim
