#pragma once

#include <cmath>

#include "pwsim/problems.hpp"
#include "pwsim/rng.hpp"

namespace pwsim {

// Local update rule v_{t+1} = v_t + c * F_t with force F = 2 J v + h,
// starting from uniform +-1 entries. The sign of c selects maximization
// (c > 0) or minimization (c < 0) of the energy; output spins are the signs
// of the final entries, sign(0) -> +1.
inline Bits hastings(const IsingModel& m, size_t steps, double c, Rng& rng) {
  if (steps < 1) throw InvalidParams("hastings needs steps >= 1");
  const size_t n = m.n();
  std::vector<double> v(n), f(n);
  for (auto& vi : v) vi = rng.uniform() < 0.5 ? 1.0 : -1.0;
  for (size_t t = 0; t < steps; ++t) {
    for (size_t i = 0; i < n; ++i) {
      double fi = m.h[i];
      for (const auto& [nb, w] : m.adj[i]) fi += 2.0 * w * v[nb];
      f[i] = fi;
    }
    for (size_t i = 0; i < n; ++i) v[i] += c * f[i];
  }
  Bits bits(n);
  for (size_t i = 0; i < n; ++i) bits[i] = v[i] >= 0.0 ? 0 : 1;
  return bits;
}

inline Bits uniform_sample(size_t n, Rng& rng) {
  Bits bits(n);
  for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
  return bits;
}

inline std::vector<double> geometric_beta_schedule(size_t sweeps,
                                                   double beta0 = 0.1,
                                                   double beta1 = 5.0) {
  std::vector<double> sched(sweeps);
  if (sweeps == 1) {
    sched[0] = beta1;
    return sched;
  }
  const double ratio = std::pow(beta1 / beta0,
                                1.0 / static_cast<double>(sweeps - 1));
  double b = beta0;
  for (size_t s = 0; s < sweeps; ++s) {
    sched[s] = b;
    b *= ratio;
  }
  return sched;
}

// Single-spin-flip Metropolis with incremental energy deltas; one sweep
// visits every spin in index order.
inline Bits metropolis_anneal(const IsingModel& m, size_t sweeps,
                              const std::vector<double>& beta_schedule,
                              Rng& rng) {
  if (sweeps < 1 || beta_schedule.size() != sweeps)
    throw InvalidParams("schedule length must equal sweep count");
  for (size_t s = 1; s < sweeps; ++s)
    if (beta_schedule[s] < beta_schedule[s - 1])
      throw InvalidParams("beta schedule must be nondecreasing");
  const size_t n = m.n();
  Bits bits(n);
  for (auto& b : bits) b = rng.uniform() < 0.5 ? 0 : 1;
  for (size_t s = 0; s < sweeps; ++s) {
    const double beta = beta_schedule[s];
    for (size_t i = 0; i < n; ++i) {
      double field = m.h[i];
      for (const auto& [nb, w] : m.adj[i])
        field += 2.0 * w * spin_of(bits[nb]);
      const double delta = -2.0 * spin_of(bits[i]) * field;
      if (delta <= 0.0 || rng.uniform() < std::exp(-beta * delta)) bits[i] ^= 1;
    }
  }
  return bits;
}

// Draws `batch_size` samples from the generator and returns the one with the
// lowest energy (ties: first occurrence).
template <typename Generator>
std::pair<Bits, double> best_of_batch(Generator&& gen, const IsingModel& m,
                                      size_t batch_size = 100) {
  if (batch_size < 1) throw InvalidParams("batch size must be >= 1");
  Bits best;
  double best_e = 0.0;
  for (size_t i = 0; i < batch_size; ++i) {
    Bits b = gen();
    const double e = energy(m, b);
    if (i == 0 || e < best_e) {
      best = std::move(b);
      best_e = e;
    }
  }
  return {std::move(best), best_e};
}

}  // namespace pwsim
