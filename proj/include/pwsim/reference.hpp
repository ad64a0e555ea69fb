#pragma once

// Brute-force ground truth used by the test suites and `pwsim verify`:
// full state-vector evolution, exact output distributions, and exact noisy
// distributions via density-matrix evolution. Not a performance path.

#include <complex>
#include <vector>

#include "pwsim/circuit.hpp"
#include "pwsim/noise_model.hpp"

namespace pwsim {

namespace detail {

// Applies `op` on the given targets to a state vector of length 2^n laid out
// with qubit 0 as the most significant index bit.
inline void apply_op(std::vector<cplx>& psi, size_t n, const CMat& op,
                     const std::vector<uint32_t>& targets) {
  const size_t m = targets.size();
  const size_t dim = size_t{1} << m;
  uint64_t tmask = 0;
  std::vector<int> shift(m);
  for (size_t j = 0; j < m; ++j) {
    shift[j] = static_cast<int>(n - 1 - targets[j]);
    tmask |= uint64_t{1} << shift[j];
  }
  std::vector<cplx> in(dim), out(dim);
  const uint64_t total = uint64_t{1} << n;
  for (uint64_t base = 0; base < total; ++base) {
    if (base & tmask) continue;
    for (size_t l = 0; l < dim; ++l) {
      uint64_t idx = base;
      for (size_t j = 0; j < m; ++j)
        if ((l >> (m - 1 - j)) & 1) idx |= uint64_t{1} << shift[j];
      in[l] = psi[idx];
    }
    for (size_t r = 0; r < dim; ++r) {
      cplx acc = 0.0;
      for (size_t c = 0; c < dim; ++c) acc += op.at(r, c) * in[c];
      out[r] = acc;
    }
    for (size_t l = 0; l < dim; ++l) {
      uint64_t idx = base;
      for (size_t j = 0; j < m; ++j)
        if ((l >> (m - 1 - j)) & 1) idx |= uint64_t{1} << shift[j];
      psi[idx] = out[l];
    }
  }
}

}  // namespace detail

inline std::vector<cplx> statevector(const Circuit& c, size_t n_cap = 22) {
  const size_t n = c.n_qubits();
  if (n > n_cap) throw TooLarge("statevector cap exceeded");
  std::vector<cplx> psi(size_t{1} << n, 0.0);
  psi[0] = 1.0;
  for (const auto& g : c.gates()) detail::apply_op(psi, n, g.matrix(), g.targets());
  return psi;
}

inline std::vector<double> exact_distribution(const Circuit& c,
                                              size_t n_cap = 22) {
  const auto psi = statevector(c, n_cap);
  std::vector<double> p(psi.size());
  for (size_t i = 0; i < psi.size(); ++i) p[i] = std::norm(psi[i]);
  return p;
}

// Density-matrix evolution of a noisy circuit, ending with the classical
// readout-flip mixing. Exact; the reference side of all noisy TVD tests.
inline std::vector<double> noisy_exact_distribution(const NoisyCircuit& nc,
                                                    size_t n_cap = 10) {
  const size_t n = nc.n_qubits;
  if (n > n_cap) throw TooLarge("density matrix cap exceeded");
  const size_t dim = size_t{1} << n;
  // rho as dim x dim, row-major. Columns of rho transform like state
  // vectors under U, rows under conj(U).
  std::vector<cplx> rho(dim * dim, 0.0);
  rho[0] = 1.0;

  auto apply_matrix = [&](const CMat& op, const std::vector<uint32_t>& targets,
                          std::vector<cplx>& m) {
    // m <- (op (x) I) m (op (x) I)^dagger, via column then row passes.
    std::vector<cplx> col(dim);
    for (size_t c = 0; c < dim; ++c) {
      for (size_t r = 0; r < dim; ++r) col[r] = m[r * dim + c];
      detail::apply_op(col, n, op, targets);
      for (size_t r = 0; r < dim; ++r) m[r * dim + c] = col[r];
    }
    CMat conj_op = op;
    for (cplx& v : conj_op.a) v = std::conj(v);
    for (size_t r = 0; r < dim; ++r) {
      for (size_t c = 0; c < dim; ++c) col[c] = m[r * dim + c];
      detail::apply_op(col, n, conj_op, targets);
      for (size_t c = 0; c < dim; ++c) m[r * dim + c] = col[c];
    }
  };

  for (const auto& ev : nc.events) {
    if (const Gate* g = std::get_if<Gate>(&ev)) {
      apply_matrix(g->matrix(), g->targets(), rho);
    } else {
      const auto& ch = std::get<ChannelEvent>(ev);
      std::vector<cplx> acc(dim * dim, 0.0);
      for (const auto& e : ch.channel->operators) {
        std::vector<cplx> term = rho;
        apply_matrix(e, ch.targets, term);
        for (size_t i = 0; i < term.size(); ++i) acc[i] += term[i];
      }
      rho.swap(acc);
    }
  }

  double trace = 0.0;
  for (size_t i = 0; i < dim; ++i) trace += rho[i * dim + i].real();
  if (std::abs(trace - 1.0) > 1e-9)
    throw Error("density matrix trace drifted: " + std::to_string(trace));

  std::vector<double> p(dim);
  for (size_t i = 0; i < dim; ++i) p[i] = std::max(0.0, rho[i * dim + i].real());

  if (nc.p_readout > 0) {
    const double pr = nc.p_readout;
    std::vector<double> next(dim);
    for (size_t q = 0; q < n; ++q) {
      const uint64_t bit = uint64_t{1} << (n - 1 - q);
      for (size_t i = 0; i < dim; ++i)
        next[i] = (1 - pr) * p[i] + pr * p[i ^ bit];
      p.swap(next);
    }
  }
  return p;
}

// Total variation distance, (1/2) sum |p_i - q_i|.
inline double tvd(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw LengthMismatch("tvd length mismatch");
  double sp = 0.0, sq = 0.0, d = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
    d += std::abs(p[i] - q[i]);
  }
  if (std::abs(sp - 1.0) > 1e-6 || std::abs(sq - 1.0) > 1e-6)
    throw InvalidParams("tvd inputs must be normalized");
  return 0.5 * d;
}

}  // namespace pwsim
