#pragma once

#include "pwsim/gates.hpp"
#include "pwsim/problems.hpp"

namespace pwsim {

struct QaoaParams {
  size_t p = 1;
  std::vector<double> gammas;
  std::vector<double> betas;

  void validate() const {
    if (p < 1 || gammas.size() != p || betas.size() != p)
      throw InvalidParams("schedule vectors must have length p");
  }
};

// Linear-ramp schedule: gamma_k = (k - 1/2) * dgamma / p,
// beta_k = (1 - (k - 1/2)/p) * dbeta, k = 1..p.
inline QaoaParams default_schedule(size_t p, double dgamma = 0.7,
                                   double dbeta = 0.7) {
  if (p < 1 || p > 16) throw ParameterOutOfRange("layer count outside [1,16]");
  QaoaParams qp;
  qp.p = p;
  for (size_t k = 1; k <= p; ++k) {
    const double mid = static_cast<double>(k) - 0.5;
    qp.gammas.push_back(mid * dgamma / static_cast<double>(p));
    qp.betas.push_back((1.0 - mid / static_cast<double>(p)) * dbeta);
  }
  return qp;
}

// Hadamard layer, then per layer: RZZ on every stored edge, RZ per qubit,
// RX(2 beta) per qubit. The edge rotation angle is 4*gamma*J because a
// stored half-weight enters the Hamiltonian's ordered double sum twice;
// the cost layer then multiplies |x> by exactly exp(-i * gamma * E(x)).
inline Circuit build_qaoa(const IsingModel& model, const QaoaParams& params) {
  params.validate();
  const size_t n = model.n();
  Circuit c(n);
  for (uint32_t q = 0; q < n; ++q) c.push_back(gates::h(q));
  for (size_t k = 0; k < params.p; ++k) {
    const double gamma = params.gammas[k];
    const double beta = params.betas[k];
    for (size_t e = 0; e < model.graph.edges.size(); ++e) {
      const auto& [u, v] = model.graph.edges[e];
      c.push_back(gates::rzz(u, v, 4.0 * gamma * model.J[e]));
    }
    for (uint32_t q = 0; q < n; ++q)
      c.push_back(gates::rz(q, 2.0 * gamma * model.h[q]));
    for (uint32_t q = 0; q < n; ++q) c.push_back(gates::rx(q, 2.0 * beta));
  }
  return c;
}

}  // namespace pwsim
