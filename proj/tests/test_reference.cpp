#include <catch2/catch_amalgamated.hpp>

#include "pwsim/gates.hpp"
#include "pwsim/reference.hpp"

using namespace pwsim;

namespace {

Circuit bell() {
  Circuit c(2);
  c.push_back(gates::h(0));
  c.push_back(gates::cnot(0, 1));
  return c;
}

Circuit random_circuit(size_t n, size_t T, uint64_t seed) {
  Rng rng(seed);
  Circuit c(n);
  for (size_t t = 0; t < T; ++t) {
    const int kind = static_cast<int>(rng.uniform_int(7));
    const uint32_t q0 = static_cast<uint32_t>(rng.uniform_int(n));
    uint32_t q1 = static_cast<uint32_t>(rng.uniform_int(n));
    while (q1 == q0) q1 = static_cast<uint32_t>(rng.uniform_int(n));
    const double a = rng.uniform() * 6.283185307179586;
    const double b = rng.uniform() * 6.283185307179586;
    switch (kind) {
      case 0: c.push_back(gates::h(q0)); break;
      case 1: c.push_back(gates::rx(q0, a)); break;
      case 2: c.push_back(gates::rz(q0, a)); break;
      case 3: c.push_back(gates::rzz(q0, q1, a)); break;
      case 4: c.push_back(gates::cnot(q0, q1)); break;
      case 5: c.push_back(gates::fsim(q0, q1, a, b)); break;
      default: c.push_back(gates::crx(q0, q1, a)); break;
    }
  }
  return c;
}

}  // namespace

TEST_CASE("statevector of H and Bell", "[reference]") {
  Circuit h1(1);
  h1.push_back(gates::h(0));
  const auto psi = statevector(h1);
  REQUIRE(std::abs(psi[0] - cplx(1 / std::sqrt(2.0))) < 1e-12);
  REQUIRE(std::abs(psi[1] - cplx(1 / std::sqrt(2.0))) < 1e-12);

  const auto bell_psi = statevector(bell());
  REQUIRE(std::abs(bell_psi[0] - cplx(1 / std::sqrt(2.0))) < 1e-12);
  REQUIRE(std::abs(bell_psi[1]) < 1e-12);
  REQUIRE(std::abs(bell_psi[2]) < 1e-12);
  REQUIRE(std::abs(bell_psi[3] - cplx(1 / std::sqrt(2.0))) < 1e-12);
}

TEST_CASE("statevector preserves norm on random circuits", "[reference]") {
  const Circuit c = random_circuit(8, 30, 11);
  const auto psi = statevector(c);
  double norm = 0;
  for (const auto& a : psi) norm += std::norm(a);
  REQUIRE(std::abs(norm - 1.0) < 1e-10);
}

TEST_CASE("exact distribution of Bell and H^3", "[reference]") {
  const auto p = exact_distribution(bell());
  REQUIRE(std::abs(p[0] - 0.5) < 1e-12);
  REQUIRE(std::abs(p[3] - 0.5) < 1e-12);
  Circuit h3(3);
  for (uint32_t q = 0; q < 3; ++q) h3.push_back(gates::h(q));
  for (double v : exact_distribution(h3)) REQUIRE(std::abs(v - 0.125) < 1e-12);
}

TEST_CASE("statevector cap raises TooLarge", "[reference]") {
  Circuit c(23);
  c.push_back(gates::h(0));
  REQUIRE_THROWS_AS(statevector(c), TooLarge);
}

TEST_CASE("amp damp channel on |1>", "[reference]") {
  const double gamma = 0.3;
  NoisyCircuit nc;
  nc.n_qubits = 1;
  nc.events.emplace_back(gates::x(0));
  nc.events.emplace_back(ChannelEvent{
      std::make_shared<const KrausChannel>(amp_damp(gamma)), {0}});
  const auto p = noisy_exact_distribution(nc);
  REQUIRE(std::abs(p[1] - (1 - gamma)) < 1e-12);
  REQUIRE(std::abs(p[0] - gamma) < 1e-12);
}

TEST_CASE("zero-noise noisy distribution equals the ideal one", "[reference]") {
  const Circuit c = random_circuit(4, 12, 3);
  NoisyCircuit nc;
  nc.n_qubits = 4;
  for (const auto& g : c.gates()) nc.events.emplace_back(g);
  const auto p = noisy_exact_distribution(nc);
  const auto q = exact_distribution(c);
  for (size_t i = 0; i < p.size(); ++i) REQUIRE(std::abs(p[i] - q[i]) < 1e-10);
}

TEST_CASE("readout mixing shifts the distribution", "[reference]") {
  NoisyCircuit nc;
  nc.n_qubits = 1;
  nc.p_readout = 0.25;
  nc.events.emplace_back(gates::x(0));
  const auto p = noisy_exact_distribution(nc);
  REQUIRE(std::abs(p[0] - 0.25) < 1e-12);
  REQUIRE(std::abs(p[1] - 0.75) < 1e-12);
}

TEST_CASE("channels preserve trace", "[reference]") {
  const std::vector<KrausChannel> chans = {
      depolarize1(0.05), depolarize2(0.02), amp_damp(0.1), phase_damp(0.2),
      idle_channel(30e-9, 100e-6, 50e-6)};
  for (const auto& ch : chans) {
    const size_t dim = ch.operators.front().dim;
    CMat sum = CMat::zero(dim);
    for (const auto& e : ch.operators) {
      const CMat d = e.dagger() * e;
      for (size_t i = 0; i < d.a.size(); ++i) sum.a[i] += d.a[i];
    }
    REQUIRE(sum.approx_identity(1e-10));
  }
}

TEST_CASE("tvd basics", "[reference]") {
  const std::vector<double> p = {1, 0, 0, 0};
  const std::vector<double> q = {0, 1, 0, 0};
  REQUIRE(tvd(p, p) == 0.0);
  REQUIRE(tvd(p, q) == 1.0);
  const std::vector<double> r = {0.5, 0.25, 0.25, 0};
  REQUIRE(std::abs(tvd(p, r) - tvd(r, p)) < 1e-15);
  REQUIRE_THROWS_AS(tvd(p, {0.5, 0.5}), LengthMismatch);
  REQUIRE_THROWS_AS(tvd(p, {0.5, 0.2, 0.1, 0.0}), InvalidParams);
}
