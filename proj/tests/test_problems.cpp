#include <catch2/catch_amalgamated.hpp>
#include <set>
#include <sstream>

#include "pwsim/problems.hpp"

using namespace pwsim;

TEST_CASE("grid and king counts", "[problems]") {
  const ProblemGraph g = grid_graph(3, 3);
  REQUIRE(g.n == 9);
  REQUIRE(g.edges.size() == 12);
  const ProblemGraph k = king_graph(3, 3);
  REQUIRE(k.n == 9);
  REQUIRE(k.edges.size() == 20);  // 12 rook + 8 diagonal
}

TEST_CASE("degree sanity across topologies", "[problems]") {
  for (size_t d : grid_graph(4, 5).degrees()) REQUIRE(d <= 4);
  for (size_t d : king_graph(4, 4).degrees()) REQUIRE(d <= 8);
  for (size_t d : heavy_hex_graph(5).degrees()) REQUIRE(d <= 3);
  for (size_t d : random_3_regular_graph(20, 3).degrees()) REQUIRE(d == 3);
}

TEST_CASE("chimera cell structure and edge-count formula", "[problems]") {
  const size_t m = 2, n = 2, t = 4;
  const ProblemGraph g = chimera_graph(m, n, t);
  REQUIRE(g.n == 32);
  // independent published count: m*n*t^2 internal + t*((m-1)*n + m*(n-1))
  const size_t want = m * n * t * t + t * ((m - 1) * n + m * (n - 1));
  REQUIRE(g.edges.size() == want);
  // each cell is K_{4,4}: 16 internal edges
  size_t internal_00 = 0;
  for (const auto& [u, v] : g.edges)
    if (u < 2 * t && v < 2 * t) ++internal_00;
  REQUIRE(internal_00 == t * t);
}

TEST_CASE("heavy-hex vertex count matches the documented construction",
          "[problems]") {
  // d rows of 2d-1 qubits plus bridge qubits on alternating columns
  for (size_t d : {size_t{2}, size_t{3}, size_t{5}}) {
    const ProblemGraph g = heavy_hex_graph(d);
    size_t bridges = 0;
    const size_t cols = 2 * d - 1;
    for (size_t gap = 0; gap + 1 < d; ++gap)
      for (size_t c = (gap % 2 ? 2 : 0); c < cols; c += 4) ++bridges;
    REQUIRE(g.n == d * cols + bridges);
  }
}

TEST_CASE("3-regular rejects odd n and is reproducible", "[problems]") {
  REQUIRE_THROWS_AS(random_3_regular_graph(7, 1), InvalidParams);
  const ProblemGraph a = random_3_regular_graph(16, 5);
  const ProblemGraph b = random_3_regular_graph(16, 5);
  REQUIRE(a.edges == b.edges);
  const ProblemGraph c = random_3_regular_graph(16, 6);
  REQUIRE(a.edges != c.edges);
}

TEST_CASE("build_topology dispatch", "[problems]") {
  REQUIRE(build_topology("grid", {3, 4}).n == 12);
  REQUIRE(build_topology("chimera", {2, 2, 4}).n == 32);
  REQUIRE_THROWS_AS(build_topology("grid", {3}), InvalidParams);
  REQUIRE_THROWS_AS(build_topology("moebius", {3}), InvalidParams);
}

TEST_CASE("gaussian instances are seeded and respect sparsity", "[problems]") {
  const IsingModel a = gaussian_ising(grid_graph(4, 4), 9);
  const IsingModel b = gaussian_ising(grid_graph(4, 4), 9);
  REQUIRE(a.J == b.J);
  REQUIRE(a.h == b.h);
  const IsingModel c = gaussian_ising(grid_graph(4, 4), 10);
  REQUIRE(a.J != c.J);
  // couplings exist exactly on graph edges
  REQUIRE(a.J.size() == a.graph.edges.size());

  // moment check over many draws
  const IsingModel big = gaussian_ising(random_3_regular_graph(5000, 1), 3);
  double s = 0, s2 = 0;
  for (double w : big.J) {
    s += w;
    s2 += w * w;
  }
  const double n = static_cast<double>(big.J.size());
  REQUIRE(std::abs(s / n) < 3.0 / std::sqrt(n));
  REQUIRE(std::abs(s2 / n - 1.0) < 0.1);
}

TEST_CASE("energy evaluates the double-sum Hamiltonian", "[problems]") {
  // n=2, J12 = J21 = 0.5, h = 0
  ProblemGraph g;
  g.n = 2;
  g.add_edge(0, 1);
  g.finish();
  IsingModel m;
  m.graph = g;
  m.J = {0.5};
  m.h = {0.0, 0.0};
  m.finalize();
  REQUIRE(energy(m, bits_from_string("00")) == 1.0);   // sigma = (+1,+1)
  REQUIRE(energy(m, bits_from_string("01")) == -1.0);  // sigma = (+1,-1)

  // h-only model
  IsingModel ho;
  ho.graph.n = 3;
  ho.J = {};
  ho.h = {0.3, -0.7, 1.1};
  ho.finalize();
  REQUIRE(std::abs(energy(ho, bits_from_string("010")) - (0.3 + 0.7 + 1.1)) <
          1e-15);
}

TEST_CASE("energy matches a brute-force dense evaluator", "[problems]") {
  const IsingModel m = gaussian_ising(random_3_regular_graph(4, 2), 4);
  // independent path: dense symmetric matrix and explicit double loop
  std::vector<std::vector<double>> J(4, std::vector<double>(4, 0.0));
  for (size_t e = 0; e < m.graph.edges.size(); ++e) {
    J[m.graph.edges[e].first][m.graph.edges[e].second] = m.J[e];
    J[m.graph.edges[e].second][m.graph.edges[e].first] = m.J[e];
  }
  for (uint64_t idx = 0; idx < 16; ++idx) {
    const Bits b = bits_from_index(idx, 4);
    double want = 0;
    for (size_t i = 0; i < 4; ++i)
      for (size_t j = 0; j < 4; ++j)
        if (i != j) want += J[i][j] * spin_of(b[i]) * spin_of(b[j]);
    for (size_t i = 0; i < 4; ++i) want += m.h[i] * spin_of(b[i]);
    REQUIRE(std::abs(energy(m, b) - want) < 1e-12);
  }
}

TEST_CASE("Z2 symmetry at zero field", "[problems]") {
  IsingModel m = gaussian_ising(grid_graph(3, 3), 8);
  for (auto& f : m.h) f = 0.0;
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    Bits b(9);
    for (auto& bit : b) bit = rng.uniform() < 0.5;
    Bits flipped = b;
    for (auto& bit : flipped) bit ^= 1;
    REQUIRE(std::abs(energy(m, b) - energy(m, flipped)) < 1e-12);
  }
}

TEST_CASE("exhaustive ground state agrees with a naive scan", "[problems]") {
  const IsingModel m = gaussian_ising(grid_graph(4, 4), 33);
  const auto [bits, e] = exhaustive_ground_state(m);
  double naive_best = 1e300;
  uint64_t naive_idx = 0;
  for (uint64_t idx = 0; idx < (uint64_t{1} << 16); ++idx) {
    const double v = energy(m, bits_from_index(idx, 16));
    if (v < naive_best) {
      naive_best = v;
      naive_idx = idx;
    }
  }
  REQUIRE(e == naive_best);
  REQUIRE(bits_to_index(bits) == naive_idx);
}

TEST_CASE("ferromagnetic chain ties break to the smaller bitstring",
          "[problems]") {
  ProblemGraph g;
  g.n = 5;
  for (uint32_t i = 0; i + 1 < 5; ++i) g.add_edge(i, i + 1);
  g.finish();
  IsingModel m;
  m.graph = g;
  m.J.assign(4, -1.0);
  m.h.assign(5, 0.0);
  m.finalize();
  const auto [bits, e] = exhaustive_ground_state(m);
  REQUIRE(bits_to_string(bits) == "00000");  // numerically smaller of the pair
  REQUIRE(e == -8.0);

  // n=2 antiferromagnet from the energy example
  ProblemGraph g2;
  g2.n = 2;
  g2.add_edge(0, 1);
  g2.finish();
  IsingModel m2;
  m2.graph = g2;
  m2.J = {0.5};
  m2.h = {0.0, 0.0};
  m2.finalize();
  const auto [b2, e2] = exhaustive_ground_state(m2);
  REQUIRE(e2 == -1.0);
  REQUIRE(bits_to_string(b2) == "01");
  REQUIRE_THROWS_AS(exhaustive_ground_state(m2, 1), TooLarge);
}

TEST_CASE("ising file format round-trips exactly", "[problems]") {
  const IsingModel m = gaussian_ising(king_graph(3, 3), 12);
  std::ostringstream os;
  write_ising(os, m);
  std::istringstream is(os.str());
  const IsingModel back = read_ising(is);
  REQUIRE(back.n() == m.n());
  REQUIRE(back.graph.edges == m.graph.edges);
  REQUIRE(back.J == m.J);  // bit-exact
  REQUIRE(back.h == m.h);
  std::ostringstream os2;
  write_ising(os2, back);
  REQUIRE(os2.str() == os.str());
}
