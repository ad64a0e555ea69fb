#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pwsim/bits.hpp"
#include "pwsim/circuit.hpp"
#include "pwsim/rng.hpp"

namespace pwsim {

struct ProblemGraph {
  size_t n = 0;
  std::vector<std::pair<uint32_t, uint32_t>> edges;  // u < v, unique
  std::string kind;

  void add_edge(uint32_t u, uint32_t v) {
    if (u == v) throw InvalidParams("self loop");
    if (u > v) std::swap(u, v);
    edges.emplace_back(u, v);
  }

  void finish() {
    std::sort(edges.begin(), edges.end());
    const auto dup = std::adjacent_find(edges.begin(), edges.end());
    if (dup != edges.end()) throw InvalidParams("duplicate edge");
    for (const auto& [u, v] : edges)
      if (v >= n) throw InvalidParams("edge endpoint out of range");
  }

  std::vector<size_t> degrees() const {
    std::vector<size_t> d(n, 0);
    for (const auto& [u, v] : edges) {
      d[u]++;
      d[v]++;
    }
    return d;
  }
};

inline ProblemGraph grid_graph(size_t rows, size_t cols) {
  if (rows < 1 || cols < 1) throw InvalidParams("grid dimensions");
  ProblemGraph g;
  g.n = rows * cols;
  g.kind = "grid";
  auto id = [cols](size_t r, size_t c) {
    return static_cast<uint32_t>(r * cols + c);
  };
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.add_edge(id(r, c), id(r, c + 1));
      if (r + 1 < rows) g.add_edge(id(r, c), id(r + 1, c));
    }
  g.finish();
  return g;
}

inline ProblemGraph king_graph(size_t rows, size_t cols) {
  if (rows < 1 || cols < 1) throw InvalidParams("king dimensions");
  ProblemGraph g;
  g.n = rows * cols;
  g.kind = "king";
  auto id = [cols](size_t r, size_t c) {
    return static_cast<uint32_t>(r * cols + c);
  };
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) g.add_edge(id(r, c), id(r, c + 1));
      if (r + 1 < rows) g.add_edge(id(r, c), id(r + 1, c));
      if (r + 1 < rows && c + 1 < cols) g.add_edge(id(r, c), id(r + 1, c + 1));
      if (r + 1 < rows && c >= 1) g.add_edge(id(r, c), id(r + 1, c - 1));
    }
  g.finish();
  return g;
}

// Heavy-hex lattice in the row/bridge form used by superconducting devices:
// `d` rows of 2d-1 qubits connected in lines, with bridge qubits joining
// adjacent rows every four columns, offset by two on alternating row gaps.
// Vertex count: d*(2d-1) + sum over gaps of the bridge counts; degree <= 3.
inline ProblemGraph heavy_hex_graph(size_t distance) {
  if (distance < 1) throw InvalidParams("heavy-hex distance");
  const size_t rows = distance;
  const size_t cols = 2 * distance - 1;
  ProblemGraph g;
  g.kind = "heavy_hex";
  auto id = [cols](size_t r, size_t c) {
    return static_cast<uint32_t>(r * cols + c);
  };
  uint32_t next = static_cast<uint32_t>(rows * cols);
  std::vector<std::pair<uint32_t, uint32_t>> pending;
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c + 1 < cols; ++c)
      pending.emplace_back(id(r, c), id(r, c + 1));
  for (size_t gap = 0; gap + 1 < rows; ++gap) {
    const size_t start = (gap % 2 == 0) ? 0 : 2;
    for (size_t c = start; c < cols; c += 4) {
      const uint32_t bridge = next++;
      pending.emplace_back(id(gap, c), bridge);
      pending.emplace_back(bridge, id(gap + 1, c));
    }
  }
  g.n = next;
  for (const auto& [u, v] : pending) g.add_edge(u, v);
  g.finish();
  return g;
}

// Chimera(m, n, t): an m x n grid of K_{t,t} cells. Qubit (i, j, u, k) with
// u = 0 the vertical side, u = 1 the horizontal side. Vertical sides couple
// between row neighbors, horizontal sides between column neighbors.
inline ProblemGraph chimera_graph(size_t m, size_t n, size_t t) {
  if (m < 1 || n < 1 || t < 1) throw InvalidParams("chimera parameters");
  ProblemGraph g;
  g.kind = "chimera";
  g.n = m * n * 2 * t;
  auto id = [n, t](size_t i, size_t j, size_t u, size_t k) {
    return static_cast<uint32_t>(((i * n + j) * 2 + u) * t + k);
  };
  for (size_t i = 0; i < m; ++i)
    for (size_t j = 0; j < n; ++j) {
      for (size_t a = 0; a < t; ++a)
        for (size_t b = 0; b < t; ++b) g.add_edge(id(i, j, 0, a), id(i, j, 1, b));
      if (i + 1 < m)
        for (size_t k = 0; k < t; ++k)
          g.add_edge(id(i, j, 0, k), id(i + 1, j, 0, k));
      if (j + 1 < n)
        for (size_t k = 0; k < t; ++k)
          g.add_edge(id(i, j, 1, k), id(i, j + 1, 1, k));
    }
  g.finish();
  return g;
}

// Pairing model with rejection: shuffle 3n stubs, pair consecutively, retry
// until the result is simple.
inline ProblemGraph random_3_regular_graph(size_t n, uint64_t seed) {
  if (n % 2 != 0 || n < 4) throw InvalidParams("3-regular needs even n >= 4");
  Rng rng(splitmix64_mix(seed ^ 0x3723e5b1a2c4d6f8ULL));
  std::vector<uint32_t> stubs(3 * n);
  for (size_t attempt = 0;; ++attempt) {
    if (attempt > 10000) throw Error("3-regular pairing did not converge");
    for (size_t i = 0; i < stubs.size(); ++i)
      stubs[i] = static_cast<uint32_t>(i / 3);
    for (size_t i = stubs.size() - 1; i > 0; --i) {
      const size_t j = rng.uniform_int(i + 1);
      std::swap(stubs[i], stubs[j]);
    }
    std::vector<std::pair<uint32_t, uint32_t>> edges;
    bool ok = true;
    for (size_t i = 0; i < stubs.size(); i += 2) {
      uint32_t u = stubs[i], v = stubs[i + 1];
      if (u == v) {
        ok = false;
        break;
      }
      if (u > v) std::swap(u, v);
      edges.emplace_back(u, v);
    }
    if (!ok) continue;
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) continue;
    ProblemGraph g;
    g.n = n;
    g.kind = "random_3_regular";
    g.edges = std::move(edges);
    g.finish();
    return g;
  }
}

inline ProblemGraph build_topology(const std::string& kind,
                                   const std::vector<size_t>& params,
                                   uint64_t seed = 0) {
  auto need = [&](size_t k) {
    if (params.size() != k)
      throw InvalidParams("topology " + kind + " expects " +
                          std::to_string(k) + " parameter(s)");
  };
  if (kind == "grid") {
    need(2);
    return grid_graph(params[0], params[1]);
  }
  if (kind == "king") {
    need(2);
    return king_graph(params[0], params[1]);
  }
  if (kind == "heavy_hex") {
    need(1);
    return heavy_hex_graph(params[0]);
  }
  if (kind == "chimera") {
    need(3);
    return chimera_graph(params[0], params[1], params[2]);
  }
  if (kind == "random_3_regular") {
    need(1);
    return random_3_regular_graph(params[0], seed);
  }
  throw InvalidParams("unknown topology " + kind);
}

// --- Ising model ------------------------------------------------------------

// H = sum_{i,j} J_ij s_i s_j + sum_i h_i s_i over ordered pairs, so a stored
// undirected edge weight (half the coupling) enters twice. Spin encoding:
// bit 0 <-> s = +1.
struct IsingModel {
  ProblemGraph graph;
  std::vector<double> J;  // per graph edge
  std::vector<double> h;
  std::vector<std::vector<std::pair<uint32_t, double>>> adj;

  size_t n() const { return graph.n; }

  void finalize() {
    if (J.size() != graph.edges.size() || h.size() != graph.n)
      throw LengthMismatch("Ising model field sizes");
    adj.assign(graph.n, {});
    for (size_t e = 0; e < graph.edges.size(); ++e) {
      const auto& [u, v] = graph.edges[e];
      adj[u].emplace_back(v, J[e]);
      adj[v].emplace_back(u, J[e]);
    }
  }
};

inline IsingModel gaussian_ising(ProblemGraph graph, uint64_t seed) {
  IsingModel m;
  m.graph = std::move(graph);
  Rng rng(splitmix64_mix(seed ^ 0x15196283a0b1c2d3ULL));
  m.J.resize(m.graph.edges.size());
  for (auto& w : m.J) w = rng.normal();
  m.h.resize(m.graph.n);
  for (auto& f : m.h) f = rng.normal();
  m.finalize();
  return m;
}

inline double spin_of(uint8_t bit) { return bit ? -1.0 : 1.0; }

inline double energy(const IsingModel& m, const Bits& bits) {
  if (bits.size() != m.n()) throw LengthMismatch("energy bit count");
  double e = 0.0;
  for (size_t k = 0; k < m.graph.edges.size(); ++k) {
    const auto& [u, v] = m.graph.edges[k];
    e += 2.0 * m.J[k] * spin_of(bits[u]) * spin_of(bits[v]);
  }
  for (size_t i = 0; i < m.h.size(); ++i) e += m.h[i] * spin_of(bits[i]);
  return e;
}

// Exact minimizer by Gray-code enumeration with incremental updates; new
// optima are re-evaluated from scratch so float drift cannot leak in. Ties
// go to the numerically smaller bitstring.
inline std::pair<Bits, double> exhaustive_ground_state(const IsingModel& m,
                                                       size_t n_cap = 30) {
  const size_t n = m.n();
  if (n > n_cap) throw TooLarge("ground-state enumeration cap");
  if (n == 0) return {Bits{}, 0.0};
  Bits cur(n, 0);
  double e = energy(m, cur);
  Bits best = cur;
  double best_e = e;
  uint64_t best_idx = 0;
  const uint64_t total = uint64_t{1} << n;
  for (uint64_t k = 1; k < total; ++k) {
    const int flip = __builtin_ctzll(k);
    const uint32_t q = static_cast<uint32_t>(flip);
    double field = m.h[q];
    for (const auto& [nb, w] : m.adj[q]) field += 2.0 * w * spin_of(cur[nb]);
    e += -2.0 * spin_of(cur[q]) * field;
    cur[q] ^= 1;
    if (e < best_e + 1e-9) {
      const double exact = energy(m, cur);
      const uint64_t idx = bits_to_index(cur);
      if (exact < best_e || (exact == best_e && idx < best_idx)) {
        best = cur;
        best_e = exact;
        best_idx = idx;
      }
      e = exact;  // re-anchor the running value
    }
  }
  return {best, best_e};
}

// --- Serialization ----------------------------------------------------------
//
//   ising <n>
//   h <i> <value>
//   J <i> <j> <value>     (stored once per undirected edge, J_ij = J_ji)

inline void write_ising(std::ostream& os, const IsingModel& m) {
  os << "ising " << m.n() << "\n";
  for (size_t i = 0; i < m.h.size(); ++i)
    os << "h " << i << " " << detail::fmt_double(m.h[i]) << "\n";
  for (size_t e = 0; e < m.graph.edges.size(); ++e)
    os << "J " << m.graph.edges[e].first << " " << m.graph.edges[e].second
       << " " << detail::fmt_double(m.J[e]) << "\n";
}

inline IsingModel read_ising(std::istream& is) {
  std::string tok;
  if (!(is >> tok) || tok != "ising") throw ParseError("missing ising header");
  size_t n = 0;
  if (!(is >> n)) throw ParseError("bad ising size");
  IsingModel m;
  m.graph.n = n;
  m.graph.kind = "file";
  m.h.assign(n, 0.0);
  while (is >> tok) {
    if (tok == "h") {
      size_t i;
      double v;
      if (!(is >> i >> v) || i >= n) throw ParseError("bad h line");
      m.h[i] = v;
    } else if (tok == "J") {
      size_t i, j;
      double v;
      if (!(is >> i >> j >> v) || i >= n || j >= n || i == j)
        throw ParseError("bad J line");
      m.graph.add_edge(static_cast<uint32_t>(i), static_cast<uint32_t>(j));
      m.J.push_back(v);
    } else {
      throw ParseError("unknown ising line: " + tok);
    }
  }
  // keep edge weights aligned while sorting edges
  std::vector<size_t> order(m.graph.edges.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return m.graph.edges[a] < m.graph.edges[b];
  });
  std::vector<std::pair<uint32_t, uint32_t>> edges(order.size());
  std::vector<double> J(order.size());
  for (size_t i = 0; i < order.size(); ++i) {
    edges[i] = m.graph.edges[order[i]];
    J[i] = m.J[order[i]];
  }
  m.graph.edges = std::move(edges);
  m.J = std::move(J);
  m.graph.finish();
  m.finalize();
  return m;
}

inline void write_ising_file(const std::string& path, const IsingModel& m) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  write_ising(f, m);
}

inline IsingModel read_ising_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  return read_ising(f);
}

}  // namespace pwsim
