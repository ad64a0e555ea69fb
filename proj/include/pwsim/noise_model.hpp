#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pwsim/circuit.hpp"
#include "pwsim/gates.hpp"
#include "pwsim/rng.hpp"

namespace pwsim {

// Kraus channel: E(rho) = sum_i E_i rho E_i^dagger with sum E_i^dagger E_i = I.
struct KrausChannel {
  std::vector<CMat> operators;
  std::string tag;

  KrausChannel(std::vector<CMat> ops, std::string name)
      : operators(std::move(ops)), tag(std::move(name)) {
    if (operators.empty()) throw InvalidParams("empty Kraus channel");
    const size_t dim = operators.front().dim;
    CMat sum = CMat::zero(dim);
    for (const auto& e : operators) {
      if (e.dim != dim) throw InvalidParams("mixed Kraus operator dimensions");
      const CMat d = e.dagger() * e;
      for (size_t i = 0; i < dim * dim; ++i) sum.a[i] += d.a[i];
    }
    if (!sum.approx_identity(1e-10))
      throw NonCompleteChannel("sum E^dag E != I for channel " + tag);
  }

  size_t arity() const { return log2_exact(operators.front().dim); }
};

// --- Standard channels --------------------------------------------------

namespace detail {

inline void push_if_nonzero(std::vector<CMat>& ops, CMat m) {
  for (const cplx& v : m.a)
    if (v != 0.0) {
      ops.push_back(std::move(m));
      return;
    }
}

inline CMat scaled(const CMat& m, double f) {
  CMat out = m;
  for (cplx& v : out.a) v *= f;
  return out;
}

}  // namespace detail

inline KrausChannel depolarize1(double p) {
  if (p < 0 || p > 1) throw ParameterOutOfRange("depolarize1 probability");
  std::vector<CMat> ops;
  detail::push_if_nonzero(ops, detail::scaled(CMat::identity(2), std::sqrt(1 - p)));
  const double f = std::sqrt(p / 3.0);
  detail::push_if_nonzero(ops, detail::scaled(gates::x_mat(), f));
  detail::push_if_nonzero(ops, detail::scaled(gates::y_mat(), f));
  detail::push_if_nonzero(ops, detail::scaled(gates::z_mat(), f));
  return KrausChannel(std::move(ops), "depolarize1");
}

inline KrausChannel depolarize2(double p) {
  if (p < 0 || p > 1) throw ParameterOutOfRange("depolarize2 probability");
  const CMat paulis[4] = {CMat::identity(2), gates::x_mat(), gates::y_mat(),
                          gates::z_mat()};
  std::vector<CMat> ops;
  detail::push_if_nonzero(ops, detail::scaled(CMat::identity(4), std::sqrt(1 - p)));
  const double f = std::sqrt(p / 15.0);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == 0 && b == 0) continue;
      detail::push_if_nonzero(ops, detail::scaled(kron(paulis[a], paulis[b]), f));
    }
  return KrausChannel(std::move(ops), "depolarize2");
}

inline KrausChannel amp_damp(double gamma) {
  if (gamma < 0 || gamma > 1) throw ParameterOutOfRange("amp_damp gamma");
  std::vector<CMat> ops;
  detail::push_if_nonzero(ops, CMat(2, {1, 0, 0, std::sqrt(1 - gamma)}));
  detail::push_if_nonzero(ops, CMat(2, {0, std::sqrt(gamma), 0, 0}));
  return KrausChannel(std::move(ops), "amp_damp");
}

inline KrausChannel phase_damp(double lambda) {
  if (lambda < 0 || lambda > 1) throw ParameterOutOfRange("phase_damp lambda");
  std::vector<CMat> ops;
  detail::push_if_nonzero(ops, CMat(2, {1, 0, 0, std::sqrt(1 - lambda)}));
  detail::push_if_nonzero(ops, CMat(2, {0, 0, 0, std::sqrt(lambda)}));
  return KrausChannel(std::move(ops), "phase_damp");
}

inline double idle_gamma(double t, double T1) {
  return 1.0 - std::exp(-t / T1);
}

// Pure-dephasing rate 1/Tphi = 1/T2 - 1/(2 T1); the phase-damping parameter
// reproduces the off-diagonal factor exp(-t/Tphi).
inline double idle_lambda(double t, double T1, double T2) {
  const double rate = std::max(0.0, 1.0 / T2 - 1.0 / (2.0 * T1));
  return 1.0 - std::exp(-2.0 * t * rate);
}

// Idle decoherence for duration t: amplitude damping followed by phase
// damping, composed into a single channel (products of the Kraus pairs,
// zero operators dropped).
inline KrausChannel idle_channel(double t, double T1, double T2) {
  const double gamma = idle_gamma(t, T1);
  const double lambda = idle_lambda(t, T1, T2);
  const KrausChannel a = amp_damp(gamma);
  const KrausChannel p = phase_damp(lambda);
  std::vector<CMat> ops;
  for (const auto& pj : p.operators)
    for (const auto& ai : a.operators) detail::push_if_nonzero(ops, pj * ai);
  return KrausChannel(std::move(ops), "idle");
}

// --- LSM (local-submonomial) decomposition -------------------------------

// 2x2 factor of an LSM operator: nonzeros confined to the diagonal or to the
// antidiagonal.
struct Factor2 {
  cplx v0 = 0.0;  // entry (0,0) or (0,1)
  cplx v1 = 0.0;  // entry (1,1) or (1,0)
  bool antidiagonal = false;

  CMat as_matrix() const {
    return antidiagonal ? CMat(2, {0, v0, v1, 0}) : CMat(2, {v0, 0, 0, v1});
  }
};

namespace detail {

inline bool block_zero(const CMat& m, size_t h, size_t br, size_t bc,
                       double tol) {
  for (size_t r = 0; r < h; ++r)
    for (size_t c = 0; c < h; ++c)
      if (std::abs(m.at(br * h + r, bc * h + c)) > tol) return false;
  return true;
}

inline CMat block_of(const CMat& m, size_t h, size_t br, size_t bc) {
  CMat out = CMat::zero(h);
  for (size_t r = 0; r < h; ++r)
    for (size_t c = 0; c < h; ++c) out.at(r, c) = m.at(br * h + r, bc * h + c);
  return out;
}

// B = s * R for some scalar s? Returns the scalar.
inline std::optional<cplx> proportional(const CMat& b, const CMat& r,
                                        double tol) {
  size_t best = 0;
  for (size_t i = 1; i < r.a.size(); ++i)
    if (std::abs(r.a[i]) > std::abs(r.a[best])) best = i;
  if (std::abs(r.a[best]) <= tol) return std::nullopt;
  const cplx s = b.a[best] / r.a[best];
  for (size_t i = 0; i < r.a.size(); ++i)
    if (std::abs(b.a[i] - s * r.a[i]) > tol) return std::nullopt;
  return s;
}

inline bool factor_lsm(const CMat& m, std::vector<Factor2>& out,
                       double tol = 1e-10) {
  if (m.dim == 1) return true;
  if (m.dim == 2) {
    const bool diag_zero =
        std::abs(m.at(0, 0)) <= tol && std::abs(m.at(1, 1)) <= tol;
    const bool anti_zero =
        std::abs(m.at(0, 1)) <= tol && std::abs(m.at(1, 0)) <= tol;
    if (anti_zero) {
      out.push_back({m.at(0, 0), m.at(1, 1), false});
      return true;
    }
    if (diag_zero) {
      out.push_back({m.at(0, 1), m.at(1, 0), true});
      return true;
    }
    return false;
  }
  const size_t h = m.dim / 2;
  const bool off_zero =
      block_zero(m, h, 0, 1, tol) && block_zero(m, h, 1, 0, tol);
  const bool diag_zero =
      block_zero(m, h, 0, 0, tol) && block_zero(m, h, 1, 1, tol);
  if (!off_zero && !diag_zero) return false;
  const CMat b0 = block_of(m, h, 0, off_zero ? 0 : 1);
  const CMat b1 = block_of(m, h, 1, off_zero ? 1 : 0);
  const bool b0z = block_zero(m, h, 0, off_zero ? 0 : 1, tol);
  Factor2 f;
  f.antidiagonal = !off_zero;
  CMat rest = CMat::zero(h);
  if (!b0z) {
    f.v0 = 1.0;
    rest = b0;
    const auto s = proportional(b1, rest, tol);
    if (!s) return false;
    f.v1 = *s;
  } else {
    f.v0 = 0.0;
    f.v1 = 1.0;
    rest = b1;
  }
  out.push_back(f);
  return factor_lsm(rest, out, tol);
}

}  // namespace detail

// Per-operator tensor factorizations of an LSM channel; factors[i][j] acts on
// the j-th target qubit of operator E_i.
struct LsmDecomposition {
  std::vector<std::vector<Factor2>> factors;
};

inline std::optional<LsmDecomposition> lsm_decompose(const KrausChannel& ch) {
  LsmDecomposition d;
  for (const auto& e : ch.operators) {
    std::vector<Factor2> f;
    if (!detail::factor_lsm(e, f)) return std::nullopt;
    d.factors.push_back(std::move(f));
  }
  return d;
}

inline bool is_lsm(const KrausChannel& ch) {
  return lsm_decompose(ch).has_value();
}

// Draws a Kraus index given the local basis label, Pr(i|s) = <s|E_i^dag E_i|s>.
// For submonomial operators this is the squared magnitude of the unique
// nonzero entry in column s.
inline size_t sample_kraus_index(const KrausChannel& ch, uint32_t s_local,
                                 Rng& rng) {
  const size_t dim = ch.operators.front().dim;
  if (s_local >= dim) throw IndexOutOfRange("local state out of range");
  double probs[64];
  const size_t k = ch.operators.size();
  for (size_t i = 0; i < k; ++i) {
    const CMat& e = ch.operators[i];
    double p = 0.0;
    int nonzeros = 0;
    for (size_t r = 0; r < dim; ++r) {
      const double m = std::norm(e.at(r, s_local));
      if (m > 1e-24) ++nonzeros;
      p += m;
    }
    if (nonzeros > 1)
      throw NotSubmonomial("column has several nonzeros in " + ch.tag);
    probs[i] = p;
  }
  const double u = rng.uniform();
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return k - 1;
}

// Conjugates the gate matrix by X on every target with a pending X frame:
// A -> X_q A X_q. Diagonal gates stay diagonal with permuted entries.
inline Gate propagate_x(const Bits& xmask, const Gate& g) {
  uint32_t flip = 0;
  const size_t m = g.arity();
  for (size_t j = 0; j < m; ++j)
    if (xmask[g.targets()[j]]) flip |= uint32_t{1} << (m - 1 - j);
  if (flip == 0) return g;
  const CMat& a = g.matrix();
  CMat b = CMat::zero(a.dim);
  for (size_t r = 0; r < a.dim; ++r)
    for (size_t c = 0; c < a.dim; ++c) b.at(r, c) = a.at(r ^ flip, c ^ flip);
  return Gate(std::move(b), g.targets(), g.label(), /*check_unitary=*/false);
}

// --- Device noise model ---------------------------------------------------

struct NoiseModel {
  double p1 = 0.0;         // 1-qubit depolarizing probability
  double p2 = 0.0;         // 2-qubit depolarizing probability
  double p_readout = 0.0;  // per-bit readout flip probability
  double t_gate1 = 30e-9;  // seconds
  double t_gate2 = 80e-9;  // seconds
  double T1 = std::numeric_limits<double>::infinity();
  double T2 = std::numeric_limits<double>::infinity();
  bool idle_all_qubits = false;

  void validate() const {
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    if (!prob(p1) || !prob(p2) || !prob(p_readout))
      throw ParameterOutOfRange("noise probability outside [0,1]");
    if (!(t_gate1 > 0) || !(t_gate2 > 0))
      throw ParameterOutOfRange("gate durations must be positive");
    if (!(T1 > 0) || !(T2 > 0))
      throw ParameterOutOfRange("decoherence times must be positive");
    if (T2 > 2 * T1) throw ParameterOutOfRange("T2 must be <= 2*T1");
  }
};

// Key-value config with the seven device parameters (SI seconds), e.g.
//   p1 = 0.005
//   T1 = 100e-6
// `idle_all_qubits` is accepted as an optional boolean key.
inline NoiseModel read_noise_model(std::istream& is) {
  NoiseModel m;
  bool seen[7] = {};
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string key, value;
    if (!(ls >> key)) continue;
    if (!(ls >> value)) throw ParseError("missing value for key " + key);
    if (value == "=" && !(ls >> value))
      throw ParseError("missing value for key " + key);
    if (key == "p1") m.p1 = std::stod(value), seen[0] = true;
    else if (key == "p2") m.p2 = std::stod(value), seen[1] = true;
    else if (key == "p_readout") m.p_readout = std::stod(value), seen[2] = true;
    else if (key == "t_gate1") m.t_gate1 = std::stod(value), seen[3] = true;
    else if (key == "t_gate2") m.t_gate2 = std::stod(value), seen[4] = true;
    else if (key == "T1") m.T1 = std::stod(value), seen[5] = true;
    else if (key == "T2") m.T2 = std::stod(value), seen[6] = true;
    else if (key == "idle_all_qubits")
      m.idle_all_qubits = value == "1" || value == "true";
    else
      throw ParseError("unknown noise config key: " + key);
  }
  static const char* names[7] = {"p1", "p2", "p_readout", "t_gate1",
                                 "t_gate2", "T1", "T2"};
  for (int i = 0; i < 7; ++i)
    if (!seen[i]) throw ParseError(std::string("missing noise key ") + names[i]);
  m.validate();
  return m;
}

inline NoiseModel read_noise_model_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open noise config " + path);
  return read_noise_model(f);
}

inline void write_noise_model(std::ostream& os, const NoiseModel& m) {
  os << "p1 = " << detail::fmt_double(m.p1) << "\n"
     << "p2 = " << detail::fmt_double(m.p2) << "\n"
     << "p_readout = " << detail::fmt_double(m.p_readout) << "\n"
     << "t_gate1 = " << detail::fmt_double(m.t_gate1) << "\n"
     << "t_gate2 = " << detail::fmt_double(m.t_gate2) << "\n"
     << "T1 = " << detail::fmt_double(m.T1) << "\n"
     << "T2 = " << detail::fmt_double(m.T2) << "\n";
  if (m.idle_all_qubits) os << "idle_all_qubits = true\n";
}

// --- Noisy circuits --------------------------------------------------------

struct ChannelEvent {
  std::shared_ptr<const KrausChannel> channel;
  std::vector<uint32_t> targets;
};

// Gates interleaved with channel applications in execution order; readout
// flips are classical post-processing and live in `p_readout`.
struct NoisyCircuit {
  size_t n_qubits = 0;
  std::vector<std::variant<Gate, ChannelEvent>> events;
  double p_readout = 0.0;

  Circuit unitary_circuit() const {
    Circuit c(n_qubits);
    for (const auto& ev : events)
      if (const Gate* g = std::get_if<Gate>(&ev)) c.push_back(*g);
    return c;
  }

  size_t channel_count() const {
    size_t k = 0;
    for (const auto& ev : events)
      if (std::holds_alternative<ChannelEvent>(ev)) ++k;
    return k;
  }
};

// After each gate: depolarizing on the gate's qubits, then idle decoherence
// for the gate duration (one combined amp/phase event per qubit). With
// idle_all_qubits set, every qubit decoheres for each gate's duration.
inline NoisyCircuit insert_noise(const Circuit& c, const NoiseModel& model) {
  model.validate();
  NoisyCircuit out;
  out.n_qubits = c.n_qubits();
  out.p_readout = model.p_readout;

  std::shared_ptr<const KrausChannel> dep1, dep2, idle1, idle2;
  if (model.p1 > 0)
    dep1 = std::make_shared<const KrausChannel>(depolarize1(model.p1));
  if (model.p2 > 0)
    dep2 = std::make_shared<const KrausChannel>(depolarize2(model.p2));
  auto make_idle = [&](double t) -> std::shared_ptr<const KrausChannel> {
    if (idle_gamma(t, model.T1) <= 0 && idle_lambda(t, model.T1, model.T2) <= 0)
      return nullptr;
    return std::make_shared<const KrausChannel>(
        idle_channel(t, model.T1, model.T2));
  };
  idle1 = make_idle(model.t_gate1);
  idle2 = make_idle(model.t_gate2);

  for (const auto& g : c.gates()) {
    out.events.emplace_back(g);
    const size_t m = g.arity();
    if (m > 2)
      throw InvalidParams("noise model covers 1- and 2-qubit gates only");
    const auto& dep = m == 1 ? dep1 : dep2;
    if (dep) out.events.emplace_back(ChannelEvent{dep, g.targets()});
    const auto& idle = m == 1 ? idle1 : idle2;
    if (idle) {
      if (model.idle_all_qubits) {
        for (uint32_t q = 0; q < c.n_qubits(); ++q)
          out.events.emplace_back(ChannelEvent{idle, {q}});
      } else {
        for (uint32_t q : g.targets())
          out.events.emplace_back(ChannelEvent{idle, {q}});
      }
    }
  }
  return out;
}

inline Bits apply_readout_error(Bits bits, double p_readout, Rng& rng) {
  if (p_readout < 0 || p_readout > 1)
    throw ParameterOutOfRange("readout probability");
  if (p_readout == 0) return bits;
  for (auto& b : bits)
    if (rng.uniform() < p_readout) b ^= 1;
  return bits;
}

}  // namespace pwsim
