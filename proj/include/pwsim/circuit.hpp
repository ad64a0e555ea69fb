#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pwsim/bits.hpp"
#include "pwsim/errors.hpp"

namespace pwsim {

using cplx = std::complex<double>;

// Dense complex square matrix over the local basis of a gate. Row index is
// the output label, column index the input label; targets[0] is the most
// significant bit of a local label.
struct CMat {
  size_t dim = 0;
  std::vector<cplx> a;

  CMat() = default;
  CMat(size_t d, std::vector<cplx> entries) : dim(d), a(std::move(entries)) {
    if (a.size() != dim * dim) throw NonSquare("entry count != dim^2");
  }
  static CMat zero(size_t d) { return CMat(d, std::vector<cplx>(d * d)); }
  static CMat identity(size_t d) {
    CMat m = zero(d);
    for (size_t i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
  }

  cplx& at(size_t r, size_t c) { return a[r * dim + c]; }
  const cplx& at(size_t r, size_t c) const { return a[r * dim + c]; }

  CMat dagger() const {
    CMat m = zero(dim);
    for (size_t r = 0; r < dim; ++r)
      for (size_t c = 0; c < dim; ++c) m.at(r, c) = std::conj(at(c, r));
    return m;
  }

  CMat operator*(const CMat& o) const {
    CMat m = zero(dim);
    for (size_t r = 0; r < dim; ++r)
      for (size_t k = 0; k < dim; ++k) {
        const cplx v = at(r, k);
        if (v == 0.0) continue;
        for (size_t c = 0; c < dim; ++c) m.at(r, c) += v * o.at(k, c);
      }
    return m;
  }

  bool approx_identity(double tol) const {
    for (size_t r = 0; r < dim; ++r)
      for (size_t c = 0; c < dim; ++c) {
        const cplx want = r == c ? cplx(1.0) : cplx(0.0);
        if (std::abs(at(r, c) - want) > tol) return false;
      }
    return true;
  }
};

inline CMat kron(const CMat& x, const CMat& y) {
  CMat m = CMat::zero(x.dim * y.dim);
  for (size_t rx = 0; rx < x.dim; ++rx)
    for (size_t cx = 0; cx < x.dim; ++cx)
      for (size_t ry = 0; ry < y.dim; ++ry)
        for (size_t cy = 0; cy < y.dim; ++cy)
          m.at(rx * y.dim + ry, cx * y.dim + cy) = x.at(rx, cx) * y.at(ry, cy);
  return m;
}

inline bool is_power_of_two(size_t v) { return v != 0 && (v & (v - 1)) == 0; }

inline size_t log2_exact(size_t v) {
  size_t k = 0;
  while ((size_t{1} << k) < v) ++k;
  return k;
}

enum class GateKind : uint8_t { Diagonal, Monomial, General };

// Classification result. For Monomial, matrix == M_sigma * diag(phases),
// i.e. column x has its unique nonzero phases[x] at row sigma[x]. Diagonal
// is reported as Diagonal with sigma = identity.
struct GateClass {
  GateKind kind = GateKind::General;
  std::vector<uint32_t> sigma;
  std::vector<cplx> phases;
};

inline GateClass classify_gate(const CMat& m, double tol = 1e-12) {
  if (tol < 0) throw ParameterOutOfRange("negative tolerance");
  if (!is_power_of_two(m.dim)) throw NonPowerOfTwoDimension();
  GateClass cls;
  bool diagonal = true;
  for (size_t r = 0; r < m.dim && diagonal; ++r)
    for (size_t c = 0; c < m.dim; ++c)
      if (r != c && std::abs(m.at(r, c)) > tol) {
        diagonal = false;
        break;
      }
  if (diagonal) {
    cls.kind = GateKind::Diagonal;
    cls.sigma.resize(m.dim);
    cls.phases.resize(m.dim);
    for (size_t i = 0; i < m.dim; ++i) {
      cls.sigma[i] = static_cast<uint32_t>(i);
      cls.phases[i] = m.at(i, i);
    }
    return cls;
  }
  // Monomial test: exactly one entry above tol per row and per column.
  std::vector<int> row_hit(m.dim, -1);
  bool monomial = true;
  cls.sigma.assign(m.dim, 0);
  cls.phases.assign(m.dim, 0.0);
  for (size_t c = 0; c < m.dim && monomial; ++c) {
    int found = -1;
    for (size_t r = 0; r < m.dim; ++r) {
      if (std::abs(m.at(r, c)) > tol) {
        if (found >= 0 || row_hit[r] >= 0) {
          monomial = false;
          break;
        }
        found = static_cast<int>(r);
      }
    }
    if (found < 0) monomial = false;
    if (monomial) {
      row_hit[found] = static_cast<int>(c);
      cls.sigma[c] = static_cast<uint32_t>(found);
      cls.phases[c] = m.at(found, c);
    }
  }
  if (monomial) {
    cls.kind = GateKind::Monomial;
    return cls;
  }
  cls.kind = GateKind::General;
  cls.sigma.clear();
  cls.phases.clear();
  return cls;
}

// One connected component of the nonzero-pattern graph of a gate matrix.
struct LocalBlock {
  std::vector<uint32_t> labels;  // sorted ascending
};

namespace detail {

// Component id per local label for the graph with edges {x,y} where
// |A_{x,y}| > tol.
inline std::vector<uint32_t> pattern_components(const CMat& m, double tol) {
  const size_t d = m.dim;
  std::vector<uint32_t> comp(d, UINT32_MAX);
  uint32_t next = 0;
  std::vector<uint32_t> stack;
  for (size_t s = 0; s < d; ++s) {
    if (comp[s] != UINT32_MAX) continue;
    comp[s] = next;
    stack.assign(1, static_cast<uint32_t>(s));
    while (!stack.empty()) {
      const uint32_t v = stack.back();
      stack.pop_back();
      for (size_t u = 0; u < d; ++u) {
        if (comp[u] != UINT32_MAX) continue;
        if (std::abs(m.at(v, u)) > tol || std::abs(m.at(u, v)) > tol) {
          comp[u] = next;
          stack.push_back(static_cast<uint32_t>(u));
        }
      }
    }
    ++next;
  }
  return comp;
}

}  // namespace detail

inline LocalBlock block_decompose(const CMat& m, uint32_t local_state,
                                  double tol = 1e-12) {
  if (!is_power_of_two(m.dim)) throw NonPowerOfTwoDimension();
  if (local_state >= m.dim) throw IndexOutOfRange("local state out of range");
  const auto comp = detail::pattern_components(m, tol);
  LocalBlock b;
  for (uint32_t x = 0; x < m.dim; ++x)
    if (comp[x] == comp[local_state]) b.labels.push_back(x);
  return b;
}

// Immutable per-gate payload, shared between circuit copies and prefixes.
struct GateData {
  CMat matrix;
  std::vector<uint32_t> targets;
  std::string label;
  GateClass cls;
  std::vector<uint32_t> comp_id;           // per local label
  std::vector<std::vector<uint32_t>> blocks;  // sorted labels per component
  uint32_t diag_mask = 0;  // bit j set: diagonal on targets[j]
  bool unitary = true;
};

class Gate {
 public:
  Gate() = default;
  // `check_unitary` is relaxed for Kraus fragments fused into circuits
  // during noisy sampling.
  Gate(CMat matrix, std::vector<uint32_t> targets, std::string label,
       bool check_unitary = true, double tol = 1e-12) {
    auto d = std::make_shared<GateData>();
    if (!is_power_of_two(matrix.dim)) throw NonPowerOfTwoDimension();
    const size_t m = log2_exact(matrix.dim);
    if (targets.size() != m)
      throw InvalidParams("matrix dimension does not match target count");
    for (size_t i = 0; i < targets.size(); ++i)
      for (size_t j = i + 1; j < targets.size(); ++j)
        if (targets[i] == targets[j]) throw InvalidParams("duplicate targets");
    d->cls = classify_gate(matrix, tol);
    if (check_unitary) {
      if (!(matrix.dagger() * matrix).approx_identity(1e-10))
        throw InvalidParams("gate matrix is not unitary: " + label);
      d->unitary = true;
    } else {
      d->unitary = (matrix.dagger() * matrix).approx_identity(1e-10);
    }
    d->comp_id = detail::pattern_components(matrix, tol);
    uint32_t ncomp = 0;
    for (uint32_t c : d->comp_id) ncomp = std::max(ncomp, c + 1);
    d->blocks.resize(ncomp);
    for (uint32_t x = 0; x < matrix.dim; ++x)
      d->blocks[d->comp_id[x]].push_back(x);
    // diagonal-on-qubit flags: bit j of a local label is targets[j], with
    // targets[0] most significant.
    for (size_t j = 0; j < m; ++j) {
      const uint32_t bit = uint32_t{1} << (m - 1 - j);
      bool diag = true;
      for (size_t r = 0; r < matrix.dim && diag; ++r)
        for (size_t c = 0; c < matrix.dim; ++c)
          if (((r ^ c) & bit) && std::abs(matrix.at(r, c)) > tol) {
            diag = false;
            break;
          }
      if (diag) d->diag_mask |= uint32_t{1} << j;
    }
    d->matrix = std::move(matrix);
    d->targets = std::move(targets);
    d->label = std::move(label);
    data_ = std::move(d);
  }

  const CMat& matrix() const { return data_->matrix; }
  const std::vector<uint32_t>& targets() const { return data_->targets; }
  size_t arity() const { return data_->targets.size(); }
  const std::string& label() const { return data_->label; }
  const GateClass& cls() const { return data_->cls; }
  GateKind kind() const { return data_->cls.kind; }
  bool unitary() const { return data_->unitary; }
  bool diagonal_on(size_t j) const { return (data_->diag_mask >> j) & 1; }
  uint32_t diag_mask() const { return data_->diag_mask; }
  const std::vector<std::vector<uint32_t>>& blocks() const {
    return data_->blocks;
  }
  const std::vector<uint32_t>& block_of(uint32_t local_state) const {
    return data_->blocks[data_->comp_id[local_state]];
  }

  // Local label of the bits of `s` at this gate's targets.
  uint32_t local_label(const Bits& s) const {
    uint32_t v = 0;
    for (uint32_t q : data_->targets) v = (v << 1) | s[q];
    return v;
  }

  bool same_data(const Gate& o) const { return data_ == o.data_; }

 private:
  std::shared_ptr<const GateData> data_;
};

// Expand a local block to the set of full-width strings agreeing with `s`
// off the targets.
inline std::vector<Bits> global_block(const LocalBlock& block, const Bits& s,
                                      const std::vector<uint32_t>& targets) {
  std::vector<Bits> out;
  out.reserve(block.labels.size());
  const size_t m = targets.size();
  for (uint32_t label : block.labels) {
    Bits x = s;
    for (size_t j = 0; j < m; ++j) x[targets[j]] = (label >> (m - 1 - j)) & 1;
    out.push_back(std::move(x));
  }
  return out;
}

class Circuit {
 public:
  Circuit() = default;
  explicit Circuit(size_t n_qubits) : n_(n_qubits) {}
  Circuit(size_t n_qubits, std::vector<Gate> gates) : n_(n_qubits) {
    for (auto& g : gates) push_back(std::move(g));
  }

  size_t n_qubits() const { return n_; }
  size_t size() const { return gates_.size(); }
  const Gate& gate(size_t t) const { return gates_[t]; }
  const std::vector<Gate>& gates() const { return gates_; }

  void push_back(Gate g) {
    for (uint32_t q : g.targets())
      if (q >= n_) throw IndexOutOfRange("gate target outside circuit width");
    gates_.push_back(std::move(g));
  }

  Circuit prefix(size_t t) const {
    if (t > gates_.size()) throw IndexOutOfRange("prefix length exceeds size");
    Circuit c(n_);
    c.gates_.assign(gates_.begin(), gates_.begin() + t);
    return c;
  }

 private:
  size_t n_ = 0;
  std::vector<Gate> gates_;
};

inline Circuit prefix(const Circuit& c, size_t t) { return c.prefix(t); }

struct CircuitStats {
  size_t qsize = 0;
  size_t locality = 0;
  size_t max_block_size = 0;
};

inline CircuitStats circuit_stats(const Circuit& c) {
  CircuitStats st;
  for (const auto& g : c.gates()) {
    st.locality = std::max(st.locality, g.arity());
    if (g.kind() == GateKind::General) {
      ++st.qsize;
      for (const auto& b : g.blocks())
        st.max_block_size = std::max(st.max_block_size, b.size());
    }
  }
  return st;
}

// --- Serialization -----------------------------------------------------
//
// Line-oriented text format:
//   qubits <n>
//   <label> <targets,comma-separated> <row-major entries as re,im pairs>
// Doubles are printed with %.17g so the round trip is exact.

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_circuit(std::ostream& os, const Circuit& c) {
  os << "qubits " << c.n_qubits() << "\n";
  for (const auto& g : c.gates()) {
    std::string label = g.label().empty() ? "g" : g.label();
    for (char& ch : label)
      if (std::isspace(static_cast<unsigned char>(ch))) ch = '_';
    os << label << ' ';
    for (size_t j = 0; j < g.targets().size(); ++j) {
      if (j) os << ',';
      os << g.targets()[j];
    }
    for (const cplx& v : g.matrix().a)
      os << ' ' << detail::fmt_double(v.real()) << ','
         << detail::fmt_double(v.imag());
    os << "\n";
  }
}

inline std::string circuit_to_string(const Circuit& c) {
  std::ostringstream ss;
  write_circuit(ss, c);
  return ss.str();
}

inline Circuit read_circuit(std::istream& is) {
  std::string tok;
  if (!(is >> tok) || tok != "qubits") throw ParseError("missing qubits header");
  size_t n = 0;
  if (!(is >> n)) throw ParseError("bad qubit count");
  Circuit c(n);
  std::string line;
  std::getline(is, line);  // rest of header line
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string label, targets_str;
    if (!(ls >> label >> targets_str)) throw ParseError("bad gate line");
    std::vector<uint32_t> targets;
    {
      std::istringstream ts(targets_str);
      std::string part;
      while (std::getline(ts, part, ','))
        targets.push_back(static_cast<uint32_t>(std::stoul(part)));
    }
    std::vector<cplx> entries;
    std::string pair;
    while (ls >> pair) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw ParseError("bad complex pair");
      entries.emplace_back(std::stod(pair.substr(0, comma)),
                           std::stod(pair.substr(comma + 1)));
    }
    const size_t dim = size_t{1} << targets.size();
    if (entries.size() != dim * dim)
      throw ParseError("entry count does not match target count");
    c.push_back(Gate(CMat(dim, std::move(entries)), std::move(targets), label,
                     /*check_unitary=*/false));
  }
  return c;
}

inline Circuit circuit_from_string(const std::string& s) {
  std::istringstream ss(s);
  return read_circuit(ss);
}

}  // namespace pwsim
