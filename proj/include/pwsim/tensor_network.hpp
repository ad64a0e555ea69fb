#pragma once

// Tensor-network amplitude oracle: builds a network for <x|C_t|0^n> with
// diagonal-leg compression, plans a deterministic pairwise contraction order
// once per gate position, and evaluates single or batched amplitudes.
//
// Legs are hyperedges: identifying the in/out legs of a gate diagonal on a
// qubit lets one leg touch any number of tensor axes. Contraction follows
// einsum repeated-index semantics (a shared leg is summed only once all its
// incidences have been merged).

#include <array>
#include <atomic>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pwsim/circuit.hpp"

namespace pwsim {

using LegId = uint32_t;
inline constexpr LegId kNoLeg = UINT32_MAX;

struct Tensor {
  std::vector<LegId> legs;  // legs[0] is the most significant index bit
  std::vector<cplx> data;   // size 2^legs.size()
};

struct TensorNetwork {
  size_t n_qubits = 0;
  uint32_t num_legs = 0;
  std::vector<Tensor> tensors;
  std::vector<uint8_t> leg_input_fixed;    // input leg, pinned to 0
  std::vector<int32_t> leg_output_qubit;   // qubit whose final leg this is, or -1
  std::vector<int8_t> leg_assignment;      // resolved 0/1, or -1
  std::vector<LegId> final_leg;            // per qubit
  // (tensor, axis) that created each leg; (kNoLeg, 0) for input legs.
  std::vector<std::pair<uint32_t, uint32_t>> leg_creator;
};

struct PlanStep {
  uint32_t a = 0, b = 0;  // tensor ids; the result takes the next free id
};

struct ContractionPlan {
  size_t n_initial = 0;
  std::vector<PlanStep> steps;
  size_t peak_rank = 0;
  double est_cost = 0.0;  // summed multiply-add count
  bool budget_breached = false;
  std::vector<LegId> slice_legs;

  std::string to_string() const {
    std::ostringstream os;
    os << "plan tensors=" << n_initial << " steps=" << steps.size()
       << " peak_rank=" << peak_rank << " est_cost=" << est_cost;
    if (budget_breached) os << " budget_breached";
    if (!slice_legs.empty()) {
      os << " slices=[";
      for (size_t i = 0; i < slice_legs.size(); ++i)
        os << (i ? "," : "") << slice_legs[i];
      os << "]";
    }
    os << "\n";
    size_t next = n_initial;
    for (const auto& s : steps)
      os << "  contract " << s.a << " x " << s.b << " -> " << next++ << "\n";
    return os.str();
  }

  bool operator==(const ContractionPlan& o) const {
    if (n_initial != o.n_initial || steps.size() != o.steps.size()) return false;
    for (size_t i = 0; i < steps.size(); ++i)
      if (steps[i].a != o.steps[i].a || steps[i].b != o.steps[i].b) return false;
    return slice_legs == o.slice_legs;
  }
};

// Per-chain modifications used by noisy sampling: frozen X-conjugation masks
// per gate and diagonal weights fused onto legs. Identity when null.
struct ChainMods {
  const uint8_t* gate_conj = nullptr;                // per gate, bit j = targets[j]
  const uint8_t* leg_has_weight = nullptr;           // per leg
  const std::array<cplx, 2>* leg_weight = nullptr;   // per leg
};

struct OracleOptions {
  size_t rank_budget = 62;
  size_t memory_cap_entries = size_t{1} << 26;  // complex entries per tensor
  int max_slice_legs = 8;
  bool identify_diagonal = true;
  // Plans per position: deterministic greedy, and (when enabled) the
  // restriction of the full-circuit plan; the cheaper one is used.
  bool use_greedy = true;
  bool restrict_from_full = true;
  int planner_variants = 3;
};

// --- Network construction -------------------------------------------------

namespace tn_detail {

// Dense gate tensor in axis form. Axes are listed qubit-major: for each
// target j, a single merged axis if the gate is diagonal on that qubit,
// otherwise an out axis followed by an in axis.
struct GateAxes {
  std::vector<uint8_t> qubit_pos;  // target index j per axis
  std::vector<uint8_t> is_out;     // 1 = out or merged, 0 = in
  std::vector<uint8_t> merged;     // in/out identified
  std::vector<cplx> data;
};

inline GateAxes make_gate_axes(const Gate& g, bool identify_diagonal) {
  GateAxes ga;
  const size_t m = g.arity();
  for (size_t j = 0; j < m; ++j) {
    if (identify_diagonal && g.diagonal_on(j)) {
      ga.qubit_pos.push_back(static_cast<uint8_t>(j));
      ga.is_out.push_back(1);
      ga.merged.push_back(1);
    } else {
      ga.qubit_pos.push_back(static_cast<uint8_t>(j));
      ga.is_out.push_back(1);
      ga.merged.push_back(0);
      ga.qubit_pos.push_back(static_cast<uint8_t>(j));
      ga.is_out.push_back(0);
      ga.merged.push_back(0);
    }
  }
  const size_t rank = ga.qubit_pos.size();
  ga.data.assign(size_t{1} << rank, 0.0);
  const CMat& a = g.matrix();
  for (size_t idx = 0; idx < ga.data.size(); ++idx) {
    uint32_t out = 0, in = 0;
    for (size_t ax = 0; ax < rank; ++ax) {
      const uint32_t bit = (idx >> (rank - 1 - ax)) & 1;
      const uint32_t lbit = bit << (m - 1 - ga.qubit_pos[ax]);
      if (ga.merged[ax]) {
        out |= lbit;
        in |= lbit;
      } else if (ga.is_out[ax]) {
        out |= lbit;
      } else {
        in |= lbit;
      }
    }
    ga.data[idx] = a.at(out, in);
  }
  return ga;
}

}  // namespace tn_detail

inline TensorNetwork build_network(const Circuit& c,
                                   const std::optional<Bits>& output_bits = {},
                                   bool identify_diagonal = true) {
  if (output_bits && output_bits->size() != c.n_qubits())
    throw LengthMismatch("output bit count != qubit count");
  TensorNetwork net;
  net.n_qubits = c.n_qubits();
  std::vector<LegId> live(c.n_qubits());
  for (size_t q = 0; q < c.n_qubits(); ++q) {
    live[q] = net.num_legs++;
    net.leg_input_fixed.push_back(1);
    net.leg_creator.emplace_back(kNoLeg, 0);
  }
  for (size_t gi = 0; gi < c.size(); ++gi) {
    const Gate& g = c.gate(gi);
    const auto ga = tn_detail::make_gate_axes(g, identify_diagonal);
    Tensor t;
    t.data = ga.data;
    for (size_t ax = 0; ax < ga.qubit_pos.size(); ++ax) {
      const uint32_t q = g.targets()[ga.qubit_pos[ax]];
      if (ga.merged[ax]) {
        t.legs.push_back(live[q]);
      } else if (ga.is_out[ax]) {
        const LegId fresh = net.num_legs++;
        net.leg_input_fixed.push_back(0);
        net.leg_creator.emplace_back(static_cast<uint32_t>(gi),
                                     static_cast<uint32_t>(ax));
        t.legs.push_back(fresh);
      } else {
        t.legs.push_back(live[q]);
      }
    }
    // advance live legs after in-axes have been recorded
    size_t ax = 0;
    for (size_t j = 0; j < g.arity(); ++j) {
      const uint32_t q = g.targets()[j];
      if (ga.merged[ax]) {
        ax += 1;  // live leg unchanged
      } else {
        live[q] = t.legs[ax];
        ax += 2;
      }
    }
    net.tensors.push_back(std::move(t));
  }
  net.leg_output_qubit.assign(net.num_legs, -1);
  net.leg_assignment.assign(net.num_legs, -1);
  net.final_leg = live;
  for (size_t q = 0; q < c.n_qubits(); ++q)
    net.leg_output_qubit[live[q]] = static_cast<int32_t>(q);
  for (LegId l = 0; l < net.num_legs; ++l)
    if (net.leg_input_fixed[l]) net.leg_assignment[l] = 0;
  if (output_bits)
    for (size_t q = 0; q < c.n_qubits(); ++q) {
      const LegId l = live[q];
      const int8_t v = static_cast<int8_t>((*output_bits)[q]);
      if (net.leg_assignment[l] >= 0 && net.leg_assignment[l] != v) {
        // input leg doubling as output with a conflicting value: the
        // network value is identically zero; keep the input pin and record
        // the conflict via a sentinel handled by contract().
        net.leg_assignment[l] = 2 + v;  // 2: needs 0 got 1 impossible marker
      } else {
        net.leg_assignment[l] = v;
      }
    }
  return net;
}

// --- Planning ---------------------------------------------------------------

namespace tn_detail {

struct PlanState {
  // sorted leg lists of live tensors; empty optional = consumed
  std::vector<std::optional<std::vector<LegId>>> legs;
  std::vector<uint32_t> leg_rc;   // remaining incidences
  std::vector<uint8_t> leg_open;  // open legs are never summed

  size_t contract_rank(uint32_t a, uint32_t b, size_t* union_rank) const {
    const auto& la = *legs[a];
    const auto& lb = *legs[b];
    size_t u = 0, res = 0, i = 0, j = 0;
    while (i < la.size() || j < lb.size()) {
      LegId l;
      bool shared = false;
      if (j >= lb.size() || (i < la.size() && la[i] < lb[j])) {
        l = la[i++];
      } else if (i >= la.size() || lb[j] < la[i]) {
        l = lb[j++];
      } else {
        l = la[i];
        ++i;
        ++j;
        shared = true;
      }
      ++u;
      const bool summed = shared && leg_rc[l] == 2 && !leg_open[l];
      if (!summed) ++res;
    }
    if (union_rank) *union_rank = u;
    return res;
  }

  std::vector<LegId> apply(uint32_t a, uint32_t b) {
    const auto la = std::move(*legs[a]);
    const auto lb = std::move(*legs[b]);
    legs[a].reset();
    legs[b].reset();
    std::vector<LegId> out;
    size_t i = 0, j = 0;
    while (i < la.size() || j < lb.size()) {
      LegId l;
      bool shared = false;
      if (j >= lb.size() || (i < la.size() && la[i] < lb[j])) {
        l = la[i++];
      } else if (i >= la.size() || lb[j] < la[i]) {
        l = lb[j++];
      } else {
        l = la[i];
        ++i;
        ++j;
        shared = true;
      }
      if (shared) {
        leg_rc[l] -= 1;
        if (leg_rc[l] == 1 && !leg_open[l]) {
          leg_rc[l] = 0;  // summed away
          continue;
        }
      }
      out.push_back(l);
    }
    legs.push_back(out);
    return out;
  }
};

inline PlanState make_plan_state(
    const std::vector<std::vector<LegId>>& tensor_legs,
    const std::vector<uint8_t>& leg_open, uint32_t num_legs) {
  PlanState st;
  st.leg_rc.assign(num_legs, 0);
  st.leg_open = leg_open;
  st.leg_open.resize(num_legs, 0);
  for (const auto& tl : tensor_legs) {
    st.legs.emplace_back(tl);
    for (LegId l : tl) st.leg_rc[l] += 1;
  }
  // an open leg keeps one phantom incidence so it survives to the root
  for (LegId l = 0; l < num_legs; ++l)
    if (st.leg_open[l]) st.leg_rc[l] += 1;
  return st;
}

// Greedy planner. Variants differ in objective ordering; all deterministic.
//   0: (result rank, union rank, ids)
//   1: (result rank - max input rank, result rank, union rank, ids)
//   2: (union rank, result rank, ids)
inline ContractionPlan greedy_plan(
    const std::vector<std::vector<LegId>>& tensor_legs,
    const std::vector<uint8_t>& leg_open, uint32_t num_legs, size_t budget,
    int variant) {
  ContractionPlan plan;
  plan.n_initial = tensor_legs.size();
  if (tensor_legs.empty()) return plan;
  PlanState st = make_plan_state(tensor_legs, leg_open, num_legs);
  for (const auto& tl : tensor_legs)
    plan.peak_rank = std::max(plan.peak_rank, tl.size());

  size_t alive = tensor_legs.size();
  // leg -> incident live tensors, maintained lazily
  std::vector<std::vector<uint32_t>> incid(num_legs);
  for (uint32_t ti = 0; ti < tensor_legs.size(); ++ti)
    for (LegId l : tensor_legs[ti]) incid[l].push_back(ti);

  while (alive > 1) {
    long best_score0 = 0, best_score1 = 0, best_score2 = 0;
    uint32_t best_a = UINT32_MAX, best_b = UINT32_MAX;
    bool found = false, found_in_budget = false;
    auto consider = [&](uint32_t a, uint32_t b) {
      if (a > b) std::swap(a, b);
      size_t u = 0;
      const size_t res = st.contract_rank(a, b, &u);
      const bool fits = res <= budget;
      long s0, s1, s2;
      switch (variant) {
        case 1:
          s0 = static_cast<long>(res) -
               static_cast<long>(std::max(st.legs[a]->size(), st.legs[b]->size()));
          s1 = static_cast<long>(res);
          s2 = static_cast<long>(u);
          break;
        case 2:
          s0 = static_cast<long>(u);
          s1 = static_cast<long>(res);
          s2 = 0;
          break;
        default:
          s0 = static_cast<long>(res);
          s1 = static_cast<long>(u);
          s2 = 0;
      }
      const bool better = [&] {
        if (found_in_budget && !fits) return false;
        if (!found) return true;
        if (fits && !found_in_budget) return true;
        if (s0 != best_score0) return s0 < best_score0;
        if (s1 != best_score1) return s1 < best_score1;
        if (s2 != best_score2) return s2 < best_score2;
        if (a != best_a) return a < best_a;
        return b < best_b;
      }();
      if (better) {
        best_score0 = s0;
        best_score1 = s1;
        best_score2 = s2;
        best_a = a;
        best_b = b;
        found = true;
        found_in_budget = found_in_budget || fits;
      }
    };

    for (LegId l = 0; l < num_legs; ++l) {
      auto& inc = incid[l];
      size_t w = 0;
      for (uint32_t ti : inc)
        if (st.legs[ti].has_value()) inc[w++] = ti;
      inc.resize(w);
      for (size_t i = 0; i < inc.size(); ++i)
        for (size_t j = i + 1; j < inc.size(); ++j) consider(inc[i], inc[j]);
    }
    if (!found) {
      // disconnected components: cheapest outer product, lowest ids first
      std::vector<uint32_t> live;
      for (uint32_t ti = 0; ti < st.legs.size(); ++ti)
        if (st.legs[ti].has_value()) live.push_back(ti);
      for (size_t i = 0; i < live.size(); ++i)
        for (size_t j = i + 1; j < live.size(); ++j) consider(live[i], live[j]);
    }
    if (!found_in_budget) plan.budget_breached = true;

    size_t u = 0;
    const size_t res_rank = st.contract_rank(best_a, best_b, &u);
    plan.est_cost += std::ldexp(1.0, static_cast<int>(u));
    plan.peak_rank = std::max(plan.peak_rank, res_rank);
    const auto out_legs = st.apply(best_a, best_b);
    const uint32_t new_id = static_cast<uint32_t>(st.legs.size() - 1);
    for (LegId l : out_legs) incid[l].push_back(new_id);
    plan.steps.push_back({best_a, best_b});
    --alive;
  }
  return plan;
}

// Derives a plan for a subset of the tensors by restriction: steps whose
// inputs both survive are kept, steps with one survivor alias it, steps with
// none vanish.
inline ContractionPlan restrict_plan(const ContractionPlan& full,
                                     const std::vector<uint8_t>& survives,
                                     size_t n_restricted) {
  ContractionPlan out;
  out.n_initial = n_restricted;
  std::vector<int64_t> alias(full.n_initial + full.steps.size(), -1);
  {
    size_t next = 0;
    for (size_t i = 0; i < full.n_initial; ++i)
      if (survives[i]) alias[i] = static_cast<int64_t>(next++);
  }
  size_t next_new = n_restricted;
  size_t full_next = full.n_initial;
  for (const auto& s : full.steps) {
    const int64_t a = alias[s.a], b = alias[s.b];
    if (a >= 0 && b >= 0) {
      out.steps.push_back(
          {static_cast<uint32_t>(a), static_cast<uint32_t>(b)});
      alias[full_next++] = static_cast<int64_t>(next_new++);
    } else {
      alias[full_next++] = a >= 0 ? a : b;
    }
  }
  return out;
}

// Recomputes peak/cost of a plan against concrete tensor legs.
inline void price_plan(ContractionPlan& plan,
                       const std::vector<std::vector<LegId>>& tensor_legs,
                       const std::vector<uint8_t>& leg_open,
                       uint32_t num_legs) {
  plan.est_cost = 0.0;
  plan.peak_rank = 0;
  for (const auto& tl : tensor_legs)
    plan.peak_rank = std::max(plan.peak_rank, tl.size());
  PlanState st = make_plan_state(tensor_legs, leg_open, num_legs);
  for (const auto& s : plan.steps) {
    size_t u = 0;
    const size_t res = st.contract_rank(s.a, s.b, &u);
    plan.est_cost += std::ldexp(1.0, static_cast<int>(u));
    plan.peak_rank = std::max(plan.peak_rank, res);
    st.apply(s.a, s.b);
  }
}

}  // namespace tn_detail

// Spec-level planner over a built network: plans the contraction of the
// tensors' unassigned legs down to a single tensor (a scalar when every
// open leg is assigned).
// A leg is open when it is a qubit's final leg left without an assignment;
// unassigned internal legs are ordinary contraction indices.
inline bool leg_is_open(const TensorNetwork& net, LegId l) {
  return net.leg_assignment[l] < 0 && net.leg_output_qubit[l] >= 0;
}

inline ContractionPlan plan_contraction(const TensorNetwork& net,
                                        size_t rank_budget = 62,
                                        int variant = 0) {
  if (net.tensors.empty()) throw EmptyNetwork();
  std::vector<std::vector<LegId>> tensor_legs;
  std::vector<uint8_t> leg_open(net.num_legs, 0);
  for (LegId l = 0; l < net.num_legs; ++l) leg_open[l] = leg_is_open(net, l);
  size_t max_rank = 0;
  for (const auto& t : net.tensors) {
    std::vector<LegId> legs;
    for (LegId l : t.legs)
      if (net.leg_assignment[l] < 0) legs.push_back(l);
    std::sort(legs.begin(), legs.end());
    max_rank = std::max(max_rank, legs.size());
    tensor_legs.push_back(std::move(legs));
  }
  if (rank_budget < max_rank)
    throw InvalidParams("rank budget below initial tensor rank");
  return tn_detail::greedy_plan(tensor_legs, leg_open, net.num_legs,
                                rank_budget, variant);
}

// --- Execution ---------------------------------------------------------------

namespace tn_detail {

struct ExecStep {
  uint32_t a = 0, b = 0, out = 0;
  uint8_t nd = 0, nx = 0, ny = 0, ns = 0;
  size_t out_offset = 0;  // into the arena
  std::vector<uint32_t> d_a, d_b, x_a, y_b, s_a, s_b;
};

inline std::vector<uint32_t> offset_table(const std::vector<LegId>& group,
                                          const std::vector<LegId>& legs) {
  const size_t k = group.size();
  std::vector<uint32_t> stride(k, 0);
  for (size_t j = 0; j < k; ++j)
    for (size_t p = 0; p < legs.size(); ++p)
      if (legs[p] == group[j]) {
        stride[j] = uint32_t{1} << (legs.size() - 1 - p);
        break;
      }
  std::vector<uint32_t> tab(size_t{1} << k, 0);
  for (size_t idx = 0; idx < tab.size(); ++idx) {
    uint32_t off = 0;
    for (size_t j = 0; j < k; ++j)
      if ((idx >> (k - 1 - j)) & 1) off += stride[j];
    tab[idx] = off;
  }
  return tab;
}

// Compiled plan: step tables plus arena layout, built once per prepared
// query shape and reused for every evaluation.
struct ExecPlan {
  std::vector<ExecStep> steps;
  size_t arena_entries = 0;
  uint32_t result_slot = 0;
  std::vector<LegId> result_legs;

  // Builds from initial tensor legs (assigned/sliced axes already removed).
  // Leg lists are taken as the tensors' axis layouts; intermediates use the
  // [d, x, y] layout produced by the executor.
  void build(const std::vector<std::vector<LegId>>& tensor_legs,
             const std::vector<uint8_t>& leg_open, uint32_t num_legs,
             const ContractionPlan& plan) {
    steps.clear();
    arena_entries = 0;
    std::vector<uint32_t> rc(num_legs, 0);
    for (const auto& tl : tensor_legs)
      for (LegId l : tl) rc[l] += 1;
    for (LegId l = 0; l < num_legs; ++l)
      if (l < leg_open.size() && leg_open[l]) rc[l] += 1;
    std::vector<std::vector<LegId>> all_legs = tensor_legs;
    for (const auto& ps : plan.steps) {
      const auto& la = all_legs[ps.a];
      const auto& lb = all_legs[ps.b];
      ExecStep es;
      es.a = ps.a;
      es.b = ps.b;
      std::vector<LegId> dg, xg, yg, sg;
      auto contains = [](const std::vector<LegId>& v, LegId l) {
        for (LegId e : v)
          if (e == l) return true;
        return false;
      };
      for (LegId l : la) {
        if (!contains(lb, l)) {
          xg.push_back(l);
        } else if (rc[l] == 2 && !(l < leg_open.size() && leg_open[l])) {
          sg.push_back(l);
        } else {
          dg.push_back(l);
        }
      }
      for (LegId l : lb)
        if (!contains(la, l)) yg.push_back(l);
      std::sort(dg.begin(), dg.end());
      std::sort(xg.begin(), xg.end());
      std::sort(yg.begin(), yg.end());
      std::sort(sg.begin(), sg.end());
      for (LegId l : sg) rc[l] = 0;
      for (LegId l : dg) rc[l] -= 1;
      es.nd = static_cast<uint8_t>(dg.size());
      es.nx = static_cast<uint8_t>(xg.size());
      es.ny = static_cast<uint8_t>(yg.size());
      es.ns = static_cast<uint8_t>(sg.size());
      es.d_a = offset_table(dg, la);
      es.d_b = offset_table(dg, lb);
      es.x_a = offset_table(xg, la);
      es.y_b = offset_table(yg, lb);
      es.s_a = offset_table(sg, la);
      es.s_b = offset_table(sg, lb);
      std::vector<LegId> out_legs;
      out_legs.reserve(dg.size() + xg.size() + yg.size());
      out_legs.insert(out_legs.end(), dg.begin(), dg.end());
      out_legs.insert(out_legs.end(), xg.begin(), xg.end());
      out_legs.insert(out_legs.end(), yg.begin(), yg.end());
      es.out = static_cast<uint32_t>(all_legs.size());
      es.out_offset = arena_entries;
      arena_entries += size_t{1} << out_legs.size();
      all_legs.push_back(out_legs);
      steps.push_back(std::move(es));
    }
    result_slot = steps.empty() ? 0 : steps.back().out;
    result_legs = all_legs.empty() ? std::vector<LegId>{} : all_legs[result_slot];
  }

  // Runs the compiled steps; `slots` holds initial tensor pointers and gets
  // extended with arena pointers. Returns the result pointer.
  const cplx* run(std::vector<const cplx*>& slots, std::vector<cplx>& arena) const {
    if (arena.size() < arena_entries) arena.resize(arena_entries);
    for (const auto& es : steps) {
      const cplx* A = slots[es.a];
      const cplx* B = slots[es.b];
      cplx* O = arena.data() + es.out_offset;
      const uint32_t nd = uint32_t{1} << es.nd;
      const uint32_t nx = uint32_t{1} << es.nx;
      const uint32_t ny = uint32_t{1} << es.ny;
      const uint32_t ns = uint32_t{1} << es.ns;
      for (uint32_t d = 0; d < nd; ++d) {
        const cplx* Ad = A + es.d_a[d];
        const cplx* Bd = B + es.d_b[d];
        cplx* Od = O + (size_t{d} << (es.nx + es.ny));
        for (uint32_t x = 0; x < nx; ++x) {
          const cplx* Adx = Ad + es.x_a[x];
          cplx* Odx = Od + (size_t{x} << es.ny);
          for (uint32_t y = 0; y < ny; ++y) {
            const cplx* Bdy = Bd + es.y_b[y];
            cplx acc = 0.0;
            for (uint32_t s = 0; s < ns; ++s)
              acc += Adx[es.s_a[s]] * Bdy[es.s_b[s]];
            Odx[y] = acc;
          }
        }
      }
      slots.push_back(O);
    }
    return slots[result_slot];
  }
};

}  // namespace tn_detail

// Reference contraction of a built network along a plan. All open legs must
// be assigned; returns the scalar network value. Bit-reproducible for a
// fixed plan.
inline cplx contract(const TensorNetwork& net, const ContractionPlan& plan) {
  if (net.tensors.empty()) throw EmptyNetwork();
  for (LegId l = 0; l < net.num_legs; ++l) {
    if (net.leg_assignment[l] >= 2) return 0.0;  // conflicting double pin
    if (leg_is_open(net, l)) throw UnassignedOpenLeg();
  }
  // Slice every tensor's assigned axes.
  std::vector<std::vector<cplx>> sliced_data;
  std::vector<std::vector<LegId>> tensor_legs;
  for (const auto& t : net.tensors) {
    std::vector<LegId> legs;
    for (size_t ax = 0; ax < t.legs.size(); ++ax)
      if (net.leg_assignment[t.legs[ax]] < 0) legs.push_back(t.legs[ax]);
    const size_t r = t.legs.size();
    const size_t kr = legs.size();
    std::vector<cplx> data(size_t{1} << kr);
    for (size_t idx = 0; idx < data.size(); ++idx) {
      size_t full = 0;
      size_t kpos = 0;
      for (size_t ax = 0; ax < r; ++ax) {
        const int8_t v = net.leg_assignment[t.legs[ax]];
        uint32_t bit;
        if (v < 0) {
          bit = (idx >> (kr - 1 - kpos)) & 1;
          ++kpos;
        } else {
          bit = static_cast<uint32_t>(v & 1);
        }
        if (bit) full |= size_t{1} << (r - 1 - ax);
      }
      data[idx] = t.data[full];
    }
    // sort axes ascending by leg id (ExecPlan group code expects sorted legs)
    std::vector<size_t> order(kr);
    for (size_t i = 0; i < kr; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return legs[a] < legs[b]; });
    std::vector<LegId> sorted_legs(kr);
    std::vector<cplx> sorted(size_t{1} << kr);
    for (size_t i = 0; i < kr; ++i) sorted_legs[i] = legs[order[i]];
    for (size_t idx = 0; idx < sorted.size(); ++idx) {
      size_t src = 0;
      for (size_t i = 0; i < kr; ++i) {
        const uint32_t bit = (idx >> (kr - 1 - i)) & 1;
        if (bit) src |= size_t{1} << (kr - 1 - order[i]);
      }
      sorted[idx] = data[src];
    }
    sliced_data.push_back(std::move(sorted));
    tensor_legs.push_back(std::move(sorted_legs));
  }
  std::vector<uint8_t> leg_open(net.num_legs, 0);
  tn_detail::ExecPlan ep;
  ep.build(tensor_legs, leg_open, net.num_legs, plan);
  std::vector<const cplx*> slots;
  for (const auto& d : sliced_data) slots.push_back(d.data());
  std::vector<cplx> arena;
  const cplx* res = ep.run(slots, arena);
  cplx value = res[0];
  if (plan.steps.empty())
    for (size_t ti = 1; ti < sliced_data.size(); ++ti)
      value *= sliced_data[ti][0];
  return value;
}

// --- Fused-network structural signature ------------------------------------
//
// Canonical form of the network after slicing assigned legs and absorbing
// every 1-leg tensor into a neighbor. Two networks built by the same
// layer-by-layer procedure compare equal iff they are isomorphic as
// multigraphs via the natural gate correspondence.

struct NetworkSignature {
  std::vector<std::vector<uint32_t>> tensors;  // canonical leg ids, sorted
  std::vector<uint32_t> open;                  // canonical ids of open legs

  bool operator==(const NetworkSignature& o) const {
    return tensors == o.tensors && open == o.open;
  }
};

inline NetworkSignature fused_signature(const Circuit& c,
                                        const std::vector<uint8_t>& open_qubits) {
  TensorNetwork net = build_network(c);
  std::vector<uint8_t> open_leg(net.num_legs, 0);
  for (size_t q = 0; q < c.n_qubits(); ++q) {
    const LegId l = net.final_leg[q];
    if (q < open_qubits.size() && open_qubits[q] && !net.leg_input_fixed[l])
      open_leg[l] = 1;
    else if (net.leg_assignment[l] < 0)
      net.leg_assignment[l] = 0;  // pinned; exact value irrelevant to shape
  }
  // live tensor legs after slicing assigned axes
  std::vector<std::optional<std::vector<LegId>>> legs;
  std::vector<uint32_t> rc(net.num_legs, 0);
  for (const auto& t : net.tensors) {
    std::vector<LegId> tl;
    for (LegId l : t.legs)
      if (net.leg_assignment[l] < 0 || open_leg[l]) tl.push_back(l);
    std::sort(tl.begin(), tl.end());
    for (LegId l : tl) rc[l] += 1;
    legs.emplace_back(std::move(tl));
  }
  for (LegId l = 0; l < net.num_legs; ++l)
    if (open_leg[l]) rc[l] += 1;
  // absorb 1-leg (and drop 0-leg) tensors until none remain
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < legs.size(); ++i) {
      if (!legs[i]) continue;
      if (legs[i]->empty()) {
        legs[i].reset();
        changed = true;
        continue;
      }
      if (legs[i]->size() != 1) continue;
      const LegId l = legs[i]->front();
      // find the first other tensor carrying l
      size_t host = SIZE_MAX;
      for (size_t j = 0; j < legs.size(); ++j)
        if (j != i && legs[j] &&
            std::find(legs[j]->begin(), legs[j]->end(), l) != legs[j]->end()) {
          host = j;
          break;
        }
      if (host == SIZE_MAX) continue;  // only open incidences left
      legs[i].reset();
      rc[l] -= 1;
      if (rc[l] == 1 && !open_leg[l]) {
        // fully absorbed: the leg is summed into the host
        auto& hl = *legs[host];
        hl.erase(std::find(hl.begin(), hl.end(), l));
        rc[l] = 0;
      }
      changed = true;
    }
  }
  // canonical relabeling by first appearance
  NetworkSignature sig;
  std::vector<uint32_t> relabel(net.num_legs, UINT32_MAX);
  uint32_t next = 0;
  for (const auto& tl : legs) {
    if (!tl) continue;
    std::vector<uint32_t> canon;
    for (LegId l : *tl) {
      if (relabel[l] == UINT32_MAX) relabel[l] = next++;
      canon.push_back(relabel[l]);
    }
    std::sort(canon.begin(), canon.end());
    sig.tensors.push_back(std::move(canon));
  }
  for (LegId l = 0; l < net.num_legs; ++l)
    if (open_leg[l] && relabel[l] != UINT32_MAX) sig.open.push_back(relabel[l]);
  std::sort(sig.open.begin(), sig.open.end());
  return sig;
}

}  // namespace pwsim
