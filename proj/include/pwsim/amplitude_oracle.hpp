#pragma once

// Cached amplitude engine behind the sampler: one prepared query per
// (gate position, output-leg shape), sharing contraction plans across every
// evaluation. Per-query work is slicing by bit values (zero-copy for the
// noiseless path) plus running the compiled plan in a thread-local arena.

#include <memory>
#include <mutex>

#include "pwsim/tensor_network.hpp"

namespace pwsim {

namespace tn_detail {

struct QueryScratch {
  std::vector<cplx> arena;
  std::vector<cplx> modbuf;
  std::vector<cplx> accum;
  std::vector<const cplx*> slots;
};

inline QueryScratch& query_scratch() {
  thread_local QueryScratch s;
  return s;
}

struct PreparedSlot {
  uint32_t gate = 0;
  std::vector<cplx> base;  // assigned axes slowest, remaining axes fastest
  uint8_t na = 0, nr = 0;
  struct Assigned {
    uint8_t kind;       // 0 = fixed 0 (input), 1 = output bit, 2 = slice bit
    uint32_t index;     // qubit or slice number
    uint8_t qubit_pos;  // target index within the gate
    LegId owned;        // leg whose fused weight this axis applies, or kNoLeg
  };
  std::vector<Assigned> assigned;
  std::vector<LegId> rlegs;  // remaining legs, ascending
  std::vector<uint8_t> r_qubit_pos;
  std::vector<LegId> r_owned;
  size_t mod_offset = 0;
};

struct Prepared {
  std::vector<PreparedSlot> slots;
  ContractionPlan plan;
  int plan_source = 0;  // >=0: greedy variant, -1: restricted from full plan
  ExecPlan eplan;
  std::vector<uint32_t> consistency_qubits;  // must read 0 in the query string
  std::vector<LegId> lonely_weight_legs;     // untouched input legs
  std::vector<uint32_t> open_qubits;
  uint8_t result_rank = 0;
  std::vector<uint8_t> res_label_shift;  // per result axis, shift in the local label
  std::vector<uint8_t> res_out_shift;
  size_t mod_total = 0;
  uint32_t num_legs = 0;
};

}  // namespace tn_detail

class AmplitudeOracle {
 public:
  explicit AmplitudeOracle(Circuit circuit, OracleOptions opt = OracleOptions{})
      : circuit_(std::move(circuit)), opt_(opt) {
    net_ = build_network(circuit_, std::nullopt, opt_.identify_diagonal);
    const size_t T = circuit_.size();
    gate_axes_.reserve(T);
    for (size_t gi = 0; gi < T; ++gi)
      gate_axes_.push_back(
          tn_detail::make_gate_axes(circuit_.gate(gi), opt_.identify_diagonal));
    live_after_.assign(T + 1, std::vector<LegId>(circuit_.n_qubits()));
    for (size_t q = 0; q < circuit_.n_qubits(); ++q)
      live_after_[0][q] = static_cast<LegId>(q);
    for (size_t gi = 0; gi < T; ++gi) {
      live_after_[gi + 1] = live_after_[gi];
      const auto& ga = gate_axes_[gi];
      const auto& legs = net_.tensors[gi].legs;
      for (size_t ax = 0; ax < legs.size(); ++ax)
        if (ga.is_out[ax] && !ga.merged[ax])
          live_after_[gi + 1][circuit_.gate(gi).targets()[ga.qubit_pos[ax]]] =
              legs[ax];
    }
    first_touch_.assign(net_.num_legs, {UINT32_MAX, 0});
    for (size_t gi = 0; gi < T; ++gi) {
      const auto& legs = net_.tensors[gi].legs;
      for (size_t ax = 0; ax < legs.size(); ++ax)
        if (first_touch_[legs[ax]].first == UINT32_MAX)
          first_touch_[legs[ax]] = {static_cast<uint32_t>(gi),
                                    static_cast<uint32_t>(ax)};
    }
    prepared_ = std::make_unique<std::atomic<const tn_detail::Prepared*>[]>(
        2 * (T + 1));
    for (size_t i = 0; i < 2 * (T + 1); ++i) prepared_[i].store(nullptr);
  }

  const Circuit& circuit() const { return circuit_; }
  size_t n_qubits() const { return circuit_.n_qubits(); }
  uint32_t leg_count() const { return net_.num_legs; }
  LegId live_leg(size_t t, uint32_t q) const { return live_after_[t][q]; }

  // <x|C_t|0^n> for the prefix of length t.
  cplx amp(size_t t, const Bits& x) const {
    if (x.size() != n_qubits()) throw LengthMismatch("amp bit count");
    if (t > circuit_.size()) throw IndexOutOfRange("prefix length");
    if (t == 0) return bits_to_index(x) == 0 ? cplx(1.0) : cplx(0.0);
    const auto& P = prepared(t, /*block_shape=*/false);
    cplx out;
    const uint32_t label0 = 0;
    execute(P, x, nullptr, &label0, 1, &out);
    return out;
  }

  cplx amp(const Bits& x) const { return amp(circuit_.size(), x); }

  // Element-wise amp; shares one contraction when the strings differ only on
  // the active gate's non-diagonal targets (the sampler's pattern).
  std::vector<cplx> multi_amp(size_t t, const std::vector<Bits>& xs) const {
    std::vector<cplx> out(xs.size());
    if (xs.empty()) return out;
    if (t >= 1 && t <= circuit_.size()) {
      const Gate& g = circuit_.gate(t - 1);
      bool block_pattern = g.kind() != GateKind::Diagonal;
      if (block_pattern) {
        std::vector<uint8_t> is_open(n_qubits(), 0);
        for (size_t j = 0; j < g.arity(); ++j)
          if (!(opt_.identify_diagonal && g.diagonal_on(j)))
            is_open[g.targets()[j]] = 1;
        for (const auto& x : xs) {
          if (x.size() != n_qubits()) throw LengthMismatch("amp bit count");
          for (size_t q = 0; q < n_qubits(); ++q)
            if (!is_open[q] && x[q] != xs[0][q]) {
              block_pattern = false;
              break;
            }
          if (!block_pattern) break;
        }
        if (block_pattern) {
          std::vector<uint32_t> labels(xs.size());
          for (size_t i = 0; i < xs.size(); ++i)
            labels[i] = g.local_label(xs[i]);
          block_amps(t, xs[0], labels.data(), labels.size(), out.data());
          return out;
        }
      }
    }
    for (size_t i = 0; i < xs.size(); ++i) out[i] = amp(t, xs[i]);
    return out;
  }

  // Sampler fast path: amplitudes for local labels of the active gate at
  // position t, all other qubits pinned to s.
  void block_amps(size_t t, const Bits& s, const uint32_t* labels,
                  size_t nlabels, cplx* out,
                  const ChainMods* mods = nullptr) const {
    const auto& P = prepared(t, /*block_shape=*/true);
    execute(P, s, mods, labels, nlabels, out);
  }

  std::string dump_plan(size_t t, bool block_shape = false) const {
    const auto& P = prepared(t, block_shape);
    std::ostringstream os;
    os << "position " << t << (block_shape ? " (block)" : " (amp)")
       << " source="
       << (P.plan_source < 0 ? std::string("restricted")
                             : "greedy-v" + std::to_string(P.plan_source))
       << "\n"
       << P.plan.to_string();
    return os.str();
  }

  const ContractionPlan& position_plan(size_t t, bool block_shape) const {
    return prepared(t, block_shape).plan;
  }

  // Prefix plan derived by restricting the full-circuit plan; used to
  // certify cost monotonicity across prefixes.
  ContractionPlan restricted_amp_plan(size_t t) const {
    const ContractionPlan& full = full_amp_plan();
    std::vector<uint8_t> survives(circuit_.size(), 0);
    for (size_t i = 0; i < t; ++i) survives[i] = 1;
    ContractionPlan p = tn_detail::restrict_plan(full, survives, t);
    std::vector<std::vector<LegId>> shape;
    std::vector<uint8_t> open;
    shape_legs(t, /*block_shape=*/false, {}, shape, open);
    tn_detail::price_plan(p, shape, open, net_.num_legs);
    return p;
  }

  const ContractionPlan& full_amp_plan() const {
    std::call_once(full_plan_once_, [&] {
      std::vector<std::vector<LegId>> shape;
      std::vector<uint8_t> open;
      shape_legs(circuit_.size(), false, {}, shape, open);
      full_plan_ = best_greedy(shape, open);
    });
    return full_plan_;
  }

 private:
  // Legs of each prefix tensor that stay after assignment, sorted; `skip`
  // lists sliced legs to drop as well.
  void shape_legs(size_t t, bool block_shape, const std::vector<LegId>& skip,
                  std::vector<std::vector<LegId>>& out,
                  std::vector<uint8_t>& leg_open) const {
    leg_open.assign(net_.num_legs, 0);
    std::vector<uint8_t> assigned(net_.num_legs, 0);
    for (LegId l = 0; l < net_.num_legs; ++l)
      if (net_.leg_input_fixed[l]) assigned[l] = 1;
    std::vector<uint8_t> open_q = open_qubits_of(t, block_shape);
    for (size_t q = 0; q < n_qubits(); ++q) {
      const LegId l = live_after_[t][q];
      if (open_q[q])
        leg_open[l] = 1;
      else
        assigned[l] = 1;
    }
    for (LegId l : skip) assigned[l] = 1;
    out.clear();
    out.reserve(t);
    for (size_t gi = 0; gi < t; ++gi) {
      std::vector<LegId> legs;
      for (LegId l : net_.tensors[gi].legs)
        if (!assigned[l]) legs.push_back(l);
      std::sort(legs.begin(), legs.end());
      out.push_back(std::move(legs));
    }
  }

  std::vector<uint8_t> open_qubits_of(size_t t, bool block_shape) const {
    std::vector<uint8_t> open_q(n_qubits(), 0);
    if (!block_shape) return open_q;
    const Gate& g = circuit_.gate(t - 1);
    const auto& ga = gate_axes_[t - 1];
    for (size_t ax = 0; ax < ga.qubit_pos.size(); ++ax)
      if (ga.is_out[ax] && !ga.merged[ax])
        open_q[g.targets()[ga.qubit_pos[ax]]] = 1;
    return open_q;
  }

  ContractionPlan best_greedy(const std::vector<std::vector<LegId>>& shape,
                              const std::vector<uint8_t>& open) const {
    ContractionPlan best;
    bool have = false;
    const int variants = std::max(1, opt_.planner_variants);
    for (int v = 0; v < variants; ++v) {
      ContractionPlan p = tn_detail::greedy_plan(shape, open, net_.num_legs,
                                                 opt_.rank_budget, v);
      if (!have || p.est_cost < best.est_cost) {
        best = std::move(p);
        have = true;
      }
    }
    return best;
  }

  const tn_detail::Prepared& prepared(size_t t, bool block_shape) const {
    auto& slot = prepared_[2 * t + (block_shape ? 1 : 0)];
    const tn_detail::Prepared* p = slot.load(std::memory_order_acquire);
    if (p) return *p;
    std::lock_guard<std::mutex> lock(build_mu_);
    p = slot.load(std::memory_order_acquire);
    if (p) return *p;
    auto built = build_prepared(t, block_shape);
    const tn_detail::Prepared* raw = built.get();
    owned_.push_back(std::move(built));
    slot.store(raw, std::memory_order_release);
    return *raw;
  }

  std::unique_ptr<tn_detail::Prepared> build_prepared(size_t t,
                                                      bool block_shape) const {
    if (t < 1 || t > circuit_.size())
      throw IndexOutOfRange("prepare: bad position");
    auto P = std::make_unique<tn_detail::Prepared>();
    P->num_legs = net_.num_legs;

    std::vector<uint8_t> open_q = open_qubits_of(t, block_shape);
    for (size_t q = 0; q < n_qubits(); ++q)
      if (open_q[q]) P->open_qubits.push_back(static_cast<uint32_t>(q));

    std::vector<std::vector<LegId>> shape;
    std::vector<uint8_t> leg_open;
    shape_legs(t, block_shape, {}, shape, leg_open);

    // plan: deterministic greedy variants, and the restriction of the
    // full-circuit plan; cheapest estimated cost wins.
    ContractionPlan plan;
    int source = 0;
    {
      bool have = false;
      const int variants =
          opt_.use_greedy ? std::max(1, opt_.planner_variants) : 0;
      for (int v = 0; v < variants; ++v) {
        ContractionPlan p = tn_detail::greedy_plan(shape, leg_open,
                                                   net_.num_legs,
                                                   opt_.rank_budget, v);
        if (!have || p.est_cost < plan.est_cost) {
          plan = std::move(p);
          source = v;
          have = true;
        }
      }
      if (opt_.restrict_from_full) {
        std::vector<uint8_t> survives(circuit_.size(), 0);
        for (size_t i = 0; i < t; ++i) survives[i] = 1;
        ContractionPlan r =
            tn_detail::restrict_plan(full_amp_plan(), survives, t);
        tn_detail::price_plan(r, shape, leg_open, net_.num_legs);
        if (!have || r.est_cost < plan.est_cost) {
          plan = std::move(r);
          source = -1;
          have = true;
        }
      }
    }

    // memory-cap slicing: drop up to max_slice_legs closed legs, iterating
    // over their assignments at query time.
    std::vector<LegId> sliced;
    while (std::ldexp(1.0, static_cast<int>(plan.peak_rank)) >
               static_cast<double>(opt_.memory_cap_entries) &&
           static_cast<int>(sliced.size()) < opt_.max_slice_legs) {
      // collect intermediate leg sets; slice the leg appearing in the most
      // oversized intermediates (ties: lowest id)
      tn_detail::PlanState st =
          tn_detail::make_plan_state(shape, leg_open, net_.num_legs);
      std::vector<uint32_t> votes(net_.num_legs, 0);
      for (const auto& ps : plan.steps) {
        const auto legs = st.apply(ps.a, ps.b);
        if (std::ldexp(1.0, static_cast<int>(legs.size())) >
            static_cast<double>(opt_.memory_cap_entries))
          for (LegId l : legs)
            if (!leg_open[l]) votes[l] += 1;
      }
      LegId pick = kNoLeg;
      for (LegId l = 0; l < net_.num_legs; ++l)
        if (votes[l] > 0 && (pick == kNoLeg || votes[l] > votes[pick]))
          pick = l;
      if (pick == kNoLeg) break;
      sliced.push_back(pick);
      shape_legs(t, block_shape, sliced, shape, leg_open);
      tn_detail::price_plan(plan, shape, leg_open, net_.num_legs);
    }
    plan.slice_legs = sliced;
    tn_detail::price_plan(plan, shape, leg_open, net_.num_legs);
    P->plan = plan;
    P->plan_source = source;

    // slice-leg index lookup
    std::vector<int> slice_index(net_.num_legs, -1);
    for (size_t i = 0; i < sliced.size(); ++i)
      slice_index[sliced[i]] = static_cast<int>(i);

    // assignment roles
    std::vector<int32_t> out_qubit(net_.num_legs, -1);
    for (size_t q = 0; q < n_qubits(); ++q) {
      const LegId l = live_after_[t][q];
      if (!open_q[q]) out_qubit[l] = static_cast<int32_t>(q);
      if (net_.leg_input_fixed[l] && !open_q[q])
        P->consistency_qubits.push_back(static_cast<uint32_t>(q));
      if (first_touch_[l].first >= t) P->lonely_weight_legs.push_back(l);
    }

    // slots
    P->mod_total = 0;
    for (size_t gi = 0; gi < t; ++gi) {
      const auto& ga = gate_axes_[gi];
      const auto& legs = net_.tensors[gi].legs;
      tn_detail::PreparedSlot slot;
      slot.gate = static_cast<uint32_t>(gi);
      const size_t r = legs.size();
      std::vector<size_t> assigned_axes, remaining_axes;
      for (size_t ax = 0; ax < r; ++ax) {
        const LegId l = legs[ax];
        const bool is_assigned = net_.leg_input_fixed[l] ||
                                 (out_qubit[l] >= 0 && !leg_open[l] &&
                                  live_after_[t][out_qubit[l]] == l) ||
                                 slice_index[l] >= 0;
        if (is_assigned)
          assigned_axes.push_back(ax);
        else
          remaining_axes.push_back(ax);
      }
      std::sort(remaining_axes.begin(), remaining_axes.end(),
                [&](size_t a, size_t b) { return legs[a] < legs[b]; });
      slot.na = static_cast<uint8_t>(assigned_axes.size());
      slot.nr = static_cast<uint8_t>(remaining_axes.size());
      for (size_t ax : assigned_axes) {
        tn_detail::PreparedSlot::Assigned a;
        const LegId l = legs[ax];
        if (net_.leg_input_fixed[l]) {
          a.kind = 0;
          a.index = 0;
        } else if (slice_index[l] >= 0) {
          a.kind = 2;
          a.index = static_cast<uint32_t>(slice_index[l]);
        } else {
          a.kind = 1;
          a.index = static_cast<uint32_t>(out_qubit[l]);
        }
        a.qubit_pos = ga.qubit_pos[ax];
        a.owned = first_touch_[l] ==
                          std::make_pair(static_cast<uint32_t>(gi),
                                         static_cast<uint32_t>(ax))
                      ? l
                      : kNoLeg;
        slot.assigned.push_back(a);
      }
      for (size_t ax : remaining_axes) {
        const LegId l = legs[ax];
        slot.rlegs.push_back(l);
        slot.r_qubit_pos.push_back(ga.qubit_pos[ax]);
        slot.r_owned.push_back(
            first_touch_[l] == std::make_pair(static_cast<uint32_t>(gi),
                                              static_cast<uint32_t>(ax))
                ? l
                : kNoLeg);
      }
      // permuted copy: assigned axes slowest, then remaining
      slot.base.assign(size_t{1} << r, 0.0);
      std::vector<size_t> order;
      order.insert(order.end(), assigned_axes.begin(), assigned_axes.end());
      order.insert(order.end(), remaining_axes.begin(), remaining_axes.end());
      const auto& src = net_.tensors[gi].data;
      for (size_t idx = 0; idx < slot.base.size(); ++idx) {
        size_t sidx = 0;
        for (size_t p = 0; p < r; ++p) {
          const size_t bit = (idx >> (r - 1 - p)) & 1;
          if (bit) sidx |= size_t{1} << (r - 1 - order[p]);
        }
        slot.base[idx] = src[sidx];
      }
      slot.mod_offset = P->mod_total;
      P->mod_total += size_t{1} << slot.nr;
      P->slots.push_back(std::move(slot));
    }

    P->eplan.build(shape, leg_open, net_.num_legs, plan);

    // result extraction: map local-label bits to final tensor axes
    P->result_rank = static_cast<uint8_t>(P->eplan.result_legs.size());
    if (block_shape) {
      const Gate& g = circuit_.gate(t - 1);
      const size_t m = g.arity();
      for (size_t p = 0; p < P->eplan.result_legs.size(); ++p) {
        const LegId l = P->eplan.result_legs[p];
        int tj = -1;
        for (size_t q = 0; q < n_qubits(); ++q)
          if (live_after_[t][q] == l && open_q[q]) {
            for (size_t j = 0; j < m; ++j)
              if (g.targets()[j] == q) tj = static_cast<int>(j);
            break;
          }
        if (tj < 0) throw Error("internal: result leg is not an open leg");
        P->res_label_shift.push_back(static_cast<uint8_t>(m - 1 - tj));
        P->res_out_shift.push_back(
            static_cast<uint8_t>(P->eplan.result_legs.size() - 1 - p));
      }
    }
    return P;
  }

  // Evaluates the prepared query: for each requested local label, the
  // amplitude with output bits = s off the open qubits.
  void execute(const tn_detail::Prepared& P, const Bits& s,
               const ChainMods* mods, const uint32_t* labels, size_t nlabels,
               cplx* out) const {
    for (uint32_t q : P.consistency_qubits)
      if (s[q]) {
        for (size_t i = 0; i < nlabels; ++i) out[i] = 0.0;
        return;
      }
    cplx lonely_scalar = 1.0;
    if (mods && mods->leg_has_weight)
      for (LegId l : P.lonely_weight_legs)
        if (mods->leg_has_weight[l]) lonely_scalar *= mods->leg_weight[l][0];

    auto& sc = tn_detail::query_scratch();
    const size_t res_size = size_t{1} << P.result_rank;
    if (sc.accum.size() < res_size) sc.accum.resize(res_size);
    for (size_t i = 0; i < res_size; ++i) sc.accum[i] = 0.0;
    if (mods && sc.modbuf.size() < P.mod_total) sc.modbuf.resize(P.mod_total);

    const size_t n_pass = size_t{1} << P.plan.slice_legs.size();
    for (size_t pass = 0; pass < n_pass; ++pass) {
      cplx scalar = lonely_scalar;
      sc.slots.clear();
      for (const auto& slot : P.slots) {
        const uint8_t conj =
            mods && mods->gate_conj ? mods->gate_conj[slot.gate] : 0;
        uint32_t aidx = 0;
        for (const auto& a : slot.assigned) {
          uint32_t v = a.kind == 0   ? 0u
                       : a.kind == 1 ? static_cast<uint32_t>(s[a.index])
                                     : static_cast<uint32_t>((pass >> a.index) & 1);
          if (mods && mods->leg_has_weight && a.owned != kNoLeg &&
              mods->leg_has_weight[a.owned])
            scalar *= mods->leg_weight[a.owned][v];
          if ((conj >> a.qubit_pos) & 1) v ^= 1;
          aidx = (aidx << 1) | v;
        }
        const cplx* base = slot.base.data() + (size_t{aidx} << slot.nr);
        if (!mods) {
          sc.slots.push_back(base);
          continue;
        }
        uint32_t rflip = 0;
        bool weighted = false;
        for (size_t p = 0; p < slot.rlegs.size(); ++p) {
          if ((conj >> slot.r_qubit_pos[p]) & 1)
            rflip |= uint32_t{1} << (slot.nr - 1 - p);
          if (mods->leg_has_weight && slot.r_owned[p] != kNoLeg &&
              mods->leg_has_weight[slot.r_owned[p]])
            weighted = true;
        }
        if (rflip == 0 && !weighted) {
          sc.slots.push_back(base);
          continue;
        }
        cplx* dst = sc.modbuf.data() + slot.mod_offset;
        const size_t sz = size_t{1} << slot.nr;
        for (size_t i = 0; i < sz; ++i) dst[i] = base[i ^ rflip];
        if (weighted)
          for (size_t p = 0; p < slot.rlegs.size(); ++p) {
            const LegId l = slot.r_owned[p];
            if (l == kNoLeg || !mods->leg_has_weight[l]) continue;
            const auto& w = mods->leg_weight[l];
            const size_t bit = size_t{1} << (slot.nr - 1 - p);
            for (size_t i = 0; i < sz; ++i) dst[i] *= w[(i & bit) ? 1 : 0];
          }
        sc.slots.push_back(dst);
      }
      const cplx* res = P.eplan.run(sc.slots, sc.arena);
      if (P.eplan.steps.empty() && P.slots.size() > 1) {
        // no contraction steps: every slot is rank 0
        cplx v = 1.0;
        for (const cplx* sp : sc.slots) v *= sp[0];
        sc.accum[0] += scalar * v;
      } else {
        for (size_t i = 0; i < res_size; ++i) sc.accum[i] += scalar * res[i];
      }
    }

    for (size_t i = 0; i < nlabels; ++i) {
      const uint32_t label = labels[i];
      size_t idx = 0;
      for (size_t p = 0; p < P.res_label_shift.size(); ++p)
        idx |= size_t{(label >> P.res_label_shift[p]) & 1} << P.res_out_shift[p];
      out[i] = sc.accum[idx];
    }
  }

  Circuit circuit_;
  OracleOptions opt_;
  TensorNetwork net_;
  std::vector<tn_detail::GateAxes> gate_axes_;
  std::vector<std::vector<LegId>> live_after_;
  std::vector<std::pair<uint32_t, uint32_t>> first_touch_;

  mutable std::unique_ptr<std::atomic<const tn_detail::Prepared*>[]> prepared_;
  mutable std::mutex build_mu_;
  mutable std::vector<std::unique_ptr<const tn_detail::Prepared>> owned_;
  mutable std::once_flag full_plan_once_;
  mutable ContractionPlan full_plan_;
};

// Convenience wrappers matching the one-shot operation signatures.
inline cplx amp(const Circuit& prefix_circuit, const Bits& x) {
  AmplitudeOracle o(prefix_circuit);
  return o.amp(x);
}

inline std::vector<cplx> multi_amp(const Circuit& prefix_circuit,
                                   const std::vector<Bits>& xs) {
  AmplitudeOracle o(prefix_circuit);
  return o.multi_amp(prefix_circuit.size(), xs);
}

}  // namespace pwsim
