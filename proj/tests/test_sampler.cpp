#include <catch2/catch_amalgamated.hpp>
#include <map>
#include <sstream>

#include "pwsim/gates.hpp"
#include "pwsim/reference.hpp"
#include "pwsim/sampler.hpp"

using namespace pwsim;

namespace {

Circuit bell() {
  Circuit c(2);
  c.push_back(gates::h(0));
  c.push_back(gates::cnot(0, 1));
  return c;
}

Circuit ghz(size_t n) {
  Circuit c(n);
  c.push_back(gates::h(0));
  for (uint32_t q = 1; q < n; ++q)
    c.push_back(gates::cnot(q - 1, q));
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

std::vector<double> empirical(const std::vector<SampleRecord>& recs, size_t n) {
  std::vector<double> p(size_t{1} << n, 0.0);
  for (const auto& r : recs) p[bits_to_index(r.bits)] += 1.0;
  for (double& v : p) v /= static_cast<double>(recs.size());
  return p;
}

}  // namespace

TEST_CASE("update_state: H branches evenly, X is deterministic", "[sampler]") {
  Circuit hc(1);
  hc.push_back(gates::h(0));
  Rng rng(1);
  int ones = 0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) ones += update_state(hc, {0}, rng)[0];
  REQUIRE(std::abs(ones / static_cast<double>(N) - 0.5) < 0.02);

  Circuit xc(1);
  xc.push_back(gates::x(0));
  AmplitudeOracle oracle(xc);
  Bits s{0};
  REQUIRE(update_state_with(oracle, 1, s, rng) == 0);  // no oracle calls
  REQUIRE(s == Bits{1});
}

TEST_CASE("update_state: CNOT after H maps 10 to 11", "[sampler]") {
  Rng rng(3);
  const Bits out = update_state(bell(), bits_from_string("10"), rng);
  REQUIRE(bits_to_string(out) == "11");
}

TEST_CASE("Bell circuit yields only 00 and 11, near 50/50", "[sampler]") {
  Sampler sampler(bell());
  const auto recs = sampler.sample_batch(20000, 7);
  size_t ones = 0;
  for (const auto& r : recs) {
    const std::string s = bits_to_string(r.bits);
    REQUIRE((s == "00" || s == "11"));
    ones += s == "11";
  }
  // 3 sigma binomial bound
  const double frac = static_cast<double>(ones) / recs.size();
  REQUIRE(std::abs(frac - 0.5) < 3 * 0.5 / std::sqrt(20000.0));
}

TEST_CASE("GHZ-5 outputs only the two parity states", "[sampler]") {
  Sampler sampler(ghz(5));
  for (const auto& r : sampler.sample_batch(2000, 11)) {
    const std::string s = bits_to_string(r.bits);
    REQUIRE((s == "00000" || s == "11111"));
  }
}

TEST_CASE("8-qubit random circuit matches the oracle within TVD 0.02 at 1e6",
          "[sampler]") {
  const Circuit c = random_circuit(8, 24, 2024);
  Sampler sampler(c);
  const auto recs = sampler.sample_batch(1000000, 5);
  const auto q = exact_distribution(c);
  REQUIRE(tvd(empirical(recs, 8), q) <= 0.02);
}

TEST_CASE("stepwise marginals match every prefix distribution", "[sampler]") {
  const Circuit c = random_circuit(6, 18, 99);
  for (size_t t = 1; t <= c.size(); t += 1) {
    Sampler sampler(c.prefix(t));
    const auto recs = sampler.sample_batch(100000, 31 + t);
    const auto q = exact_distribution(c.prefix(t));
    REQUIRE(tvd(empirical(recs, 6), q) <= 0.03);
  }
}

TEST_CASE("monomial gates never invoke the amplitude oracle", "[sampler]") {
  Circuit c(4);
  c.push_back(gates::x(0));
  c.push_back(gates::cnot(0, 1));
  c.push_back(gates::z(1));
  c.push_back(gates::rz(2, 0.4));
  c.push_back(gates::rzz(2, 3, 0.8));
  c.push_back(gates::iswap(1, 2));
  Sampler sampler(c);
  for (const auto& r : sampler.sample_batch(50, 3))
    REQUIRE(r.oracle_calls == 0);
}

TEST_CASE("oracle-call budget is bounded by 2 qsize", "[sampler]") {
  for (uint64_t seed : {1u, 2u, 3u}) {
    const Circuit c = random_circuit(6, 20, seed);
    const CircuitStats st = circuit_stats(c);
    Sampler sampler(c);
    for (const auto& r : sampler.sample_batch(200, seed))
      REQUIRE(r.oracle_calls <= 2 * st.qsize);
  }
}

TEST_CASE("block mass equals the oracle marginal mass", "[sampler]") {
  const Circuit c = random_circuit(6, 16, 5);
  AmplitudeOracle oracle(c);
  Rng rng(8);
  Bits s(6, 0);
  for (size_t t = 1; t <= c.size(); ++t) {
    const Gate& g = c.gate(t - 1);
    if (g.kind() == GateKind::General) {
      const auto& block = g.block_of(g.local_label(s));
      if (block.size() > 1) {
        cplx amps[8];
        oracle.block_amps(t, s, block.data(), block.size(), amps);
        double mass = 0;
        for (size_t i = 0; i < block.size(); ++i) mass += std::norm(amps[i]);
        // oracle marginal over the block strings at prefix t
        const auto psi = statevector(c.prefix(t));
        double want = 0;
        for (uint32_t label : block) {
          Bits x = s;
          sampler_detail::write_label(x, g.targets(), label);
          want += std::norm(psi[bits_to_index(x)]);
        }
        REQUIRE(std::abs(mass - want) < 1e-9);
      }
    }
    update_state_with(oracle, t, s, rng);
  }
}

TEST_CASE("batches are reproducible for any worker count", "[sampler]") {
  const Circuit c = random_circuit(7, 20, 12);
  Sampler sampler(c);
  const auto a = sampler.sample_batch(400, 99, 1);
  const auto b = sampler.sample_batch(400, 99, 5);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].bits == b[i].bits);
    REQUIRE(a[i].seed == b[i].seed);
    REQUIRE(a[i].oracle_calls == b[i].oracle_calls);
  }
  // K=1 equals a bare sample with the derived seed
  const auto one = sampler.sample_batch(1, 123);
  const SampleRecord direct = sampler.sample(derived_seed(123, 0));
  REQUIRE(one[0].bits == direct.bits);
  REQUIRE(one[0].seed == direct.seed);
}

TEST_CASE("jsonl and binary sinks follow the record formats", "[sampler]") {
  SampleRecord rec;
  rec.bits = bits_from_string("10110001101");
  rec.seed = 12345678901234567ULL;
  rec.oracle_calls = 42;
  std::ostringstream js;
  write_sample_jsonl(js, rec);
  REQUIRE(js.str() ==
          "{\"bits\": \"10110001101\", \"seed\": 12345678901234567, "
          "\"oracle_calls\": 42}\n");
  std::ostringstream bs;
  write_sample_bin(bs, rec);
  const std::string raw = bs.str();
  REQUIRE(raw.size() == 2);  // ceil(11/8)
  std::vector<uint8_t> bytes(raw.begin(), raw.end());
  REQUIRE(bits_unpack(bytes, 11) == rec.bits);
}
