#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwsim/errors.hpp"

namespace pwsim {

// A computational-basis label, one byte per qubit, bits[i] = qubit i.
// Rendered as a string with qubit 0 leftmost.
using Bits = std::vector<uint8_t>;

inline std::string bits_to_string(const Bits& b) {
  std::string s(b.size(), '0');
  for (size_t i = 0; i < b.size(); ++i) s[i] = b[i] ? '1' : '0';
  return s;
}

inline Bits bits_from_string(const std::string& s) {
  Bits b(s.size());
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '0' && s[i] != '1') throw ParseError("bad bit character");
    b[i] = s[i] == '1';
  }
  return b;
}

// Global index with qubit 0 as the most significant bit, matching the
// string rendering read as a binary number.
inline uint64_t bits_to_index(const Bits& b) {
  uint64_t v = 0;
  for (uint8_t bit : b) v = (v << 1) | bit;
  return v;
}

inline Bits bits_from_index(uint64_t v, size_t n) {
  Bits b(n);
  for (size_t i = 0; i < n; ++i) b[i] = (v >> (n - 1 - i)) & 1;
  return b;
}

// Little-endian bit packing for the compact binary sample format:
// qubit i lands in bit (i % 8) of byte (i / 8).
inline std::vector<uint8_t> bits_pack(const Bits& b) {
  std::vector<uint8_t> out((b.size() + 7) / 8, 0);
  for (size_t i = 0; i < b.size(); ++i)
    if (b[i]) out[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  return out;
}

inline Bits bits_unpack(const std::vector<uint8_t>& bytes, size_t n) {
  if (bytes.size() < (n + 7) / 8) throw LengthMismatch("packed record too short");
  Bits b(n);
  for (size_t i = 0; i < n; ++i) b[i] = (bytes[i / 8] >> (i % 8)) & 1;
  return b;
}

}  // namespace pwsim
