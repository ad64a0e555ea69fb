#pragma once

#include <cmath>
#include <string>

#include "pwsim/circuit.hpp"

namespace pwsim {
namespace gates {

inline const cplx I{0.0, 1.0};

inline CMat h_mat() {
  const double s = 1.0 / std::sqrt(2.0);
  return CMat(2, {s, s, s, -s});
}

inline CMat x_mat() { return CMat(2, {0, 1, 1, 0}); }
inline CMat y_mat() { return CMat(2, {0, -I, I, 0}); }
inline CMat z_mat() { return CMat(2, {1, 0, 0, -1}); }

// Rotation convention R_P(theta) = exp(-i * theta * P / 2).
inline CMat rx_mat(double theta) {
  const cplx c = std::cos(theta / 2);
  const cplx s = -I * std::sin(theta / 2);
  return CMat(2, {c, s, s, c});
}

inline CMat rz_mat(double theta) {
  return CMat(2, {std::exp(-I * (theta / 2)), 0, 0, std::exp(I * (theta / 2))});
}

inline CMat rzz_mat(double theta) {
  const cplx m = std::exp(-I * (theta / 2));
  const cplx p = std::exp(I * (theta / 2));
  CMat g = CMat::zero(4);
  g.at(0, 0) = m;
  g.at(1, 1) = p;
  g.at(2, 2) = p;
  g.at(3, 3) = m;
  return g;
}

inline CMat cnot_mat() {
  CMat g = CMat::zero(4);
  g.at(0, 0) = 1;
  g.at(1, 1) = 1;
  g.at(2, 3) = 1;
  g.at(3, 2) = 1;
  return g;
}

inline CMat iswap_mat() {
  CMat g = CMat::zero(4);
  g.at(0, 0) = 1;
  g.at(1, 2) = I;
  g.at(2, 1) = I;
  g.at(3, 3) = 1;
  return g;
}

inline CMat crx_mat(double theta) {
  CMat g = CMat::identity(4);
  const CMat rx = rx_mat(theta);
  g.at(2, 2) = rx.at(0, 0);
  g.at(2, 3) = rx.at(0, 1);
  g.at(3, 2) = rx.at(1, 0);
  g.at(3, 3) = rx.at(1, 1);
  return g;
}

inline CMat fsim_mat(double theta, double phi) {
  CMat g = CMat::zero(4);
  g.at(0, 0) = 1;
  g.at(1, 1) = std::cos(theta);
  g.at(1, 2) = -I * std::sin(theta);
  g.at(2, 1) = -I * std::sin(theta);
  g.at(2, 2) = std::cos(theta);
  g.at(3, 3) = std::exp(I * phi);
  return g;
}

inline Gate h(uint32_t q) { return Gate(h_mat(), {q}, "H"); }
inline Gate x(uint32_t q) { return Gate(x_mat(), {q}, "X"); }
inline Gate y(uint32_t q) { return Gate(y_mat(), {q}, "Y"); }
inline Gate z(uint32_t q) { return Gate(z_mat(), {q}, "Z"); }
inline Gate rx(uint32_t q, double theta) {
  return Gate(rx_mat(theta), {q}, "RX");
}
inline Gate rz(uint32_t q, double theta) {
  return Gate(rz_mat(theta), {q}, "RZ");
}
inline Gate rzz(uint32_t q0, uint32_t q1, double theta) {
  return Gate(rzz_mat(theta), {q0, q1}, "RZZ");
}
inline Gate cnot(uint32_t control, uint32_t target) {
  return Gate(cnot_mat(), {control, target}, "CNOT");
}
inline Gate iswap(uint32_t q0, uint32_t q1) {
  return Gate(iswap_mat(), {q0, q1}, "ISWAP");
}
inline Gate crx(uint32_t control, uint32_t target, double theta) {
  return Gate(crx_mat(theta), {control, target}, "CRX");
}
inline Gate fsim(uint32_t q0, uint32_t q1, double theta, double phi) {
  return Gate(fsim_mat(theta, phi), {q0, q1}, "FSIM");
}

}  // namespace gates
}  // namespace pwsim
