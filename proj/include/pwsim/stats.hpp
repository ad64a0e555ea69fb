#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pwsim/errors.hpp"

namespace pwsim {

// Regularized upper incomplete gamma Q(a, x) via the usual series /
// continued-fraction split.
inline double gammq(double a, double x) {
  if (x < 0 || a <= 0) throw ParameterOutOfRange("gammq domain");
  if (x == 0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // lower series
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    const double p = sum * std::exp(-x + a * std::log(x) - gln);
    return 1.0 - p;
  }
  // continued fraction (modified Lentz)
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::abs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi_square_pvalue(double chi2, size_t df) {
  if (df == 0) return 1.0;
  return gammq(static_cast<double>(df) / 2.0, chi2 / 2.0);
}

// Goodness-of-fit of observed counts against expected probabilities; bins
// with expectation below `min_expected` are pooled into one.
struct ChiSquareResult {
  double statistic = 0.0;
  size_t df = 0;
  double p_value = 1.0;
};

inline ChiSquareResult chi_square_gof(const std::vector<uint64_t>& counts,
                                      const std::vector<double>& probs,
                                      double min_expected = 5.0) {
  if (counts.size() != probs.size()) throw LengthMismatch("chi-square sizes");
  uint64_t total = 0;
  for (uint64_t c : counts) total += c;
  double stat = 0.0;
  size_t bins = 0;
  double pool_o = 0.0, pool_e = 0.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * static_cast<double>(total);
    if (e < min_expected) {
      pool_o += static_cast<double>(counts[i]);
      pool_e += e;
      continue;
    }
    const double d = static_cast<double>(counts[i]) - e;
    stat += d * d / e;
    ++bins;
  }
  if (pool_e > 0) {
    const double d = pool_o - pool_e;
    stat += d * d / pool_e;
    ++bins;
  }
  ChiSquareResult r;
  r.statistic = stat;
  r.df = bins > 1 ? bins - 1 : 0;
  r.p_value = chi_square_pvalue(stat, r.df);
  return r;
}

struct LinFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

inline LinFit weighted_linfit(const std::vector<double>& xs,
                              const std::vector<double>& ys,
                              const std::vector<double>& ws) {
  if (xs.size() != ys.size() || xs.size() != ws.size())
    throw LengthMismatch("linfit sizes");
  if (xs.size() < 2) throw InvalidParams("linfit needs >= 2 points");
  double W = 0, Sx = 0, Sy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    W += ws[i];
    Sx += ws[i] * xs[i];
    Sy += ws[i] * ys[i];
  }
  const double mx = Sx / W, my = Sy / W;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += ws[i] * dx * dx;
    sxy += ws[i] * dx * dy;
    syy += ws[i] * dy * dy;
  }
  if (sxx <= 0) throw InvalidParams("degenerate x values in fit");
  LinFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return f;
}

// Two-sample Kolmogorov-Smirnov statistic (inputs need not be sorted).
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw InvalidParams("ks on empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double av = a[i], bv = b[j];
    if (av <= bv) ++i;
    if (bv <= av) ++j;
    const double fa = static_cast<double>(i) / static_cast<double>(a.size());
    const double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(const std::vector<double>& v) {
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() > 1 ? v.size() - 1 : 1));
}

}  // namespace pwsim
