#pragma once

// Independent reference computations used to derive and check expected values.
// None of these call into the library routines they are used to verify.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace oracle {

// Mean -log p(true class) under softmax(z / T), from first principles.
inline double nll(std::span<const double> values, int k, std::span<const int> labels, double t) {
  const std::size_t n = values.size() / k;
  long double total = 0.0L;
  for (std::size_t f = 0; f < n; ++f) {
    const double* z = values.data() + f * k;
    double zmax = z[0];
    for (int c = 1; c < k; ++c) zmax = std::max(zmax, z[c]);
    long double denom = 0.0L;
    for (int c = 0; c < k; ++c) denom += std::exp(static_cast<long double>(z[c] - zmax) / t);
    const long double p = std::exp(static_cast<long double>(z[labels[f] - 1] - zmax) / t) / denom;
    total -= std::log(p);
  }
  return static_cast<double>(total / n);
}

struct GridResult {
  double temperature;
  double nll;
};

inline GridResult scan(std::span<const double> values, int k, std::span<const int> labels, double lo, double hi,
                       double step) {
  GridResult best{lo, INFINITY};
  for (double t = lo; t <= hi * (1 + 1e-12); t *= step) {
    const double v = nll(values, k, labels, t);
    if (v < best.nll) best = {t, v};
  }
  return best;
}

// Geometric grid over [lo, hi]: a coarse pass with ratio 1.05, then a fine
// pass with ratio `step` over the two coarse cells around the coarse minimum.
inline GridResult grid_search_temperature(std::span<const double> values, int k, std::span<const int> labels,
                                          double lo = 0.01, double hi = 100.0, double step = 1.0001) {
  const auto coarse = scan(values, k, labels, lo, hi, 1.05);
  const auto fine = scan(values, k, labels, std::max(lo, coarse.temperature / 1.05),
                         std::min(hi, coarse.temperature * 1.05), step);
  return fine.nll < coarse.nll ? fine : coarse;
}

using Mat = std::vector<std::vector<double>>;

// softmax(Q K^T / sqrt(d)) V with explicit triple loops.
inline Mat attention(const Mat& q, const Mat& k, const Mat& v) {
  const std::size_t n = q.size(), m = k.size(), d = q[0].size(), dv = v[0].size();
  Mat out(n, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> w(m);
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += q[i][c] * k[j][c];
      w[j] = s / std::sqrt(static_cast<double>(d));
    }
    const double wmax = *std::max_element(w.begin(), w.end());
    double sum = 0.0;
    for (auto& x : w) {
      x = std::exp(x - wmax);
      sum += x;
    }
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t c = 0; c < dv; ++c) out[i][c] += w[j] / sum * v[j][c];
  }
  return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t c = 0; c < b.size(); ++c) out[i][j] += a[i][c] * b[c][j];
  return out;
}

}  // namespace oracle
