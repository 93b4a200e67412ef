#include "phasecal/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <random>

#include "phasecal/calibration.hpp"
#include "phasecal/logits.hpp"
#include "phasecal/simulator.hpp"

namespace phasecal::selftest {

attention::Matrix reference_attention(const attention::Matrix& q, const attention::Matrix& k,
                                      const attention::Matrix& v) {
  const auto n = q.rows(), m = k.rows(), d = q.cols(), dv = v.cols();
  attention::Matrix out = attention::Matrix::Zero(n, dv);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<double> s(m);
    double smax = -INFINITY;
    for (Eigen::Index j = 0; j < m; ++j) {
      double dot = 0.0;
      for (Eigen::Index c = 0; c < d; ++c) dot += q(i, c) * k(j, c);
      s[j] = dot / std::sqrt(static_cast<double>(d));
      smax = std::max(smax, s[j]);
    }
    double sum = 0.0;
    for (auto& x : s) sum += (x = std::exp(x - smax));
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index c = 0; c < dv; ++c) out(i, c) += s[j] / sum * v(j, c);
    }
  }
  return out;
}

namespace {

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

}  // namespace

std::vector<Check> run(std::uint64_t seed, int instances) {
  std::vector<Check> checks;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 16);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    attention::Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < c; ++j) m(i, j) = val(rng);
    return m;
  };

  double worst_diff = 0.0, worst_row = 0.0;
  for (int t = 0; t < instances; ++t) {
    const int n = dim(rng), m = dim(rng), d = dim(rng), dv = dim(rng);
    const auto q = random(n, d), k = random(m, d), v = random(m, dv);
    worst_diff = std::max(worst_diff, (attention::scaled_dot_attention(q, k, v) - reference_attention(q, k, v)).cwiseAbs().maxCoeff());
    const auto w = attention::attention_weights(q, k);
    worst_row = std::max(worst_row, (w.rowwise().sum().array() - 1.0).abs().maxCoeff());
  }
  checks.push_back({"attention matches scalar reference", worst_diff < 1e-10, fmt("max abs diff %.3g", worst_diff)});
  checks.push_back({"attention rows sum to 1", worst_row < 1e-12, fmt("max deviation %.3g", worst_row)});

  const std::vector<double> z = {2.0, 0.0};
  const double p = softmax(z)[0];
  checks.push_back({"softmax closed form", std::abs(p - std::exp(2.0) / (std::exp(2.0) + 1.0)) < 1e-12, fmt("p = %.12f", p)});

  sim::SimulationConfig cfg;
  cfg.frames_mean = 1000.0;
  cfg.noise.seed = seed;
  cfg.noise.overconfidence = 2.0;
  const auto video = sim::simulate_video("selftest", cfg);
  const auto fit = fit_temperature(video.base);
  double grid_best = 0.0, grid_nll = INFINITY;
  for (double t = 0.5; t <= 8.0; t *= 1.001) {
    const double v = nll(video.base, Temperature(t));
    if (v < grid_nll) grid_nll = v, grid_best = t;
  }
  checks.push_back({"temperature fit agrees with grid search",
                    std::abs(fit.temperature.value() - grid_best) <= 0.001 * grid_best + 1e-3,
                    fmt("golden %.4f, grid %.4f", fit.temperature.value(), grid_best)});
  return checks;
}

}  // namespace phasecal::selftest
