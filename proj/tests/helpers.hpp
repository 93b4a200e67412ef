#pragma once

#include <random>
#include <vector>

#include "oracles.hpp"
#include "phasecal/attention.hpp"
#include "phasecal/logits.hpp"

namespace testing_util {

// Bank whose pair p emits argmax `argmax[p][f]` (a phase index; 0 means "low").
inline phasecal::TransitionLogitBank bank_from_argmax(const std::vector<std::vector<int>>& argmax,
                                                      std::size_t frames, const std::string& id = "v") {
  std::vector<phasecal::LogitSequence> entries;
  for (const auto& pair : phasecal::all_pairs()) {
    std::vector<double> values;
    for (std::size_t f = 0; f < frames; ++f) {
      const auto& col = argmax[pair.slot()];
      const bool high = f < col.size() && col[f] == pair.high().index();
      values.push_back(high ? 0.0 : 1.0);
      values.push_back(high ? 1.0 : 0.0);
    }
    entries.emplace_back(id, 2, std::move(values));
  }
  return phasecal::TransitionLogitBank(id, std::move(entries));
}

// Bank where every pair votes for the end nearer to gt (exact on in-pair frames).
inline phasecal::TransitionLogitBank perfect_bank(const std::vector<int>& gt, const std::string& id = "v") {
  std::vector<std::vector<int>> argmax(phasecal::kNumPairs);
  for (const auto& pair : phasecal::all_pairs()) {
    for (int g : gt) argmax[pair.slot()].push_back(g <= pair.low().index() ? pair.low().index() : pair.high().index());
  }
  return bank_from_argmax(argmax, gt.size(), id);
}

inline phasecal::TransitionLogitBank random_bank(std::mt19937_64& rng, std::size_t frames, const std::string& id = "v") {
  std::normal_distribution<double> nd;
  std::vector<phasecal::LogitSequence> entries;
  for (int p = 0; p < phasecal::kNumPairs; ++p) {
    std::vector<double> values(2 * frames);
    for (auto& v : values) v = nd(rng);
    entries.emplace_back(id, 2, std::move(values));
  }
  return phasecal::TransitionLogitBank(id, std::move(entries));
}

inline phasecal::LogitSequence random_logits(std::mt19937_64& rng, std::size_t frames, int k, double scale = 3.0,
                                             const std::string& id = "v") {
  std::normal_distribution<double> nd(0.0, scale);
  std::vector<double> values(frames * k);
  for (auto& v : values) v = nd(rng);
  return phasecal::LogitSequence(id, k, std::move(values));
}

inline oracle::Mat to_rows(const phasecal::attention::Matrix& m) {
  oracle::Mat out(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline phasecal::attention::Matrix random_matrix(std::mt19937_64& rng, int r, int c) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  phasecal::attention::Matrix m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  return m;
}

}  // namespace testing_util
