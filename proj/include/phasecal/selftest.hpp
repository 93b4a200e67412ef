#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "phasecal/attention.hpp"

namespace phasecal::selftest {

// softmax(Q K^T / sqrt(d)) V by explicit scalar loops.
attention::Matrix reference_attention(const attention::Matrix& q, const attention::Matrix& k,
                                      const attention::Matrix& v);

struct Check {
  std::string name;
  bool passed;
  std::string detail;
};

// Kernel-vs-reference comparisons on random instances, plus softmax and
// temperature-fit sanity checks.
std::vector<Check> run(std::uint64_t seed = 7, int instances = 50);

}  // namespace phasecal::selftest
