#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "phasecal/inference.hpp"
#include "phasecal/workflow.hpp"

namespace phasecal {

// Fraction of frames with pred == gt. Throws InvalidArgument on length mismatch.
double accuracy(const PhaseTimeline& pred, const PhaseTimeline& gt);

// Accuracy over frames whose ground truth is pair.low or pair.high; empty when
// there are no such frames.
std::optional<double> restricted_pair_accuracy(const PhaseTimeline& pred, const PhaseTimeline& gt,
                                               TransitionPair pair);

struct PhaseScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  std::optional<double> precision;
  std::optional<double> recall;
};

struct EvalResult {
  std::size_t frames = 0;
  std::size_t correct = 0;
  double overall_accuracy = 0.0;  // pooled over frames
  double per_video_mean_accuracy = 0.0;
  std::array<PhaseScore, kNumPhases> per_phase{};
  std::array<std::optional<double>, kNumPairs> restricted_pair_accuracy{};
};

// Pooled evaluation across videos; preds[i] and gts[i] must be aligned.
EvalResult evaluate(std::span<const PhaseTimeline> preds, std::span<const PhaseTimeline> gts);

struct CascadeRun {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  PhaseLabel context{1};  // majority or p_last at the first frame of the run

  std::size_t length() const noexcept { return end - start + 1; }
  friend bool operator==(const CascadeRun&, const CascadeRun&) = default;
};

struct CascadeReport {
  std::vector<CascadeRun> runs;

  std::size_t frames() const noexcept;
};

// Maximal runs of frames where a transition model was consulted whose pair
// excludes the true phase. Baseline frames never qualify.
CascadeReport detect_cascades(const InferenceTrace& trace, const PhaseTimeline& gt);

}  // namespace phasecal
