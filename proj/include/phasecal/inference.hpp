#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "phasecal/logits.hpp"
#include "phasecal/workflow.hpp"

namespace phasecal {

// Fixed-size FIFO of the latest N predictions, created full of phase 1.
class MajorityBuffer {
 public:
  // Throws InvalidArgument if capacity < 1.
  explicit MajorityBuffer(std::size_t capacity, PhaseLabel fill = PhaseLabel(1));

  std::size_t capacity() const noexcept { return slots_.size(); }

  // Evicts the oldest entry.
  void push(PhaseLabel p);

  // Most frequent label; ties go to the smallest phase index.
  PhaseLabel majority() const noexcept;

  std::size_t count(PhaseLabel p) const noexcept { return counts_[p.index() - 1]; }

 private:
  std::vector<PhaseLabel> slots_;
  std::size_t head_ = 0;  // oldest entry
  std::array<std::size_t, kNumPhases> counts_{};
};

PhaseLabel majority(const MajorityBuffer& buf);

struct InferenceConfig {
  std::size_t buffer_size = 100;
  double conf_threshold = 0.5;
  Temperature temperature{1.0};

  // Throws InvalidArgument on buffer_size < 1 or threshold outside [0, 1].
  void validate() const;
};

// Which model produced a frame's prediction.
struct ModelUsed {
  std::optional<TransitionPair> pair;  // empty means the baseline

  static ModelUsed baseline() { return {}; }
  static ModelUsed transition(TransitionPair p) { return {p}; }
  bool is_baseline() const noexcept { return !pair.has_value(); }
  std::string name() const { return pair ? pair->name() : "baseline"; }

  friend bool operator==(const ModelUsed&, const ModelUsed&) = default;
};

struct TraceRecord {
  std::size_t frame = 0;
  ModelUsed model;
  // Baseline top-class confidence; absent for the transition-based strategy.
  std::optional<double> confidence;
  // Buffer majority (transition-based) or p_last (confidence-based) before
  // this frame's update.
  PhaseLabel context{1};
  PhaseLabel prediction{1};

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

struct InferenceTrace {
  std::string video_id;
  std::vector<TraceRecord> records;
};

struct InferenceResult {
  PhaseTimeline timeline;
  InferenceTrace trace;
};

// Majority-buffer strategy: at each frame consult the transition model of the
// buffer majority, emit its binary decision, then push that decision.
InferenceResult transition_inference(const TransitionLogitBank& bank, const InferenceConfig& cfg);

// Confidence-switching strategy: accept the baseline when its temperature-
// scaled confidence is strictly above the threshold; otherwise take the
// transition model selected by the previous emission. Throws InvalidArgument
// when base K != 7 or frame counts differ.
InferenceResult confidence_inference(const LogitSequence& base, const TransitionLogitBank& bank,
                                     const InferenceConfig& cfg);

// Per-frame baseline argmax as a timeline (base must have K = 7).
PhaseTimeline baseline_timeline(const LogitSequence& base);

// Trace text format: header `video_id,frame_idx,model,confidence,context,prediction`
// with `model` either `baseline` or `trans_<i>_<i+1>` and an empty confidence
// when absent. Multiple videos may share a file.
std::vector<InferenceTrace> load_traces(const std::filesystem::path& path);
void save_traces(const std::vector<InferenceTrace>& traces, const std::filesystem::path& path);

}  // namespace phasecal
