#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phasecal/logits.hpp"
#include "phasecal/workflow.hpp"

namespace phasecal::sim {

// Relative phase durations used to spread a total video length over the
// seven phases. Order-of-magnitude guesses for a ~40 minute procedure.
inline constexpr std::array<double, kNumPhases> kDefaultPhaseShare = {
    125.0, 954.0, 168.0, 857.0, 98.0, 178.0, 83.0};

// Per-pair accuracies of the default scenario, pairs (1,2) ... (6,7).
inline constexpr std::array<double, kNumPairs> kDefaultPairAccuracy = {
    0.9604, 0.9519, 0.9471, 0.9785, 0.9348, 0.8347};

struct WorkflowSpec {
  std::array<double, kNumPhases> dwell_mean{};
  std::array<int, kNumPhases> dwell_min{};
  bool monotone = true;
  // Non-monotone mode only: chance of briefly returning to the previous phase
  // after entering a new one.
  double revisit_probability = 0.15;

  // Spreads `frames_mean` over the phases by kDefaultPhaseShare.
  static WorkflowSpec from_total(double frames_mean, int dwell_min = 10, bool monotone = true);

  // Throws InvalidArgument unless dwell_min >= 1 and dwell_mean >= dwell_min.
  void validate() const;
};

struct NoiseSpec {
  double base_accuracy = 0.85;
  std::array<double, kNumPairs> pair_accuracy = kDefaultPairAccuracy;
  double overconfidence = 2.5;
  int boundary_jitter = 15;
  std::uint64_t seed = 42;
  // Temporally correlate baseline noise through causal windowed self-attention.
  bool structured = false;

  // Throws InvalidArgument unless base_accuracy in (1/7, 1], pair accuracies
  // in (1/2, 1], overconfidence >= 1 and jitter >= 0.
  void validate() const;
};

// Deterministic 64-bit seed derivation (splitmix64 finalizer over both parts).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream);

// Monotone mode: phases 1..7 in order, each dwell = dwell_min + geometric
// extra with mean dwell_mean - dwell_min.
PhaseTimeline generate_ground_truth(const WorkflowSpec& spec, std::uint64_t seed,
                                    std::string video_id = "video");

// K = 7 logits whose softmax is the exact class posterior of the generating
// model, multiplied by noise.overconfidence. Expected argmax accuracy equals
// noise.base_accuracy, with lower per-frame accuracy within boundary_jitter
// frames of a phase change. Labels are attached.
LogitSequence generate_baseline_logits(const PhaseTimeline& gt, const NoiseSpec& noise);

// Six 2-class sequences. On frames whose ground truth is in the pair the
// argmax is correct with probability pair_accuracy; elsewhere the argmax is
// the pair end nearer to the true phase.
TransitionLogitBank generate_transition_bank(const PhaseTimeline& gt, const NoiseSpec& noise);

// Expected top-1 accuracy of K-class argmax when the true class score exceeds
// the others by `margin` under unit Gaussian noise.
double expected_accuracy(double margin, int num_classes);
// Inverse of expected_accuracy in the margin.
double margin_for_accuracy(double accuracy, int num_classes);

struct SimulationConfig {
  int validation_videos = 4;
  int test_videos = 8;
  double frames_mean = 1800.0;
  int dwell_min = 10;
  bool monotone = true;
  NoiseSpec noise;
};

struct SimulatedVideo {
  PhaseTimeline ground_truth;
  LogitSequence base;
  TransitionLogitBank bank;
};

struct SimulatedDataset {
  DatasetSplit split;
  std::vector<SimulatedVideo> validation;
  std::vector<SimulatedVideo> test;
};

// Videos are named val01.. and test01..; each gets its own derived seed so a
// video's content does not depend on how many others are generated.
SimulatedVideo simulate_video(const std::string& video_id, const SimulationConfig& cfg);
SimulatedDataset simulate_dataset(const SimulationConfig& cfg);

// Layout: split.csv, validation/<id>/{gt,base,trans_*}.csv, test/<id>/...
void save_dataset(const SimulatedDataset& data, const std::filesystem::path& dir);

// Loads every `<id>/base.csv` under `dir` (sorted by id) with its bank and
// gt.csv. Ground truth falls back to the labels in base.csv.
std::vector<SimulatedVideo> load_videos(const std::filesystem::path& dir);

}  // namespace phasecal::sim
