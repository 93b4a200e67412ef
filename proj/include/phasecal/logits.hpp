#pragma once

#include <array>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "phasecal/workflow.hpp"

namespace phasecal {

// Post-hoc calibration temperature. Always > 0.
class Temperature {
 public:
  Temperature() = default;
  // Throws InvalidArgument unless value is finite and > 0.
  explicit Temperature(double value);
  double value() const noexcept { return value_; }

 private:
  double value_ = 1.0;
};

// Numerically stable softmax of z / T.
// Throws InvalidArgument on empty or non-finite z.
std::vector<double> softmax(std::span<const double> z, Temperature t = Temperature());

struct Prediction {
  int class_index;    // 1-based
  double confidence;  // max softmax probability at the given temperature
};

// Argmax with its softmax probability. Exact ties resolve to the smallest index.
Prediction argmax_confidence(std::span<const double> z, Temperature t = Temperature());

// Per-frame K-dimensional scores of one video. Rows are stored contiguously.
// Ground-truth labels (1-based, in [1, K]) are optional but all-or-nothing.
class LogitSequence {
 public:
  // Throws InvalidArgument if K < 2, values.size() is not a positive multiple
  // of K, any value is non-finite, or labels are present but mis-sized or out
  // of range.
  LogitSequence(std::string video_id, int num_classes, std::vector<double> values,
                std::vector<int> labels = {});

  const std::string& video_id() const noexcept { return video_id_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t num_frames() const noexcept { return values_.size() / num_classes_; }
  std::span<const double> row(std::size_t frame) const {
    return {values_.data() + frame * num_classes_, static_cast<std::size_t>(num_classes_)};
  }
  std::span<const double> values() const noexcept { return values_; }

  bool has_labels() const noexcept { return !labels_.empty(); }
  std::span<const int> labels() const noexcept { return labels_; }

  // Argmax class per frame.
  std::vector<int> argmax() const;

  // Stacks sequences with a common K. Labels survive only if every part has them.
  static LogitSequence concat(std::span<const LogitSequence> parts, std::string video_id);

 private:
  std::string video_id_;
  int num_classes_;
  std::vector<double> values_;
  std::vector<int> labels_;
};

// Columnar text: header `video_id,frame_idx,label,z1,...,zK`, one line per
// frame. `label` is the 1-based ground truth or `-` when unknown.
LogitSequence load_logits(const std::filesystem::path& path);
void save_logits(const LogitSequence& seq, const std::filesystem::path& path);

// The six 2-class sequences of one video. For pair (i, i+1), column 0 scores
// phase i and column 1 scores phase i+1.
class TransitionLogitBank {
 public:
  // Throws InvalidArgument on a count other than six, K != 2, or mismatched
  // frame counts.
  // `entries` holds the six pairs in order (1,2) ... (6,7).
  TransitionLogitBank(std::string video_id, std::vector<LogitSequence> entries);

  const std::string& video_id() const noexcept { return video_id_; }
  std::size_t num_frames() const noexcept { return entries_[0].num_frames(); }
  const LogitSequence& at(TransitionPair pair) const { return entries_[pair.slot()]; }

  // Binary argmax of the pair's model at `frame`, mapped to pair.low / pair.high.
  PhaseLabel predict(TransitionPair pair, std::size_t frame) const;

 private:
  std::string video_id_;
  std::vector<LogitSequence> entries_;
};

// Reads `trans_<i>_<i+1>.csv` for all six pairs. A missing file raises
// ParseError naming it.
TransitionLogitBank load_bank(const std::filesystem::path& dir);
void save_bank(const TransitionLogitBank& bank, const std::filesystem::path& dir);
std::filesystem::path bank_file(const std::filesystem::path& dir, TransitionPair pair);

struct DatasetSplit {
  std::set<std::string> train;
  std::set<std::string> validation;
  std::set<std::string> test;

  // Throws InvalidArgument when any two sets share a video id.
  void validate() const;
};

// Text form: header `video_id,split`, split in {train, validation, test}.
DatasetSplit load_split(const std::filesystem::path& path);
void save_split(const DatasetSplit& split, const std::filesystem::path& path);

}  // namespace phasecal
