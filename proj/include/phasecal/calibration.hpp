#pragma once

#include <span>
#include <vector>

#include "phasecal/logits.hpp"
#include "phasecal/workflow.hpp"

namespace phasecal {

inline constexpr int kDefaultNumBins = 15;

// Mean negative log-likelihood of the true class under softmax(z / T).
// Labels are 1-based in [1, K]. Throws InvalidArgument on length mismatch
// or out-of-range labels.
double nll(const LogitSequence& logits, std::span<const int> labels, Temperature t);
double nll(const LogitSequence& logits, const PhaseTimeline& labels, Temperature t);
// Uses the labels stored in `logits`.
double nll(const LogitSequence& logits, Temperature t);

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;  // 0 when empty
  double accuracy = 0.0;         // 0 when empty
};

struct ReliabilityBins {
  std::vector<ReliabilityBin> bins;

  int num_bins() const noexcept { return static_cast<int>(bins.size()); }
  std::size_t total() const noexcept;
  // Sum over non-empty bins of (count / total) * |accuracy - mean_confidence|.
  double ece() const noexcept;
};

// Equal-width bin for a confidence in [0, 1]. A value on an interior edge goes
// to the higher bin; 1.0 goes to the top bin.
int bin_index(double confidence, int num_bins);

// Throws InvalidArgument on size mismatch, num_bins < 1, or a confidence
// outside [0, 1].
ReliabilityBins reliability_bins(std::span<const double> confidences, std::span<const char> correct,
                                 int num_bins);
ReliabilityBins reliability_bins(const LogitSequence& logits, std::span<const int> labels,
                                 Temperature t, int num_bins);

double ece(const LogitSequence& logits, std::span<const int> labels, Temperature t,
           int num_bins = kDefaultNumBins);
double ece(const LogitSequence& logits, const PhaseTimeline& labels, Temperature t,
           int num_bins = kDefaultNumBins);

struct TemperatureSearch {
  double min_temperature = 0.01;
  double max_temperature = 100.0;
  double log_tolerance = 1e-4;
};

struct TemperatureFit {
  Temperature temperature;
  double nll = 0.0;
  // The minimum sits on an end of the search interval: the NLL curve had no
  // interior minimum (e.g. every prediction wrong, or every one right).
  bool at_bound = false;
};

// Minimizes nll over log T by golden-section search. The result never has a
// higher NLL than T = 1 on the fitting set. Throws InvalidArgument on empty or
// unlabelled input.
TemperatureFit fit_temperature(const LogitSequence& val_logits, std::span<const int> val_labels,
                               const TemperatureSearch& search = {});
TemperatureFit fit_temperature(const LogitSequence& val_logits, const TemperatureSearch& search = {});

struct CalibrationReport {
  double nll_before = 0.0;
  double nll_after = 0.0;
  double ece_before = 0.0;
  double ece_after = 0.0;
  Temperature fitted;
  bool at_bound = false;
  ReliabilityBins bins_before;
  ReliabilityBins bins_after;
};

// Fits T on labelled validation logits, then scores the labelled test logits
// at T = 1 and at the fitted T.
CalibrationReport calibrate_report(const LogitSequence& val, const LogitSequence& test,
                                   int num_bins = kDefaultNumBins);

}  // namespace phasecal
