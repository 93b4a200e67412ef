#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phasecal/calibration.hpp"
#include "phasecal/error.hpp"
#include "phasecal/inference.hpp"
#include "phasecal/metrics.hpp"
#include "phasecal/report.hpp"
#include "phasecal/simulator.hpp"

namespace phasecal {

// A pipeline stage failed; what() is "<stage>: <cause>".
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& cause)
      : Error(stage + ": " + cause), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct AnalysisConfig {
  std::size_t buffer_size = 100;
  double threshold = 0.5;
  // Fixed temperature for the calibrated confidence run; empty means fit on
  // the validation videos.
  std::optional<double> temperature;
  // Pick t_conf from {0.1, ..., 0.9} by validation accuracy.
  bool sweep = false;
  int bins = kDefaultNumBins;
  bool calibrate_banks = false;
};

struct StrategyOutcome {
  std::string name;
  std::vector<PhaseTimeline> timelines;
  std::vector<InferenceTrace> traces;  // empty for the baseline
  EvalResult eval;
  CascadeReport cascades;  // pooled over videos, frame indices per video
};

struct AnalysisResult {
  CalibrationReport calibration;
  Temperature temperature;  // used by the calibrated confidence run
  double threshold = 0.5;
  std::vector<std::pair<double, double>> sweep;
  std::array<std::optional<double>, kNumPairs> pair_accuracy{};
  std::vector<report::PairCalibration> bank_calibration;
  std::vector<PhaseTimeline> ground_truth;
  StrategyOutcome baseline;
  StrategyOutcome transition;
  StrategyOutcome confidence_uncalibrated;
  StrategyOutcome confidence_calibrated;

  report::ReportData report_data() const;
};

inline constexpr const char* kBaselineName = "baseline";
inline constexpr const char* kTransitionName = "transition_based";
inline constexpr const char* kConfidenceRawName = "confidence_uncalibrated";
inline constexpr const char* kConfidenceCalibratedName = "confidence_calibrated";

// Calibrates on `validation`, then runs baseline argmax, transition-based
// inference, and confidence-based inference at T = 1 and at the calibrated T
// over `test`.
AnalysisResult analyze(const std::vector<sim::SimulatedVideo>& validation,
                       const std::vector<sim::SimulatedVideo>& test, const AnalysisConfig& cfg);

// Validation accuracy of calibrated confidence inference for each threshold.
std::vector<std::pair<double, double>> sweep_thresholds(const std::vector<sim::SimulatedVideo>& validation,
                                                        const InferenceConfig& base_cfg,
                                                        const std::vector<double>& grid);

struct RunConfig {
  std::filesystem::path out;
  sim::SimulationConfig simulation;
  AnalysisConfig analysis;
  report::Formats formats;

  // Resolved settings as key/value pairs (output path excluded).
  std::map<std::string, std::string> resolved() const;
};

// Writes the analysis artifacts (timelines, traces, reports, config echo)
// under `dir`.
void write_analysis(const AnalysisResult& result, const std::map<std::string, std::string>& config_echo,
                    const report::Formats& formats, const std::filesystem::path& dir);

// simulate -> calibrate -> infer (both strategies) -> evaluate -> report.
// Output: data/ (simulated dataset), calibration/, inference/<strategy>/,
// report/, each holding run_config.txt. Throws StageError.
AnalysisResult run_pipeline(const RunConfig& cfg);

void write_config_echo(const std::map<std::string, std::string>& values, const std::filesystem::path& dir,
                       const std::string& name = "run_config.txt");

}  // namespace phasecal
