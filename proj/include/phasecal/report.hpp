#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "phasecal/calibration.hpp"
#include "phasecal/metrics.hpp"

namespace phasecal::report {

// "87.44" for 0.8744, "n/a" when undefined.
std::string percent(std::optional<double> fraction);
// Fixed 3-decimal rendering used for NLL / ECE.
std::string fixed3(double v);

// Pipe-separated table with padded columns, title on the first line.
std::string render_table(const std::string& title, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

struct StrategyEval {
  std::string name;
  EvalResult eval;
};

struct PairCalibration {
  TransitionPair pair;
  std::optional<CalibrationReport> report;  // empty when the pair has no in-pair frames
};

struct ReportData {
  // Accuracy table of 2-class models against the baseline.
  std::optional<double> baseline_accuracy;
  std::array<std::optional<double>, kNumPairs> pair_accuracy{};
  bool has_pair_table = false;

  std::vector<StrategyEval> strategies;
  std::optional<CalibrationReport> calibration;
  std::vector<PairCalibration> bank_calibration;
  std::optional<double> threshold;
  std::vector<std::pair<double, double>> threshold_sweep;  // (t_conf, validation accuracy)
  std::vector<std::pair<std::string, CascadeReport>> cascades;
  std::vector<std::pair<PhaseTimeline, PhaseTimeline>> ribbons;  // (ground truth, prediction)
};

struct Formats {
  bool text = true;
  bool json = true;
  bool svg = true;

  // Parses a comma list drawn from {text, json, svg}.
  static Formats parse(const std::string& list);
};

std::string render_text(const ReportData& data);
// Flat key -> value object, serialized deterministically.
std::string render_json(const ReportData& data);
// Two ribbon rows (ground truth on top, prediction below), one cell per frame.
std::string render_ribbon_svg(const PhaseTimeline& gt, const PhaseTimeline& pred);
// Columns: bin,lower,upper,count,mean_confidence,accuracy.
std::string render_reliability_csv(const ReliabilityBins& bins);

// Writes report.txt / report.json / ribbon_<video>.svg (and reliability CSVs
// when calibration data is present) into `dir`.
void emit_report(const ReportData& data, const Formats& formats, const std::filesystem::path& dir);

}  // namespace phasecal::report
