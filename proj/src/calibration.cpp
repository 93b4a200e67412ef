#include "phasecal/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "phasecal/error.hpp"
#include "phasecal/golden_section.hpp"

namespace phasecal {

namespace {

void check_labels(const LogitSequence& logits, std::span<const int> labels) {
  if (labels.size() != logits.num_frames()) {
    throw InvalidArgument("label count " + std::to_string(labels.size()) + " differs from frame count " +
                          std::to_string(logits.num_frames()));
  }
  for (int l : labels) {
    if (l < 1 || l > logits.num_classes()) throw InvalidArgument("label outside [1, K]");
  }
}

std::span<const int> stored_labels(const LogitSequence& logits) {
  if (!logits.has_labels()) throw InvalidArgument("logit sequence '" + logits.video_id() + "' has no labels");
  return logits.labels();
}

}  // namespace

double nll(const LogitSequence& logits, std::span<const int> labels, Temperature t) {
  check_labels(logits, labels);
  const double inv_t = 1.0 / t.value();
  double total = 0.0;
  for (std::size_t f = 0; f < logits.num_frames(); ++f) {
    const auto z = logits.row(f);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp((v - zmax) * inv_t);
    // -log softmax_y = log sum exp((z - zmax)/T) - (z_y - zmax)/T
    total += std::log(sum) - (z[labels[f] - 1] - zmax) * inv_t;
  }
  return total / static_cast<double>(logits.num_frames());
}

double nll(const LogitSequence& logits, const PhaseTimeline& labels, Temperature t) {
  const auto idx = labels.indices();
  return nll(logits, idx, t);
}

double nll(const LogitSequence& logits, Temperature t) { return nll(logits, stored_labels(logits), t); }

std::size_t ReliabilityBins::total() const noexcept {
  std::size_t n = 0;
  for (const auto& b : bins) n += b.count;
  return n;
}

double ReliabilityBins::ece() const noexcept {
  const auto n = total();
  if (n == 0) return 0.0;
  double e = 0.0;
  for (const auto& b : bins) {
    if (b.count == 0) continue;
    e += static_cast<double>(b.count) / static_cast<double>(n) * std::abs(b.accuracy - b.mean_confidence);
  }
  return e;
}

int bin_index(double confidence, int num_bins) {
  int b = static_cast<int>(std::floor(confidence * num_bins));
  // Correct floating-point drift so the bin agrees with the edges as doubles.
  if (b > 0 && confidence < static_cast<double>(b) / num_bins) --b;
  if (b < num_bins && confidence >= static_cast<double>(b + 1) / num_bins) ++b;
  return std::clamp(b, 0, num_bins - 1);
}

ReliabilityBins reliability_bins(std::span<const double> confidences, std::span<const char> correct,
                                 int num_bins) {
  if (num_bins < 1) throw InvalidArgument("num_bins must be >= 1");
  if (confidences.size() != correct.size()) throw InvalidArgument("confidence/correct size mismatch");
  ReliabilityBins out;
  out.bins.resize(num_bins);
  std::vector<double> conf_sum(num_bins, 0.0);
  std::vector<std::size_t> hits(num_bins, 0);
  for (int b = 0; b < num_bins; ++b) {
    out.bins[b].lower = static_cast<double>(b) / num_bins;
    out.bins[b].upper = static_cast<double>(b + 1) / num_bins;
  }
  for (std::size_t i = 0; i < confidences.size(); ++i) {
    const double c = confidences[i];
    if (!(c >= 0.0 && c <= 1.0)) throw InvalidArgument("confidence outside [0, 1]");
    const int b = bin_index(c, num_bins);
    ++out.bins[b].count;
    conf_sum[b] += c;
    if (correct[i]) ++hits[b];
  }
  for (int b = 0; b < num_bins; ++b) {
    auto& bin = out.bins[b];
    if (bin.count == 0) continue;
    bin.mean_confidence = conf_sum[b] / static_cast<double>(bin.count);
    bin.accuracy = static_cast<double>(hits[b]) / static_cast<double>(bin.count);
  }
  return out;
}

ReliabilityBins reliability_bins(const LogitSequence& logits, std::span<const int> labels,
                                 Temperature t, int num_bins) {
  check_labels(logits, labels);
  std::vector<double> conf(logits.num_frames());
  std::vector<char> correct(logits.num_frames());
  for (std::size_t f = 0; f < conf.size(); ++f) {
    const auto p = argmax_confidence(logits.row(f), t);
    conf[f] = p.confidence;
    correct[f] = p.class_index == labels[f];
  }
  return reliability_bins(conf, correct, num_bins);
}

double ece(const LogitSequence& logits, std::span<const int> labels, Temperature t, int num_bins) {
  return reliability_bins(logits, labels, t, num_bins).ece();
}

double ece(const LogitSequence& logits, const PhaseTimeline& labels, Temperature t, int num_bins) {
  const auto idx = labels.indices();
  return ece(logits, idx, t, num_bins);
}

TemperatureFit fit_temperature(const LogitSequence& val_logits, std::span<const int> val_labels,
                               const TemperatureSearch& search) {
  check_labels(val_logits, val_labels);
  if (!(search.min_temperature > 0.0 && search.max_temperature > search.min_temperature)) {
    throw InvalidArgument("invalid temperature search interval");
  }
  const double lo = std::log(search.min_temperature);
  const double hi = std::log(search.max_temperature);
  const auto objective = [&](double log_t) { return nll(val_logits, val_labels, Temperature(std::exp(log_t))); };

  const auto best = golden_section_minimize(objective, lo, hi, search.log_tolerance);
  TemperatureFit fit{Temperature(std::exp(best.x)), best.value, best.x == lo || best.x == hi};
  if (fit.at_bound) fit.temperature = Temperature(best.x == lo ? search.min_temperature : search.max_temperature);

  if (search.min_temperature <= 1.0 && 1.0 <= search.max_temperature) {
    const double at_one = nll(val_logits, val_labels, Temperature(1.0));
    if (at_one < fit.nll) fit = {Temperature(1.0), at_one, false};
  }
  return fit;
}

TemperatureFit fit_temperature(const LogitSequence& val_logits, const TemperatureSearch& search) {
  return fit_temperature(val_logits, stored_labels(val_logits), search);
}

CalibrationReport calibrate_report(const LogitSequence& val, const LogitSequence& test, int num_bins) {
  const auto fit = fit_temperature(val);
  const auto labels = stored_labels(test);
  CalibrationReport r{};
  r.fitted = fit.temperature;
  r.at_bound = fit.at_bound;
  r.nll_before = nll(test, labels, Temperature(1.0));
  r.nll_after = nll(test, labels, fit.temperature);
  r.bins_before = reliability_bins(test, labels, Temperature(1.0), num_bins);
  r.bins_after = reliability_bins(test, labels, fit.temperature, num_bins);
  r.ece_before = r.bins_before.ece();
  r.ece_after = r.bins_after.ece();
  return r;
}

}  // namespace phasecal
