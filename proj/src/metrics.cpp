#include "phasecal/metrics.hpp"

#include "phasecal/error.hpp"

namespace phasecal {

namespace {

void check_aligned(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

double accuracy(const PhaseTimeline& pred, const PhaseTimeline& gt) {
  check_aligned(pred.size(), gt.size());
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) hit += pred.labels[i] == gt.labels[i];
  return static_cast<double>(hit) / static_cast<double>(gt.size());
}

std::optional<double> restricted_pair_accuracy(const PhaseTimeline& pred, const PhaseTimeline& gt,
                                               TransitionPair pair) {
  check_aligned(pred.size(), gt.size());
  std::size_t total = 0, hit = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!pair.contains(gt.labels[i])) continue;
    ++total;
    hit += pred.labels[i] == gt.labels[i];
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(total);
}

EvalResult evaluate(std::span<const PhaseTimeline> preds, std::span<const PhaseTimeline> gts) {
  check_aligned(preds.size(), gts.size());
  if (gts.empty()) throw InvalidArgument("nothing to evaluate");
  EvalResult r;
  std::array<std::size_t, kNumPairs> pair_total{}, pair_hit{};
  double video_sum = 0.0;
  for (std::size_t v = 0; v < gts.size(); ++v) {
    const auto& pred = preds[v];
    const auto& gt = gts[v];
    check_aligned(pred.size(), gt.size());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const auto g = gt.labels[i];
      const auto p = pred.labels[i];
      const bool ok = g == p;
      hit += ok;
      ++r.per_phase[g.index() - 1].actual;
      ++r.per_phase[p.index() - 1].predicted;
      if (ok) ++r.per_phase[g.index() - 1].true_positives;
      for (const auto& pair : all_pairs()) {
        if (!pair.contains(g)) continue;
        ++pair_total[pair.slot()];
        pair_hit[pair.slot()] += ok;
      }
    }
    r.frames += gt.size();
    r.correct += hit;
    video_sum += static_cast<double>(hit) / static_cast<double>(gt.size());
  }
  r.overall_accuracy = static_cast<double>(r.correct) / static_cast<double>(r.frames);
  r.per_video_mean_accuracy = video_sum / static_cast<double>(gts.size());
  for (auto& s : r.per_phase) {
    if (s.predicted) s.precision = static_cast<double>(s.true_positives) / static_cast<double>(s.predicted);
    if (s.actual) s.recall = static_cast<double>(s.true_positives) / static_cast<double>(s.actual);
  }
  for (int k = 0; k < kNumPairs; ++k) {
    if (pair_total[k]) r.restricted_pair_accuracy[k] = static_cast<double>(pair_hit[k]) / static_cast<double>(pair_total[k]);
  }
  return r;
}

std::size_t CascadeReport::frames() const noexcept {
  std::size_t n = 0;
  for (const auto& run : runs) n += run.length();
  return n;
}

CascadeReport detect_cascades(const InferenceTrace& trace, const PhaseTimeline& gt) {
  check_aligned(trace.records.size(), gt.size());
  CascadeReport report;
  bool open = false;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& rec = trace.records[i];
    const bool wrong_pair = rec.model.pair && !rec.model.pair->contains(gt.labels[i]);
    if (wrong_pair && open) {
      report.runs.back().end = i;
    } else if (wrong_pair) {
      report.runs.push_back({i, i, rec.context});
    }
    open = wrong_pair;
  }
  return report;
}

}  // namespace phasecal
