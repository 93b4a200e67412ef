#include "phasecal/pipeline.hpp"

#include <cstdio>

#include "phasecal/kv_config.hpp"
#include "text_io.hpp"

namespace phasecal {

namespace {

LogitSequence pooled_base(const std::vector<sim::SimulatedVideo>& videos, const std::string& name) {
  std::vector<LogitSequence> parts;
  parts.reserve(videos.size());
  for (const auto& v : videos) {
    std::vector<int> labels = v.ground_truth.indices();
    std::vector<double> values(v.base.values().begin(), v.base.values().end());
    parts.emplace_back(v.base.video_id(), v.base.num_classes(), std::move(values), std::move(labels));
  }
  return LogitSequence::concat(parts, name);
}

// In-pair frames of one transition model across videos; empty when none.
std::optional<LogitSequence> pooled_in_pair(const std::vector<sim::SimulatedVideo>& videos, TransitionPair pair) {
  std::vector<double> values;
  std::vector<int> labels;
  for (const auto& v : videos) {
    const auto& seq = v.bank.at(pair);
    for (std::size_t f = 0; f < seq.num_frames(); ++f) {
      const auto g = v.ground_truth.labels[f];
      if (!pair.contains(g)) continue;
      const auto r = seq.row(f);
      values.insert(values.end(), r.begin(), r.end());
      labels.push_back(g == pair.low() ? 1 : 2);
    }
  }
  if (labels.empty()) return std::nullopt;
  return LogitSequence(pair.name(), 2, std::move(values), std::move(labels));
}

StrategyOutcome finish(std::string name, std::vector<PhaseTimeline> timelines, std::vector<InferenceTrace> traces,
                       const std::vector<PhaseTimeline>& gt) {
  StrategyOutcome s{std::move(name), std::move(timelines), std::move(traces), {}, {}};
  s.eval = evaluate(s.timelines, gt);
  for (std::size_t v = 0; v < s.traces.size(); ++v) {
    auto runs = detect_cascades(s.traces[v], gt[v]).runs;
    s.cascades.runs.insert(s.cascades.runs.end(), runs.begin(), runs.end());
  }
  return s;
}

StrategyOutcome run_confidence(const std::string& name, const std::vector<sim::SimulatedVideo>& videos,
                               const InferenceConfig& cfg, const std::vector<PhaseTimeline>& gt) {
  std::vector<PhaseTimeline> timelines;
  std::vector<InferenceTrace> traces;
  for (const auto& v : videos) {
    auto r = confidence_inference(v.base, v.bank, cfg);
    timelines.push_back(std::move(r.timeline));
    traces.push_back(std::move(r.trace));
  }
  return finish(name, std::move(timelines), std::move(traces), gt);
}

std::vector<PhaseTimeline> ground_truths(const std::vector<sim::SimulatedVideo>& videos) {
  std::vector<PhaseTimeline> out;
  out.reserve(videos.size());
  for (const auto& v : videos) out.push_back(v.ground_truth);
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::vector<std::pair<double, double>> sweep_thresholds(const std::vector<sim::SimulatedVideo>& validation,
                                                        const InferenceConfig& base_cfg,
                                                        const std::vector<double>& grid) {
  const auto gt = ground_truths(validation);
  std::vector<std::pair<double, double>> out;
  for (double t : grid) {
    InferenceConfig cfg = base_cfg;
    cfg.conf_threshold = t;
    out.emplace_back(t, run_confidence("sweep", validation, cfg, gt).eval.overall_accuracy);
  }
  return out;
}

AnalysisResult analyze(const std::vector<sim::SimulatedVideo>& validation,
                       const std::vector<sim::SimulatedVideo>& test, const AnalysisConfig& cfg) {
  if (validation.empty() || test.empty()) throw InvalidArgument("need validation and test videos");
  AnalysisResult r;
  r.ground_truth = ground_truths(test);

  const auto val_pool = pooled_base(validation, "validation");
  const auto test_pool = pooled_base(test, "test");
  r.calibration = calibrate_report(val_pool, test_pool, cfg.bins);
  r.temperature = cfg.temperature ? Temperature(*cfg.temperature) : r.calibration.fitted;

  if (cfg.calibrate_banks) {
    for (const auto& pair : all_pairs()) {
      const auto val = pooled_in_pair(validation, pair);
      const auto tst = pooled_in_pair(test, pair);
      report::PairCalibration pc{pair, std::nullopt};
      if (val && tst) pc.report = calibrate_report(*val, *tst, cfg.bins);
      r.bank_calibration.push_back(pc);
    }
  }

  InferenceConfig icfg;
  icfg.buffer_size = cfg.buffer_size;
  icfg.conf_threshold = cfg.threshold;
  icfg.temperature = r.temperature;
  icfg.validate();

  r.threshold = cfg.threshold;
  if (cfg.sweep) {
    std::vector<double> grid;
    for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
    r.sweep = sweep_thresholds(validation, icfg, grid);
    auto best = r.sweep.front();
    for (const auto& s : r.sweep) {
      if (s.second > best.second) best = s;
    }
    r.threshold = best.first;
    icfg.conf_threshold = r.threshold;
  }

  // Accuracy of each 2-class model restricted to its own two phases.
  for (const auto& pair : all_pairs()) {
    std::size_t total = 0, hit = 0;
    for (const auto& v : test) {
      for (std::size_t f = 0; f < v.ground_truth.size(); ++f) {
        const auto g = v.ground_truth.labels[f];
        if (!pair.contains(g)) continue;
        ++total;
        hit += v.bank.predict(pair, f) == g;
      }
    }
    if (total) r.pair_accuracy[pair.slot()] = static_cast<double>(hit) / static_cast<double>(total);
  }

  std::vector<PhaseTimeline> base_tl;
  for (const auto& v : test) base_tl.push_back(baseline_timeline(v.base));
  r.baseline = finish(kBaselineName, std::move(base_tl), {}, r.ground_truth);

  std::vector<PhaseTimeline> trans_tl;
  std::vector<InferenceTrace> trans_tr;
  for (const auto& v : test) {
    auto res = transition_inference(v.bank, icfg);
    trans_tl.push_back(std::move(res.timeline));
    trans_tr.push_back(std::move(res.trace));
  }
  r.transition = finish(kTransitionName, std::move(trans_tl), std::move(trans_tr), r.ground_truth);

  InferenceConfig raw = icfg;
  raw.temperature = Temperature(1.0);
  r.confidence_uncalibrated = run_confidence(kConfidenceRawName, test, raw, r.ground_truth);
  r.confidence_calibrated = run_confidence(kConfidenceCalibratedName, test, icfg, r.ground_truth);
  return r;
}

report::ReportData AnalysisResult::report_data() const {
  report::ReportData d;
  d.has_pair_table = true;
  d.baseline_accuracy = baseline.eval.overall_accuracy;
  d.pair_accuracy = pair_accuracy;
  for (const auto* s : {&baseline, &transition, &confidence_uncalibrated, &confidence_calibrated}) {
    d.strategies.push_back({s->name, s->eval});
  }
  d.calibration = calibration;
  d.bank_calibration = bank_calibration;
  d.threshold = threshold;
  d.threshold_sweep = sweep;
  for (const auto* s : {&transition, &confidence_uncalibrated, &confidence_calibrated}) {
    d.cascades.emplace_back(s->name, s->cascades);
  }
  for (std::size_t v = 0; v < ground_truth.size(); ++v) {
    d.ribbons.emplace_back(ground_truth[v], confidence_calibrated.timelines[v]);
  }
  return d;
}

std::map<std::string, std::string> RunConfig::resolved() const {
  const auto& s = simulation;
  const auto& a = analysis;
  std::string pair_acc;
  for (double p : s.noise.pair_accuracy) pair_acc += (pair_acc.empty() ? "" : ",") + detail::format_double(p);
  std::string fmts;
  for (auto [on, name] : {std::pair{formats.text, "text"}, {formats.json, "json"}, {formats.svg, "svg"}}) {
    if (on) fmts += (fmts.empty() ? "" : ",") + std::string(name);
  }
  return {
      {"videos", std::to_string(s.test_videos)},
      {"val-videos", std::to_string(s.validation_videos)},
      {"frames-mean", detail::format_double(s.frames_mean)},
      {"dwell-min", std::to_string(s.dwell_min)},
      {"non-monotone", bool_str(!s.monotone)},
      {"base-acc", detail::format_double(s.noise.base_accuracy)},
      {"pair-acc", pair_acc},
      {"overconfidence", detail::format_double(s.noise.overconfidence)},
      {"jitter", std::to_string(s.noise.boundary_jitter)},
      {"seed", std::to_string(s.noise.seed)},
      {"structured", bool_str(s.noise.structured)},
      {"buffer", std::to_string(a.buffer_size)},
      {"threshold", detail::format_double(a.threshold)},
      {"temperature", a.temperature ? detail::format_double(*a.temperature) : "auto"},
      {"sweep", bool_str(a.sweep)},
      {"bins", std::to_string(a.bins)},
      {"calibrate-banks", bool_str(a.calibrate_banks)},
      {"format", fmts},
  };
}

void write_config_echo(const std::map<std::string, std::string>& values, const std::filesystem::path& dir,
                       const std::string& name) {
  auto out = detail::open_for_write(dir / name);
  out << render_kv(values);
  if (!out) throw Error("write failed: " + (dir / name).string());
}

void write_analysis(const AnalysisResult& result, const std::map<std::string, std::string>& config_echo,
                    const report::Formats& formats, const std::filesystem::path& dir) {
  {
    const auto cal_dir = dir / "calibration";
    report::ReportData d;
    d.calibration = result.calibration;
    d.bank_calibration = result.bank_calibration;
    report::emit_report(d, report::Formats{true, true, false}, cal_dir);
    write_config_echo(config_echo, cal_dir);
  }
  for (const auto* s : {&result.baseline, &result.transition, &result.confidence_uncalibrated,
                        &result.confidence_calibrated}) {
    const auto sdir = dir / "inference" / s->name;
    save_timelines(s->timelines, sdir / "timeline.csv");
    if (!s->traces.empty()) save_traces(s->traces, sdir / "trace.csv");
    write_config_echo(config_echo, sdir);
  }
  save_timelines(result.ground_truth, dir / "inference" / "ground_truth.csv");
  write_config_echo(config_echo, dir / "inference");

  report::emit_report(result.report_data(), formats, dir / "report");
  write_config_echo(config_echo, dir / "report");
  write_config_echo(config_echo, dir);
}

AnalysisResult run_pipeline(const RunConfig& cfg) {
  const auto echo = cfg.resolved();
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
  };

  const auto data = stage("simulate", [&] {
    auto d = sim::simulate_dataset(cfg.simulation);
    sim::save_dataset(d, cfg.out / "data");
    write_config_echo(echo, cfg.out / "data");
    for (const auto& e : std::filesystem::recursive_directory_iterator(cfg.out / "data")) {
      if (e.is_directory()) write_config_echo(echo, e.path());
    }
    return d;
  });
  auto result = stage("analyze", [&] { return analyze(data.validation, data.test, cfg.analysis); });
  stage("report", [&] {
    write_analysis(result, echo, cfg.formats, cfg.out);
    return 0;
  });
  return result;
}

}  // namespace phasecal
