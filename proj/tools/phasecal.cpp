// phasecal: simulate, calibrate, infer, evaluate and report on surgical-phase
// logit streams. Exit codes: 0 success, 1 selftest failure, 2 input/config error.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasecal/calibration.hpp"
#include "phasecal/inference.hpp"
#include "phasecal/kv_config.hpp"
#include "phasecal/metrics.hpp"
#include "phasecal/pipeline.hpp"
#include "phasecal/report.hpp"
#include "phasecal/selftest.hpp"
#include "phasecal/simulator.hpp"

namespace fs = std::filesystem;
using namespace phasecal;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitSelftest = 1;

struct SimFlags {
  sim::SimulationConfig cfg;
  std::string pair_acc = "0.9604,0.9519,0.9471,0.9785,0.9348,0.8347";
  bool non_monotone = false;

  void add(CLI::App* app) {
    app->add_option("--videos", cfg.test_videos, "Number of test videos")->capture_default_str();
    app->add_option("--val-videos", cfg.validation_videos, "Number of validation videos")->capture_default_str();
    app->add_option("--frames-mean", cfg.frames_mean, "Mean frames per video (1 fps)")->capture_default_str();
    app->add_option("--dwell-min", cfg.dwell_min, "Minimum frames per phase")->capture_default_str();
    app->add_flag("--non-monotone", non_monotone, "Allow brief returns to the previous phase");
    app->add_option("--base-acc", cfg.noise.base_accuracy, "Baseline argmax accuracy target")->capture_default_str();
    app->add_option("--pair-acc", pair_acc, "Six comma-separated 2-class accuracy targets")->capture_default_str();
    app->add_option("--overconfidence", cfg.noise.overconfidence, "True temperature T* injected into baseline logits")
        ->capture_default_str();
    app->add_option("--jitter", cfg.noise.boundary_jitter, "Frames of extra confusion around phase changes")
        ->capture_default_str();
    app->add_option("--seed", cfg.noise.seed, "RNG seed")->capture_default_str();
    app->add_flag("--structured", cfg.noise.structured, "Temporally correlated baseline noise via self-attention");
  }

  sim::SimulationConfig resolve() {
    cfg.monotone = !non_monotone;
    std::stringstream ss(pair_acc);
    std::string item;
    std::vector<double> values;
    while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    if (values.size() != static_cast<std::size_t>(kNumPairs)) throw InvalidArgument("--pair-acc needs 6 values");
    std::copy(values.begin(), values.end(), cfg.noise.pair_accuracy.begin());
    cfg.noise.validate();
    return cfg;
  }
};

struct AnalysisFlags {
  AnalysisConfig cfg;
  std::string temperature = "auto";
  std::string format = "text,json,svg";

  void add(CLI::App* app) {
    app->add_option("--buffer", cfg.buffer_size, "Majority buffer size N")->capture_default_str();
    app->add_option("--threshold", cfg.threshold, "Confidence threshold t_conf")->capture_default_str();
    app->add_option("--temperature", temperature, "Temperature for calibrated inference, or 'auto' to fit")
        ->capture_default_str();
    app->add_flag("--sweep", cfg.sweep, "Pick t_conf from 0.1..0.9 by validation accuracy");
    app->add_option("--bins", cfg.bins, "ECE bins")->capture_default_str();
    app->add_flag("--calibrate-banks", cfg.calibrate_banks, "Also temperature-scale the transition models");
    app->add_option("--format", format, "Report formats: text,json,svg")->capture_default_str();
  }

  AnalysisConfig resolve() {
    if (temperature != "auto") cfg.temperature = std::stod(temperature);
    if (cfg.temperature) Temperature check(*cfg.temperature);
    return cfg;
  }
};

std::optional<double> parse_temperature(const std::string& s) {
  if (s == "auto") return std::nullopt;
  return Temperature(std::stod(s)).value();
}

// Inserts `--key=value` pairs from a --config file ahead of the user's own
// flags, so later (command-line) values win.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  for (std::size_t i = 1; i < args.size(); ++i) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      continue;
    }
    std::vector<std::string> injected;
    for (const auto& [k, v] : load_kv_file(path)) injected.push_back("--" + k + "=" + v);
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    // After the subcommand name, which is the first positional argument.
    const std::size_t at = args.size() > 1 ? 2 : args.size();
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    break;
  }
  return args;
}

std::map<std::string, std::string> echo_of(const CLI::App* sub) {
  std::map<std::string, std::string> out;
  for (const auto* opt : sub->get_options()) {
    const auto name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "out") continue;
    const auto results = opt->results();
    std::string v;
    if (!results.empty()) {
      v = results.back();
    } else {
      v = opt->get_default_str();
    }
    out[name] = v;
  }
  return out;
}

int cmd_simulate(SimFlags& flags, const fs::path& out, const CLI::App* sub) {
  const auto data = sim::simulate_dataset(flags.resolve());
  sim::save_dataset(data, out);
  const auto echo = echo_of(sub);
  write_config_echo(echo, out);
  for (const auto& e : fs::recursive_directory_iterator(out)) {
    if (e.is_directory()) write_config_echo(echo, e.path());
  }
  std::cout << "wrote " << data.validation.size() << " validation and " << data.test.size() << " test videos to "
            << out.string() << "\n";
  return 0;
}

int cmd_calibrate(const fs::path& val_dir, const fs::path& test_dir, int bins, bool banks, const fs::path& out,
                  const CLI::App* sub) {
  AnalysisConfig cfg;
  cfg.bins = bins;
  const auto val = sim::load_videos(val_dir);
  const auto test = sim::load_videos(test_dir);
  auto pool = [](const std::vector<sim::SimulatedVideo>& videos, const char* name) {
    std::vector<LogitSequence> parts;
    for (const auto& v : videos) {
      parts.emplace_back(v.base.video_id(), v.base.num_classes(),
                         std::vector<double>(v.base.values().begin(), v.base.values().end()), v.ground_truth.indices());
    }
    return LogitSequence::concat(parts, name);
  };
  report::ReportData data;
  data.calibration = calibrate_report(pool(val, "validation"), pool(test, "test"), bins);
  if (banks) {
    cfg.calibrate_banks = true;
    cfg.bins = bins;
    data.bank_calibration = analyze(val, test, cfg).bank_calibration;
  }
  const auto dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  const auto stem = out.stem().string();
  fs::create_directories(dir);
  const auto text = report::render_text(data);
  std::cout << text;
  {
    std::ofstream(dir / (stem + ".txt"), std::ios::binary) << text;
    std::ofstream(out, std::ios::binary) << report::render_json(data);
    std::ofstream(dir / (stem + "_reliability_before.csv"), std::ios::binary)
        << report::render_reliability_csv(data.calibration->bins_before);
    std::ofstream(dir / (stem + "_reliability_after.csv"), std::ios::binary)
        << report::render_reliability_csv(data.calibration->bins_after);
  }
  write_config_echo(echo_of(sub), dir, "calibrate_config.txt");
  return 0;
}

struct InferFlags {
  std::string strategy = "confidence";
  std::string base;
  std::string bank;
  std::string val;
  std::size_t buffer = 100;
  double threshold = 0.5;
  std::string temperature = "1";
  std::string trace;
  std::string out;
};

int cmd_infer(const InferFlags& f, const CLI::App* sub) {
  InferenceConfig cfg;
  cfg.buffer_size = f.buffer;
  cfg.conf_threshold = f.threshold;
  cfg.validate();
  const auto bank = load_bank(f.bank);
  InferenceResult result = [&] {
    if (f.strategy == "transition") return transition_inference(bank, cfg);
    if (f.strategy != "confidence") throw InvalidArgument("--strategy must be transition or confidence");
    if (f.base.empty()) throw InvalidArgument("--base is required for the confidence strategy");
    const auto base = load_logits(f.base);
    if (auto t = parse_temperature(f.temperature)) {
      cfg.temperature = Temperature(*t);
    } else {
      if (f.val.empty()) throw InvalidArgument("--temperature auto needs --val <dir> to fit on");
      std::vector<LogitSequence> parts;
      for (const auto& v : sim::load_videos(f.val)) {
        parts.emplace_back(v.base.video_id(), v.base.num_classes(),
                           std::vector<double>(v.base.values().begin(), v.base.values().end()), v.ground_truth.indices());
      }
      cfg.temperature = fit_temperature(LogitSequence::concat(parts, "validation")).temperature;
      std::cerr << "fitted temperature " << cfg.temperature.value() << "\n";
    }
    return confidence_inference(base, bank, cfg);
  }();
  save_timelines({result.timeline}, f.out);
  if (!f.trace.empty()) save_traces({result.trace}, f.trace);
  const fs::path out(f.out);
  write_config_echo(echo_of(sub), out.has_parent_path() ? out.parent_path() : fs::path("."), "infer_config.txt");
  return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gt_path, const std::string& trace_path,
                 const fs::path& out, const std::string& format, const CLI::App* sub) {
  const auto preds = load_timelines(pred_path);
  const auto gts_all = load_timelines(gt_path);
  std::vector<PhaseTimeline> gts;
  for (const auto& p : preds) {
    const auto it = std::find_if(gts_all.begin(), gts_all.end(), [&](const auto& g) { return g.video_id == p.video_id; });
    if (it == gts_all.end()) throw InvalidArgument("no ground truth for video '" + p.video_id + "'");
    gts.push_back(*it);
  }
  report::ReportData data;
  data.strategies.push_back({"prediction", evaluate(preds, gts)});
  if (!trace_path.empty()) {
    CascadeReport pooled;
    for (const auto& tr : load_traces(trace_path)) {
      const auto it = std::find_if(gts.begin(), gts.end(), [&](const auto& g) { return g.video_id == tr.video_id; });
      if (it == gts.end()) throw InvalidArgument("no ground truth for traced video '" + tr.video_id + "'");
      const auto rep = detect_cascades(tr, *it);
      pooled.runs.insert(pooled.runs.end(), rep.runs.begin(), rep.runs.end());
    }
    data.cascades.emplace_back("prediction", pooled);
  }
  for (std::size_t v = 0; v < preds.size(); ++v) data.ribbons.emplace_back(gts[v], preds[v]);
  report::emit_report(data, report::Formats::parse(format), out);
  write_config_echo(echo_of(sub), out, "evaluate_config.txt");
  std::cout << report::render_text(data);
  return 0;
}

int cmd_report(const fs::path& data_dir, AnalysisFlags& flags, const fs::path& out, const CLI::App* sub) {
  const auto val = sim::load_videos(data_dir / "validation");
  const auto test = sim::load_videos(data_dir / "test");
  const auto result = analyze(val, test, flags.resolve());
  write_analysis(result, echo_of(sub), report::Formats::parse(flags.format), out);
  std::cout << report::render_text(result.report_data());
  return 0;
}

int cmd_run(SimFlags& sim_flags, AnalysisFlags& flags, const fs::path& out) {
  RunConfig cfg;
  cfg.out = out;
  cfg.simulation = sim_flags.resolve();
  cfg.analysis = flags.resolve();
  cfg.formats = report::Formats::parse(flags.format);
  const auto result = run_pipeline(cfg);
  std::cout << report::render_text(result.report_data());
  return 0;
}

int cmd_selftest(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : selftest::run(seed)) {
    std::printf("[%s] %s (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? 0 : kExitSelftest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Confidence-calibrated surgical phase inference on logit streams"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");
  // Values injected from --config come first; a repeated flag keeps the last.
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // simulate
  SimFlags sim_flags;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic validation/test dataset");
  sim_flags.add(simulate);
  simulate->add_option("--out", sim_out, "Output directory")->required();

  // calibrate
  std::string cal_val, cal_test, cal_out = "report.json";
  int cal_bins = kDefaultNumBins;
  bool cal_banks = false;
  auto* calibrate = app.add_subcommand("calibrate", "Fit temperature on validation, score NLL/ECE on test");
  calibrate->add_option("--val", cal_val, "Validation directory")->required();
  calibrate->add_option("--test", cal_test, "Test directory")->required();
  calibrate->add_option("--bins", cal_bins, "ECE bins")->capture_default_str();
  calibrate->add_flag("--calibrate-banks", cal_banks, "Also fit the transition models");
  calibrate->add_option("--out", cal_out, "Report path (.json)")->capture_default_str();

  // infer
  InferFlags inf;
  auto* infer = app.add_subcommand("infer", "Run one inference strategy on one video");
  infer->add_option("--strategy", inf.strategy, "transition | confidence")
      ->check(CLI::IsMember({"transition", "confidence"}))
      ->capture_default_str();
  infer->add_option("--base", inf.base, "Baseline logit file (K = 7)");
  infer->add_option("--bank", inf.bank, "Directory with trans_<i>_<i+1>.csv")->required();
  infer->add_option("--val", inf.val, "Validation directory for --temperature auto");
  infer->add_option("--buffer", inf.buffer, "Majority buffer size N")->capture_default_str();
  infer->add_option("--threshold", inf.threshold, "Confidence threshold t_conf")->capture_default_str();
  infer->add_option("--temperature", inf.temperature, "Temperature T or 'auto'")->capture_default_str();
  infer->add_option("--trace", inf.trace, "Trace output file");
  infer->add_option("--out", inf.out, "Timeline output file")->required();

  // evaluate
  std::string ev_pred, ev_gt, ev_trace, ev_out, ev_format = "text,json,svg";
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predicted timelines against ground truth");
  evaluate_cmd->add_option("--pred", ev_pred, "Predicted timeline file")->required();
  evaluate_cmd->add_option("--gt", ev_gt, "Ground-truth timeline file")->required();
  evaluate_cmd->add_option("--trace", ev_trace, "Inference trace for cascade detection");
  evaluate_cmd->add_option("--out", ev_out, "Output directory")->required();
  evaluate_cmd->add_option("--format", ev_format, "text,json,svg")->capture_default_str();

  // report
  std::string rep_data, rep_out;
  AnalysisFlags rep_flags;
  auto* report_cmd = app.add_subcommand("report", "Calibrate, run all strategies and tabulate on a dataset");
  report_cmd->add_option("--data", rep_data, "Dataset directory (validation/, test/)")->required();
  rep_flags.add(report_cmd);
  report_cmd->add_option("--out", rep_out, "Output directory")->required();

  // run
  SimFlags run_sim;
  AnalysisFlags run_flags;
  std::string run_out;
  auto* run = app.add_subcommand("run", "simulate -> calibrate -> infer -> evaluate -> report");
  run_sim.add(run);
  run_flags.add(run);
  run->add_option("--out", run_out, "Output directory")->required();

  // selftest
  std::uint64_t st_seed = 7;
  auto* self = app.add_subcommand("selftest", "Compare kernels against reference implementations");
  self->add_option("--seed", st_seed, "RNG seed")->capture_default_str();

  for (auto* sub : app.get_subcommands({})) {
    sub->add_option("--config", "Plain-text key = value file; flags override it");
  }

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  std::vector<char*> cargs;
  for (auto& a : args) cargs.push_back(a.data());

  try {
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*simulate) return cmd_simulate(sim_flags, sim_out, simulate);
    if (*calibrate) return cmd_calibrate(cal_val, cal_test, cal_bins, cal_banks, cal_out, calibrate);
    if (*infer) return cmd_infer(inf, infer);
    if (*evaluate_cmd) return cmd_evaluate(ev_pred, ev_gt, ev_trace, ev_out, ev_format, evaluate_cmd);
    if (*report_cmd) return cmd_report(rep_data, rep_flags, rep_out, report_cmd);
    if (*run) return cmd_run(run_sim, run_flags, run_out);
    if (*self) return cmd_selftest(st_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
