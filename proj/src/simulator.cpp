#include "phasecal/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <optional>
#include <random>

#include "phasecal/attention.hpp"
#include "phasecal/error.hpp"

namespace phasecal::sim {

namespace {

// mt19937_64 is fully specified by the standard; the distributions are not,
// so uniform and normal variates are drawn by hand for portable output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // (0, 1]
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) { return uniform() <= p; }

  // Failures before the first success, with the given mean.
  int geometric(double mean) {
    if (mean <= 0.0) return 0;
    const double p = 1.0 / (1.0 + mean);
    return static_cast<int>(std::floor(std::log(uniform()) / std::log1p(-p)));
  }

 private:
  std::mt19937_64 engine_;
};

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double inverse_normal_cdf(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

constexpr double kMaxAccuracy = 0.999;
// Margin used when a target accuracy of 1 asks for noise-free logits.
constexpr double kNoiselessMargin = 3.0;

// Frames within `jitter` of a phase change.
std::vector<char> near_boundary(const PhaseTimeline& gt, int jitter) {
  std::vector<char> near(gt.size(), 0);
  if (jitter <= 0) return near;
  for (const auto& b : segment_boundaries(gt)) {
    const std::size_t lo = b.frame >= static_cast<std::size_t>(jitter) ? b.frame - jitter : 0;
    const std::size_t hi = std::min(gt.size(), b.frame + jitter);
    for (std::size_t f = lo; f < hi; ++f) near[f] = 1;
  }
  return near;
}

// Per-frame accuracies so that the mean equals `target`: frames near a
// boundary sit halfway between chance and target, the rest make up the
// difference (capped at kMaxAccuracy).
std::pair<double, double> split_accuracy(double target, std::size_t n_near, std::size_t n_far, int k) {
  if (n_near == 0 || n_far == 0) return {target, target};
  const double n = static_cast<double>(n_near + n_far);
  double a_near = 0.5 * (target + 1.0 / k);
  double a_far = (n * target - static_cast<double>(n_near) * a_near) / static_cast<double>(n_far);
  if (a_far > kMaxAccuracy) {
    a_far = kMaxAccuracy;
    a_near = (n * target - static_cast<double>(n_far) * a_far) / static_cast<double>(n_near);
  }
  if (a_near <= 1.0 / k || a_far < a_near) return {target, target};
  return {a_near, a_far};
}

attention::Matrix positional_features(std::size_t n, int d) {
  attention::Matrix p(static_cast<Eigen::Index>(n), d);
  for (std::size_t f = 0; f < n; ++f) {
    for (int j = 0; j < d / 2; ++j) {
      const double rate = std::pow(10.0, -static_cast<double>(j) / (d / 2));
      p(f, 2 * j) = std::sin(static_cast<double>(f) * rate);
      p(f, 2 * j + 1) = std::cos(static_cast<double>(f) * rate);
    }
  }
  return p;
}

// Replaces each row of `noise` with a causal attention-weighted mix of the
// last few rows, rescaled to unit variance. The weights come from positional
// features only, so each row stays standard normal.
void correlate_noise(attention::Matrix& noise, Rng& rng) {
  constexpr int kWidth = 8;
  constexpr Eigen::Index kWindow = 8;
  const auto n = noise.rows();
  attention::Matrix w_q(kWidth, kWidth), w_k(kWidth, kWidth);
  for (int i = 0; i < kWidth; ++i) {
    for (int j = 0; j < kWidth; ++j) {
      w_q(i, j) = rng.normal();
      w_k(i, j) = rng.normal();
    }
  }
  const attention::Matrix pos = positional_features(static_cast<std::size_t>(n), kWidth);
  const attention::Matrix q = pos * w_q;
  const attention::Matrix k = pos * w_k;
  attention::Matrix mixed(n, noise.cols());
  for (Eigen::Index f = 0; f < n; ++f) {
    const Eigen::Index lo = std::max<Eigen::Index>(0, f - kWindow + 1);
    const attention::Matrix weights = attention::attention_weights(q.middleRows(f, 1), k.middleRows(lo, f - lo + 1));
    mixed.row(f) = (weights * noise.middleRows(lo, f - lo + 1)) / weights.norm();
  }
  noise = std::move(mixed);
}

}  // namespace

WorkflowSpec WorkflowSpec::from_total(double frames_mean, int dwell_min, bool monotone) {
  WorkflowSpec spec;
  double share_sum = 0.0;
  for (double s : kDefaultPhaseShare) share_sum += s;
  for (int p = 0; p < kNumPhases; ++p) {
    spec.dwell_min[p] = dwell_min;
    spec.dwell_mean[p] = std::max(static_cast<double>(dwell_min), frames_mean * kDefaultPhaseShare[p] / share_sum);
  }
  spec.monotone = monotone;
  return spec;
}

void WorkflowSpec::validate() const {
  for (int p = 0; p < kNumPhases; ++p) {
    if (dwell_min[p] < 1) throw InvalidArgument("dwell_min must be >= 1");
    if (!(dwell_mean[p] >= dwell_min[p])) throw InvalidArgument("dwell_mean must be >= dwell_min");
  }
  if (!(revisit_probability >= 0.0 && revisit_probability <= 1.0)) {
    throw InvalidArgument("revisit probability must lie in [0, 1]");
  }
}

void NoiseSpec::validate() const {
  if (!(base_accuracy > 1.0 / kNumPhases && base_accuracy <= 1.0)) {
    throw InvalidArgument("base accuracy must lie in (1/7, 1]");
  }
  for (double a : pair_accuracy) {
    if (!(a > 0.5 && a <= 1.0)) throw InvalidArgument("pair accuracy must lie in (1/2, 1]");
  }
  if (!(overconfidence >= 1.0) || !std::isfinite(overconfidence)) {
    throw InvalidArgument("overconfidence must be >= 1");
  }
  if (boundary_jitter < 0) throw InvalidArgument("boundary jitter must be >= 0");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& stream) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return derive_seed(seed, h);
}

PhaseTimeline generate_ground_truth(const WorkflowSpec& spec, std::uint64_t seed, std::string video_id) {
  spec.validate();
  Rng rng(seed);
  std::vector<PhaseLabel> frames;
  auto dwell = [&](int phase) {
    return spec.dwell_min[phase - 1] + rng.geometric(spec.dwell_mean[phase - 1] - spec.dwell_min[phase - 1]);
  };
  for (int phase = 1; phase <= kNumPhases; ++phase) {
    frames.insert(frames.end(), dwell(phase), PhaseLabel(phase));
    if (!spec.monotone && phase >= 2 && phase < kNumPhases && rng.bernoulli(spec.revisit_probability)) {
      frames.insert(frames.end(), spec.dwell_min[phase - 2], PhaseLabel(phase - 1));
      frames.insert(frames.end(), spec.dwell_min[phase - 1], PhaseLabel(phase));
    }
  }
  return PhaseTimeline(std::move(video_id), std::move(frames));
}

double expected_accuracy(double margin, int num_classes) {
  // P(margin + e_true > max of the other K-1 scores) = E_x[Phi(x + margin)^(K-1)].
  constexpr int kSteps = 4000;
  constexpr double kLo = -12.0, kHi = 12.0;
  const double h = (kHi - kLo) / kSteps;
  double sum = 0.0;
  for (int i = 0; i <= kSteps; ++i) {
    const double x = kLo + i * h;
    const double w = (i == 0 || i == kSteps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * normal_pdf(x) * std::pow(normal_cdf(x + margin), num_classes - 1);
  }
  return sum * h / 3.0;
}

double margin_for_accuracy(double accuracy, int num_classes) {
  if (!(accuracy > 1.0 / num_classes && accuracy < 1.0)) {
    throw InvalidArgument("accuracy must lie strictly between chance and 1");
  }
  if (num_classes == 2) return std::numbers::sqrt2 * inverse_normal_cdf(accuracy);
  double lo = 0.0, hi = 20.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (expected_accuracy(mid, num_classes) < accuracy ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LogitSequence generate_baseline_logits(const PhaseTimeline& gt, const NoiseSpec& noise) {
  noise.validate();
  Rng rng(derive_seed(noise.seed, "baseline:" + gt.video_id));
  const std::size_t n = gt.size();
  const bool noiseless = noise.base_accuracy >= 1.0;

  const auto near = near_boundary(gt, noise.boundary_jitter);
  const auto n_near = static_cast<std::size_t>(std::count(near.begin(), near.end(), 1));
  double margin_near = kNoiselessMargin, margin_far = kNoiselessMargin;
  if (!noiseless) {
    const auto [a_near, a_far] = split_accuracy(noise.base_accuracy, n_near, n - n_near, kNumPhases);
    margin_near = margin_for_accuracy(a_near, kNumPhases);
    margin_far = a_far == a_near ? margin_near : margin_for_accuracy(a_far, kNumPhases);
  }

  attention::Matrix eps = attention::Matrix::Zero(static_cast<Eigen::Index>(n), kNumPhases);
  if (!noiseless) {
    for (std::size_t f = 0; f < n; ++f) {
      for (int k = 0; k < kNumPhases; ++k) eps(f, k) = rng.normal();
    }
    if (noise.structured) correlate_noise(eps, rng);
  }

  // Scores s = m e_y + eps have class posterior softmax(m s) under a uniform
  // class prior, so m * s are calibrated logits; scaling by T* miscalibrates.
  std::vector<double> values(n * kNumPhases);
  for (std::size_t f = 0; f < n; ++f) {
    const double m = near[f] ? margin_near : margin_far;
    const int y = gt.labels[f].index() - 1;
    for (int k = 0; k < kNumPhases; ++k) {
      const double score = (k == y ? m : 0.0) + eps(f, k);
      values[f * kNumPhases + k] = noise.overconfidence * m * score;
    }
  }
  return LogitSequence(gt.video_id, kNumPhases, std::move(values), gt.indices());
}

TransitionLogitBank generate_transition_bank(const PhaseTimeline& gt, const NoiseSpec& noise) {
  noise.validate();
  const std::size_t n = gt.size();
  std::vector<LogitSequence> entries;
  entries.reserve(kNumPairs);
  for (const auto& pair : all_pairs()) {
    Rng rng(derive_seed(noise.seed, pair.name() + ":" + gt.video_id));
    const double acc = noise.pair_accuracy[pair.slot()];
    const bool noiseless = acc >= 1.0;
    const double m = noiseless ? kNoiselessMargin : margin_for_accuracy(acc, 2);

    std::vector<double> values(2 * n);
    std::vector<int> labels(n);
    for (std::size_t f = 0; f < n; ++f) {
      const int g = gt.labels[f].index();
      // Off-pair frames are scored as the nearer end of the pair.
      const int target = g <= pair.low().index() ? 0 : 1;
      labels[f] = target + 1;
      double s0 = (target == 0 ? m : 0.0);
      double s1 = (target == 1 ? m : 0.0);
      if (!noiseless) {
        s0 += rng.normal();
        s1 += rng.normal();
      }
      if (!pair.contains(gt.labels[f]) && (s1 > s0) != (target == 1)) std::swap(s0, s1);
      values[2 * f] = m * s0;
      values[2 * f + 1] = m * s1;
    }
    entries.emplace_back(gt.video_id, 2, std::move(values), std::move(labels));
  }
  return TransitionLogitBank(gt.video_id, std::move(entries));
}

namespace {

std::string video_name(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%02d", prefix, i + 1);
  return buf;
}

}  // namespace

SimulatedVideo simulate_video(const std::string& video_id, const SimulationConfig& cfg) {
  const auto spec = WorkflowSpec::from_total(cfg.frames_mean, cfg.dwell_min, cfg.monotone);
  auto gt = generate_ground_truth(spec, derive_seed(cfg.noise.seed, "gt:" + video_id), video_id);
  auto base = generate_baseline_logits(gt, cfg.noise);
  auto bank = generate_transition_bank(gt, cfg.noise);
  return {std::move(gt), std::move(base), std::move(bank)};
}

SimulatedDataset simulate_dataset(const SimulationConfig& cfg) {
  if (cfg.validation_videos < 1 || cfg.test_videos < 1) throw InvalidArgument("need at least one validation and one test video");
  if (!(cfg.frames_mean >= 1.0)) throw InvalidArgument("frames_mean must be >= 1");
  cfg.noise.validate();
  SimulatedDataset data;
  for (int i = 0; i < cfg.validation_videos; ++i) {
    const auto id = video_name("val", i);
    data.split.validation.insert(id);
    data.validation.push_back(simulate_video(id, cfg));
  }
  for (int i = 0; i < cfg.test_videos; ++i) {
    const auto id = video_name("test", i);
    data.split.test.insert(id);
    data.test.push_back(simulate_video(id, cfg));
  }
  return data;
}

namespace {

void save_video(const SimulatedVideo& v, const std::filesystem::path& dir) {
  save_timelines({v.ground_truth}, dir / "gt.csv");
  save_logits(v.base, dir / "base.csv");
  save_bank(v.bank, dir);
}

}  // namespace

void save_dataset(const SimulatedDataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_split(data.split, dir / "split.csv");
  for (const auto& v : data.validation) save_video(v, dir / "validation" / v.ground_truth.video_id);
  for (const auto& v : data.test) save_video(v, dir / "test" / v.ground_truth.video_id);
}

std::vector<SimulatedVideo> load_videos(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError(dir.string(), 0, "not a directory");
  std::vector<std::filesystem::path> video_dirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory() && std::filesystem::exists(entry.path() / "base.csv")) {
      video_dirs.push_back(entry.path());
    }
  }
  std::sort(video_dirs.begin(), video_dirs.end());
  if (video_dirs.empty()) throw ParseError(dir.string(), 0, "no video directories with base.csv");

  std::vector<SimulatedVideo> out;
  for (const auto& vd : video_dirs) {
    auto base = load_logits(vd / "base.csv");
    auto bank = load_bank(vd);
    std::optional<PhaseTimeline> gt;
    if (std::filesystem::exists(vd / "gt.csv")) {
      auto t = load_timelines(vd / "gt.csv");
      gt = std::move(t.front());
    } else if (base.has_labels() && base.num_classes() == kNumPhases) {
      gt = PhaseTimeline(base.video_id(), std::vector<int>(base.labels().begin(), base.labels().end()));
    } else {
      throw ParseError(vd.string(), 0, "no ground truth (gt.csv or labels in base.csv)");
    }
    if (gt->size() != base.num_frames() || bank.num_frames() != base.num_frames()) {
      throw ParseError(vd.string(), 0, "gt, base and bank frame counts differ");
    }
    out.push_back({std::move(*gt), std::move(base), std::move(bank)});
  }
  return out;
}

}  // namespace phasecal::sim
