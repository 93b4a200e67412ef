#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "phasecal/calibration.hpp"
#include "phasecal/error.hpp"
#include "phasecal/simulator.hpp"

using namespace phasecal;

namespace {

LogitSequence scaled(const LogitSequence& s, double c) {
  std::vector<double> v(s.values().begin(), s.values().end());
  for (auto& x : v) x *= c;
  return LogitSequence(s.video_id(), s.num_classes(), std::move(v),
                       std::vector<int>(s.labels().begin(), s.labels().end()));
}

// Simulated K = 7 logits whose population NLL optimum is at T = overconfidence.
LogitSequence simulated(double overconfidence, std::uint64_t seed, double frames = 8000.0) {
  sim::NoiseSpec noise;
  noise.overconfidence = overconfidence;
  noise.seed = seed;
  const auto gt = sim::generate_ground_truth(sim::WorkflowSpec::from_total(frames), seed, "cal");
  return sim::generate_baseline_logits(gt, noise);
}

}  // namespace

TEST_CASE("nll anchors") {
  const std::vector<int> labels = {1, 3, 2};
  const LogitSequence sure("v", 3, {60, 0, 0, 0, 0, 60, 0, 60, 0});
  CHECK(nll(sure, labels, Temperature(1.0)) < 1e-20);

  const LogitSequence zeros("v", 7, std::vector<double>(7 * 4, 0.0));
  for (double t : {0.3, 1.0, 9.0}) {
    CHECK(std::abs(nll(zeros, std::vector<int>{1, 7, 4, 2}, Temperature(t)) - std::log(7.0)) < 1e-14);
  }
  CHECK(std::abs(std::log(7.0) - 1.94591) < 1e-5);
}

TEST_CASE("nll matches the oracle and ignores per-row shifts") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 7);
    const auto seq = testing_util::random_logits(rng, 50, k);
    std::vector<int> labels(50);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % k);
    const double t = 0.2 + (rng() % 100) / 10.0;
    const double value = nll(seq, labels, Temperature(t));
    CHECK(std::abs(value - oracle::nll(seq.values(), k, labels, t)) < 1e-12);

    std::vector<double> shifted(seq.values().begin(), seq.values().end());
    std::normal_distribution<double> nd(0.0, 50.0);
    for (std::size_t f = 0; f < 50; ++f) {
      const double c = nd(rng);
      for (int j = 0; j < k; ++j) shifted[f * k + j] += c;
    }
    CHECK(std::abs(nll(LogitSequence("v", k, shifted), labels, Temperature(t)) - value) < 1e-10);
  }
}

TEST_CASE("nll errors") {
  const LogitSequence s("v", 3, {0, 1, 2, 2, 1, 0});
  CHECK_THROWS_AS(nll(s, std::vector<int>{1}, Temperature(1.0)), InvalidArgument);
  CHECK_THROWS_AS(nll(s, std::vector<int>{1, 4}, Temperature(1.0)), InvalidArgument);
  CHECK_THROWS_AS(nll(s, std::vector<int>{0, 1}, Temperature(1.0)), InvalidArgument);
  CHECK_THROWS_AS(nll(s, Temperature(1.0)), InvalidArgument);  // no stored labels
}

TEST_CASE("bin edges go to the higher bin, 1.0 to the top bin") {
  for (int bins : {1, 3, 5, 10, 15, 20}) {
    for (int b = 0; b <= bins; ++b) {
      CHECK(bin_index(static_cast<double>(b) / bins, bins) == std::min(b, bins - 1));
    }
    CHECK(bin_index(std::nextafter(1.0 / bins, 0.0), bins) == 0);
  }
  CHECK(bin_index(0.2, 5) == 1);
  CHECK(bin_index(0.7, 10) == 7);
}

TEST_CASE("ece anchors") {
  // Four predictions at confidence 0.8, two correct: |0.5 - 0.8|.
  const std::vector<double> conf(4, 0.8);
  const std::vector<char> correct = {1, 0, 1, 0};
  const auto bins = reliability_bins(conf, correct, kDefaultNumBins);
  CHECK(bins.ece() == 0.8 - 0.5);
  CHECK(std::abs(bins.ece() - 0.3) < 1e-15);

  // Same through logits: softmax([ln 4, 0]) = [0.8, 0.2].
  const double a = std::log(4.0);
  const LogitSequence seq("v", 2, {a, 0, a, 0, a, 0, a, 0});
  CHECK(std::abs(ece(seq, std::vector<int>{1, 2, 1, 2}, Temperature(1.0)) - 0.3) < 1e-12);

  const LogitSequence right("v", 3, {50, 0, 0, 0, 50, 0});
  CHECK(ece(right, std::vector<int>{1, 2}, Temperature(1.0)) < 1e-15);
  CHECK(std::abs(ece(right, std::vector<int>{2, 3}, Temperature(1.0)) - 1.0) < 1e-15);
}

TEST_CASE("ece with one bin is |accuracy - mean confidence|") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seq = testing_util::random_logits(rng, 40, 5);
    std::vector<int> labels(40);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % 5);
    double conf_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t f = 0; f < 40; ++f) {
      const auto p = argmax_confidence(seq.row(f), Temperature(1.7));
      conf_sum += p.confidence;
      hits += p.class_index == labels[f];
    }
    const double expected = std::abs(static_cast<double>(hits) / 40.0 - conf_sum / 40.0);
    CHECK(ece(seq, labels, Temperature(1.7), 1) == expected);
  }
}

TEST_CASE("reliability bins partition predictions") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const auto seq = testing_util::random_logits(rng, 200, k, 0.5 + (rng() % 40) / 4.0);
    std::vector<int> labels(200);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % k);
    const int nb = 1 + static_cast<int>(rng() % 20);
    const auto bins = reliability_bins(seq, labels, Temperature(1.0), nb);
    CHECK(bins.total() == 200);
    for (int b = 0; b < nb; ++b) {
      const auto& bin = bins.bins[b];
      if (bin.count == 0) continue;
      CHECK(bin.mean_confidence >= bin.lower);
      if (b + 1 < nb) {
        CHECK(bin.mean_confidence < bin.upper);
      } else {
        CHECK(bin.mean_confidence <= 1.0);
      }
    }
    const double e = bins.ece();
    CHECK(e >= 0.0);
    CHECK(e <= 1.0);
  }
  CHECK_THROWS_AS(reliability_bins(std::vector<double>{0.5}, std::vector<char>{1}, 0), InvalidArgument);
  CHECK_THROWS_AS(reliability_bins(std::vector<double>{1.5}, std::vector<char>{1}, 3), InvalidArgument);
}

TEST_CASE("fit_temperature agrees with the grid oracle") {
  const auto seq = simulated(1.0, 101);
  const auto labels = seq.labels();
  const auto fit = fit_temperature(seq);
  const auto grid = oracle::grid_search_temperature(seq.values(), 7, labels);
  CHECK_FALSE(fit.at_bound);
  // Logits calibrated by construction: optimum near 1.
  CHECK(std::abs(fit.temperature.value() - 1.0) < 0.01);
  CHECK(std::abs(grid.temperature - 1.0) < 0.01);
  CHECK(std::abs(fit.temperature.value() - grid.temperature) < 1e-3);
  CHECK(fit.nll <= grid.nll + 1e-12);

  // Scaling every logit by 3 scales the fitted temperature by 3.
  const auto fit3 = fit_temperature(scaled(seq, 3.0));
  CHECK(std::abs(fit3.temperature.value() / fit.temperature.value() - 3.0) < 3e-3);
  CHECK(std::abs(fit3.temperature.value() - 3.0) < 0.03);
  const auto grid3 = oracle::grid_search_temperature(scaled(seq, 3.0).values(), 7, labels);
  CHECK(std::abs(fit3.temperature.value() - grid3.temperature) / grid3.temperature < 1e-3);
}

TEST_CASE("fitted temperature is never worse than T = 1") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 6);
    const auto seq = testing_util::random_logits(rng, 30, k, 0.1 + (rng() % 50) / 5.0);
    std::vector<int> labels(30);
    for (auto& l : labels) l = 1 + static_cast<int>(rng() % k);
    const auto fit = fit_temperature(seq, labels);
    CHECK(nll(seq, labels, fit.temperature) <= nll(seq, labels, Temperature(1.0)));
    CHECK(fit.nll == doctest::Approx(nll(seq, labels, fit.temperature)).epsilon(1e-12));
  }
}

TEST_CASE("degenerate fitting sets land on the interval bound") {
  // Every prediction wrong: NLL keeps falling as T grows.
  const LogitSequence wrong("v", 3, {0, 2, 0, 0, 0, 3, 1, 0, 0});
  const auto up = fit_temperature(wrong, std::vector<int>{1, 1, 2});
  CHECK(up.at_bound);
  CHECK(up.temperature.value() == 100.0);

  // Every prediction right: NLL keeps falling as T shrinks.
  const auto down = fit_temperature(wrong, std::vector<int>{2, 3, 1});
  CHECK(down.at_bound);
  CHECK(down.temperature.value() == 0.01);
}

TEST_CASE("calibrate_report on miscalibrated logits") {
  const auto val = simulated(2.5, 7, 6000.0);
  const auto test = simulated(2.5, 8, 6000.0);
  const auto r = calibrate_report(val, test);
  CHECK(std::abs(r.fitted.value() - 2.5) / 2.5 < 0.05);
  CHECK(r.nll_after < r.nll_before);
  CHECK(r.ece_after < r.ece_before);
  CHECK(r.bins_after.num_bins() == kDefaultNumBins);
  CHECK(r.nll_before >= 0.0);
  CHECK(r.ece_before <= 1.0);

  const auto calm = calibrate_report(simulated(1.0, 7, 6000.0), simulated(1.0, 8, 6000.0));
  CHECK(std::abs(calm.fitted.value() - 1.0) < 0.05);
  CHECK(std::abs(calm.nll_after - calm.nll_before) < 0.01);
}
