#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "phasecal/attention.hpp"
#include "phasecal/error.hpp"

using namespace phasecal;
using namespace phasecal::attention;
using testing_util::random_matrix;
using testing_util::to_rows;

namespace {

double max_abs_diff(const Matrix& a, const oracle::Mat& b) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b[i][j]));
  return worst;
}

}  // namespace

TEST_CASE("a single key returns its value row") {
  std::mt19937_64 rng(1);
  const Matrix q = random_matrix(rng, 5, 3);
  const Matrix k = random_matrix(rng, 1, 3);
  const Matrix v = random_matrix(rng, 1, 4);
  const Matrix out = scaled_dot_attention(q, k, v);
  for (Eigen::Index i = 0; i < out.rows(); ++i) CHECK((out.row(i) - v.row(0)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("2x2 identity case") {
  const Matrix eye = Matrix::Identity(2, 2);
  const Matrix out = scaled_dot_attention(eye, eye, eye);
  // Row 0 scores [1/sqrt2, 0]; row 1 is the mirror image.
  const double a = 1.0 / std::sqrt(2.0);
  const double w = std::exp(a) / (std::exp(a) + 1.0);
  CHECK(std::abs(out(0, 0) - w) < 1e-15);
  CHECK(std::abs(out(0, 1) - (1.0 - w)) < 1e-15);
  CHECK(std::abs(out(1, 0) - (1.0 - w)) < 1e-15);
  CHECK(std::abs(out(1, 1) - w) < 1e-15);
  CHECK(max_abs_diff(out, oracle::attention(to_rows(eye), to_rows(eye), to_rows(eye))) < 1e-15);
}

TEST_CASE("permuting keys and values together changes nothing") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 10);
    const Matrix q = random_matrix(rng, 4, 3), k = random_matrix(rng, m, 3), v = random_matrix(rng, m, 5);
    std::vector<int> perm(m);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix kp(m, 3), vp(m, 5);
    for (int i = 0; i < m; ++i) {
      kp.row(i) = k.row(perm[i]);
      vp.row(i) = v.row(perm[i]);
    }
    CHECK((scaled_dot_attention(q, k, v) - scaled_dot_attention(q, kp, vp)).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("weights are probability rows and outputs stay in the hull of V") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 16), m = 1 + static_cast<int>(rng() % 16);
    const int d = 1 + static_cast<int>(rng() % 16), dv = 1 + static_cast<int>(rng() % 16);
    Matrix q = random_matrix(rng, n, d) * 4.0;
    const Matrix k = random_matrix(rng, m, d), v = random_matrix(rng, m, dv);
    const Matrix w = attention_weights(q, k);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      CHECK(w.row(i).minCoeff() >= 0.0);
      CHECK(std::abs(w.row(i).sum() - 1.0) < 1e-12);
    }
    const Matrix out = scaled_dot_attention(q, k, v);
    for (Eigen::Index c = 0; c < dv; ++c) {
      const double lo = v.col(c).minCoeff(), hi = v.col(c).maxCoeff();
      for (Eigen::Index i = 0; i < n; ++i) {
        CHECK(out(i, c) >= lo - 1e-12);
        CHECK(out(i, c) <= hi + 1e-12);
      }
    }
  }
}

TEST_CASE("scores are divided by the square root of the query/key width") {
  // One query against two keys: the weight ratio is exp((s0 - s1) / sqrt(d)).
  const int d = 9;
  Matrix q = Matrix::Zero(1, d), k = Matrix::Zero(2, d);
  q(0, 0) = 1.0;
  k(0, 0) = 2.0;
  const Matrix w = attention_weights(q, k);
  CHECK(std::abs(w(0, 0) / w(0, 1) - std::exp(2.0 / 3.0)) < 1e-12);
}

TEST_CASE("multi-head attention") {
  std::mt19937_64 rng(4);
  SUBCASE("one head reduces to projected scaled_dot_attention") {
    const Matrix x = random_matrix(rng, 6, 5);
    const AttentionWeights w{random_matrix(rng, 5, 3), random_matrix(rng, 5, 3), random_matrix(rng, 5, 3)};
    const Matrix out = multi_head_attention(x, {w}, HeadConfig{1, 5, 3});
    CHECK((out - scaled_dot_attention(x * w.w_q, x * w.w_k, x * w.w_v)).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("zero input gives zero output") {
    const Matrix x = Matrix::Zero(4, 5);
    std::vector<AttentionWeights> heads;
    for (int h = 0; h < 3; ++h) heads.push_back({random_matrix(rng, 5, 2), random_matrix(rng, 5, 2), random_matrix(rng, 5, 2)});
    const Matrix out = multi_head_attention(x, heads, HeadConfig{3, 5, 2});
    CHECK(out.rows() == 4);
    CHECK(out.cols() == 6);
    CHECK(out.cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("random 8x8 with two heads against the loop oracle") {
    const Matrix x = random_matrix(rng, 8, 8);
    std::vector<AttentionWeights> heads;
    for (int h = 0; h < 2; ++h) heads.push_back({random_matrix(rng, 8, 4), random_matrix(rng, 8, 4), random_matrix(rng, 8, 4)});
    const Matrix out = multi_head_attention(x, heads, HeadConfig{2, 8, 4});
    const auto xr = to_rows(x);
    for (int h = 0; h < 2; ++h) {
      const auto ref = oracle::attention(oracle::matmul(xr, to_rows(heads[h].w_q)), oracle::matmul(xr, to_rows(heads[h].w_k)),
                                         oracle::matmul(xr, to_rows(heads[h].w_v)));
      CHECK(max_abs_diff(out.middleCols(h * 4, 4), ref) < 1e-10);
    }
  }
}

TEST_CASE("attention shape errors") {
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(scaled_dot_attention(random_matrix(rng, 2, 3), random_matrix(rng, 2, 4), random_matrix(rng, 2, 1)),
                  InvalidArgument);
  CHECK_THROWS_AS(scaled_dot_attention(random_matrix(rng, 2, 3), random_matrix(rng, 2, 3), random_matrix(rng, 3, 1)),
                  InvalidArgument);
  Matrix bad = random_matrix(rng, 2, 3);
  bad(0, 0) = NAN;
  CHECK_THROWS_AS(attention_weights(bad, random_matrix(rng, 2, 3)), InvalidArgument);
  const AttentionWeights w{random_matrix(rng, 5, 3), random_matrix(rng, 5, 3), random_matrix(rng, 5, 3)};
  CHECK_THROWS_AS(multi_head_attention(random_matrix(rng, 2, 4), {w}, HeadConfig{1, 4, 3}), InvalidArgument);
  CHECK_THROWS_AS(multi_head_attention(random_matrix(rng, 2, 5), {w}, HeadConfig{2, 5, 3}), InvalidArgument);
}
