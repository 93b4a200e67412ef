#pragma once

#include <vector>

#include <Eigen/Dense>

namespace phasecal::attention {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Projections of one head: d_in -> d_h for queries and keys, d_in -> d_v for values.
struct AttentionWeights {
  Matrix w_q;
  Matrix w_k;
  Matrix w_v;
};

struct HeadConfig {
  int num_heads = 1;
  int d_in = 0;
  int d_h = 0;

  int output_width() const noexcept { return num_heads * d_h; }
};

// Row-stochastic weights softmax(Q K^T / sqrt(d)), d the shared query/key width.
// Q is n x d, K is m x d. Throws InvalidArgument on width mismatch or
// non-finite input.
Matrix attention_weights(const Matrix& q, const Matrix& k);

// softmax(Q K^T / sqrt(d)) V. V is m x d_v; the result is n x d_v.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v);

// Per head: Q = x W_Q, K = x W_K, V = x W_V, attend, then concatenate head
// outputs along the feature axis. No output projection.
Matrix multi_head_attention(const Matrix& x, const std::vector<AttentionWeights>& heads,
                            const HeadConfig& cfg);

}  // namespace phasecal::attention
