#include "phasecal/attention.hpp"

#include <cmath>
#include <string>

#include "phasecal/error.hpp"

namespace phasecal::attention {

namespace {

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) throw InvalidArgument(std::string(name) + " has non-finite entries");
}

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix attention_weights(const Matrix& q, const Matrix& k) {
  if (q.cols() != k.cols() || q.cols() == 0 || k.rows() == 0) {
    throw InvalidArgument("query " + shape(q) + " and key " + shape(k) + " are not conformable");
  }
  require_finite(q, "Q");
  require_finite(k, "K");
  Matrix scores = (q * k.transpose()) / std::sqrt(static_cast<double>(q.cols()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    auto row = scores.row(i);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
  }
  return scores;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v) {
  if (v.rows() != k.rows()) {
    throw InvalidArgument("value " + shape(v) + " does not match key " + shape(k));
  }
  require_finite(v, "V");
  return attention_weights(q, k) * v;
}

Matrix multi_head_attention(const Matrix& x, const std::vector<AttentionWeights>& heads,
                            const HeadConfig& cfg) {
  if (cfg.num_heads < 1 || static_cast<int>(heads.size()) != cfg.num_heads) {
    throw InvalidArgument("expected " + std::to_string(cfg.num_heads) + " heads, got " +
                          std::to_string(heads.size()));
  }
  if (x.cols() != cfg.d_in) throw InvalidArgument("input " + shape(x) + " does not have d_in columns");
  for (const auto& h : heads) {
    if (h.w_q.rows() != cfg.d_in || h.w_k.rows() != cfg.d_in || h.w_v.rows() != cfg.d_in ||
        h.w_q.cols() != cfg.d_h || h.w_k.cols() != cfg.d_h || h.w_v.cols() != cfg.d_h) {
      throw InvalidArgument("head projections must be d_in x d_h");
    }
  }
  Matrix out(x.rows(), cfg.output_width());
  for (int h = 0; h < cfg.num_heads; ++h) {
    const auto& w = heads[h];
    out.middleCols(static_cast<Eigen::Index>(h) * cfg.d_h, cfg.d_h) =
        scaled_dot_attention(x * w.w_q, x * w.w_k, x * w.w_v);
  }
  return out;
}

}  // namespace phasecal::attention
