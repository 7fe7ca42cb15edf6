#pragma once

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "compbench/core.hpp"
#include "compbench/error.hpp"
#include "compbench/rng.hpp"

namespace compbench::tre {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr int kNumTensors = 14;

/// Parameters of the composition model: an attribute-token table, a CLS vector, and one pre-norm
/// transformer block with single-head attention and a GELU feed-forward layer.
///
/// Every tensor is stored as a matrix; vectors are 1 x n rows. The declaration order below is the
/// checkpoint order.
template <typename Scalar>
struct CompositionModel {
  int dim = 0;
  int hidden = 0;
  Mat<Scalar> tokens;     // 32 x D, rows in class_universe() order
  Mat<Scalar> cls;        // 1 x D
  Mat<Scalar> wq, wk, wv, wo;  // D x D
  Mat<Scalar> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;  // 1 x D
  Mat<Scalar> w1;         // D x H
  Mat<Scalar> b1;         // 1 x H
  Mat<Scalar> w2;         // H x D
  Mat<Scalar> b2;         // 1 x D

  static constexpr std::array<const char*, kNumTensors> kNames = {
      "tokens", "cls", "wq", "wk", "wv", "wo", "ln1_gamma", "ln1_beta",
      "ln2_gamma", "ln2_beta", "w1", "b1", "w2", "b2"};
  /// Tensors that receive decoupled weight decay (everything except norms and biases).
  static constexpr std::array<bool, kNumTensors> kDecayed = {
      true, true, true, true, true, true, false, false, false, false, true, false, true, false};

  static CompositionModel zeros(int dim, int hidden) {
    if (dim <= 0 || hidden <= 0) throw ArgumentError("composition model dims must be positive");
    CompositionModel m;
    m.dim = dim;
    m.hidden = hidden;
    m.tokens = Mat<Scalar>::Zero(kNumTokens, dim);
    m.cls = Mat<Scalar>::Zero(1, dim);
    for (Mat<Scalar>* w : {&m.wq, &m.wk, &m.wv, &m.wo}) *w = Mat<Scalar>::Zero(dim, dim);
    for (Mat<Scalar>* v : {&m.ln1_gamma, &m.ln1_beta, &m.ln2_gamma, &m.ln2_beta, &m.b2}) {
      *v = Mat<Scalar>::Zero(1, dim);
    }
    m.w1 = Mat<Scalar>::Zero(dim, hidden);
    m.b1 = Mat<Scalar>::Zero(1, hidden);
    m.w2 = Mat<Scalar>::Zero(hidden, dim);
    return m;
  }

  /// Token table, CLS and weight matrices ~ N(0, 0.02^2); gammas 1; betas and biases 0.
  static CompositionModel init(int dim, int hidden, std::uint64_t seed) {
    CompositionModel m = zeros(dim, hidden);
    Rng rng(seed);
    for (Mat<Scalar>* t : {&m.tokens, &m.cls, &m.wq, &m.wk, &m.wv, &m.wo, &m.w1, &m.w2}) {
      for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = static_cast<Scalar>(0.02 * rng.normal());
    }
    m.ln1_gamma.setOnes();
    m.ln2_gamma.setOnes();
    return m;
  }

  std::array<Mat<Scalar>*, kNumTensors> tensors() {
    return {&tokens, &cls, &wq, &wk, &wv, &wo, &ln1_gamma, &ln1_beta,
            &ln2_gamma, &ln2_beta, &w1, &b1, &w2, &b2};
  }
  std::array<const Mat<Scalar>*, kNumTensors> tensors() const {
    return {&tokens, &cls, &wq, &wk, &wv, &wo, &ln1_gamma, &ln1_beta,
            &ln2_gamma, &ln2_beta, &w1, &b1, &w2, &b2};
  }

  [[nodiscard]] std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
    return n;
  }

  [[nodiscard]] bool all_finite() const {
    for (const auto* t : tensors()) {
      if (!t->allFinite()) return false;
    }
    return true;
  }

  template <typename Other>
  [[nodiscard]] CompositionModel<Other> cast() const {
    CompositionModel<Other> out = CompositionModel<Other>::zeros(dim, hidden);
    auto dst = out.tensors();
    auto src = tensors();
    for (int i = 0; i < kNumTensors; ++i) *dst[i] = src[i]->template cast<Other>();
    return out;
  }
};

/// Row indices of a source's four attribute tokens.
inline std::array<int, kNumAttributes> token_rows(const Source& s) {
  return {AttributeClass{AttributeKind::Timbre, s.timbre()}.flat_index(),
          AttributeClass{AttributeKind::Pitch, s.pitch()}.flat_index(),
          AttributeClass{AttributeKind::Rate, s.rate()}.flat_index(),
          AttributeClass{AttributeKind::Amplitude, s.amp()}.flat_index()};
}

/// Sum of the token vectors of a source's classes (1 x D).
template <typename Scalar>
Mat<Scalar> source_embed(const Source& s, const Mat<Scalar>& tokens) {
  Mat<Scalar> e = Mat<Scalar>::Zero(1, tokens.cols());
  for (int r : token_rows(s)) e += tokens.row(r);
  return e;
}

using SceneView = std::span<const Source>;

/// Intermediate activations of a batched forward pass, kept for the backward pass.
///
/// Tokens of all scenes are stacked: scene b owns rows [offset[b], offset[b+1]) and its first row
/// is the CLS token. Only the CLS output is read, so attention is evaluated for the CLS query only
/// and the feed-forward layer runs on CLS rows only.
template <typename Scalar>
struct ForwardCache {
  std::vector<Eigen::Index> offset;
  Mat<Scalar> x;        // T x D  stacked inputs
  Mat<Scalar> xhat1;    // T x D  normalized inputs
  Eigen::VectorXd rstd1;
  Mat<Scalar> u;        // T x D  LN1 output
  Mat<Scalar> keys;     // T x D
  Mat<Scalar> values;   // T x D
  Mat<Scalar> q;        // B x D  CLS queries
  std::vector<Eigen::VectorXd> attn;  // per scene softmax weights
  Mat<Scalar> context;  // B x D
  Mat<Scalar> xp;       // B x D  after attention residual
  Mat<Scalar> xhat2;    // B x D
  Eigen::VectorXd rstd2;
  Mat<Scalar> v;        // B x D  LN2 output
  Mat<Scalar> pre;      // B x H  FFN pre-activation
  Mat<Scalar> act;      // B x H  gelu(pre)
  Mat<Scalar> out;      // B x D  predicted embeddings
};

namespace detail {

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

/// Row-wise layer norm; statistics in double.
template <typename Scalar>
void layer_norm(const Mat<Scalar>& x, const Mat<Scalar>& gamma, const Mat<Scalar>& beta,
                Mat<Scalar>& xhat, Eigen::VectorXd& rstd, Mat<Scalar>& y) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  rstd.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::RowVectorXd row = x.row(i).template cast<double>();
    const double mean = row.mean();
    const double var = (row.array() - mean).square().mean();
    rstd[i] = 1.0 / std::sqrt(var + kLayerNormEps);
    xhat.row(i) = ((row.array() - mean) * rstd[i]).matrix().template cast<Scalar>();
  }
  y = (xhat.array().rowwise() * gamma.row(0).array()).rowwise() + beta.row(0).array();
}

/// Gradient of the row-wise layer norm with respect to its input, given dL/dy.
template <typename Scalar>
Mat<Scalar> layer_norm_backward(const Mat<Scalar>& dy, const Mat<Scalar>& xhat,
                                const Eigen::VectorXd& rstd, const Mat<Scalar>& gamma,
                                Mat<Scalar>& dgamma, Mat<Scalar>& dbeta) {
  dgamma += (dy.array() * xhat.array()).colwise().sum().matrix();
  dbeta += dy.colwise().sum();
  Mat<Scalar> dx(dy.rows(), dy.cols());
  for (Eigen::Index i = 0; i < dy.rows(); ++i) {
    const Eigen::RowVectorXd g = (dy.row(i).array() * gamma.row(0).array()).matrix().template cast<double>();
    const Eigen::RowVectorXd xh = xhat.row(i).template cast<double>();
    const double mean_g = g.mean();
    const double mean_gx = g.dot(xh) / static_cast<double>(g.size());
    dx.row(i) = (rstd[i] * (g.array() - mean_g - xh.array() * mean_gx)).matrix().template cast<Scalar>();
  }
  return dx;
}

}  // namespace detail

/// Predicted scene embeddings for a batch (B x D). The cache is filled for backward().
template <typename Scalar>
Mat<Scalar> forward(const CompositionModel<Scalar>& m, std::span<const SceneView> scenes,
                    ForwardCache<Scalar>& c) {
  const Eigen::Index d = m.dim;
  const auto b = static_cast<Eigen::Index>(scenes.size());
  if (m.tokens.rows() != kNumTokens || m.tokens.cols() != d || m.wq.rows() != d ||
      m.w1.rows() != d || m.w1.cols() != m.hidden || m.w2.rows() != m.hidden || m.w2.cols() != d) {
    throw ArgumentError("composition model tensor shapes do not match dim/hidden");
  }

  c.offset.assign(1, 0);
  for (const auto& s : scenes) {
    if (s.empty()) throw ArgumentError("forward: scene with no sources");
    c.offset.push_back(c.offset.back() + 1 + static_cast<Eigen::Index>(s.size()));
  }
  const Eigen::Index total = c.offset.back();

  c.x.resize(total, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::Index row = c.offset[i];
    c.x.row(row++) = m.cls.row(0);
    for (const Source& src : scenes[i]) c.x.row(row++) = source_embed(src, m.tokens);
  }

  detail::layer_norm(c.x, m.ln1_gamma, m.ln1_beta, c.xhat1, c.rstd1, c.u);
  c.keys.noalias() = c.u * m.wk;
  c.values.noalias() = c.u * m.wv;

  Mat<Scalar> u_cls(b, d);
  for (Eigen::Index i = 0; i < b; ++i) u_cls.row(i) = c.u.row(c.offset[i]);
  c.q.noalias() = u_cls * m.wq;

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  c.attn.resize(static_cast<std::size_t>(b));
  c.context.resize(b, d);
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::Index lo = c.offset[i], n = c.offset[i + 1] - lo;
    const Eigen::VectorXd scores =
        (c.keys.middleRows(lo, n) * c.q.row(i).transpose()).template cast<double>() * scale;
    Eigen::VectorXd a = (scores.array() - scores.maxCoeff()).exp();
    a /= a.sum();
    c.context.row(i) = a.template cast<Scalar>().transpose() * c.values.middleRows(lo, n);
    c.attn[static_cast<std::size_t>(i)] = std::move(a);
  }

  c.xp = c.context * m.wo;
  c.xp.rowwise() += m.cls.row(0);

  detail::layer_norm(c.xp, m.ln2_gamma, m.ln2_beta, c.xhat2, c.rstd2, c.v);
  c.pre.noalias() = c.v * m.w1;
  c.pre.rowwise() += m.b1.row(0);
  c.act = c.pre.unaryExpr([](Scalar x) { return static_cast<Scalar>(detail::gelu(static_cast<double>(x))); });
  c.out = c.xp;
  c.out.noalias() += c.act * m.w2;
  c.out.rowwise() += m.b2.row(0);
  return c.out;
}

template <typename Scalar>
Mat<Scalar> forward(const CompositionModel<Scalar>& m, std::span<const SceneView> scenes) {
  ForwardCache<Scalar> c;
  return forward(m, scenes, c);
}

/// Predicted embedding of a single scene (1 x D).
template <typename Scalar>
Mat<Scalar> predict(const CompositionModel<Scalar>& m, SceneView scene) {
  return forward(m, std::span<const SceneView>(&scene, 1));
}

/// Gradients of a scalar loss with respect to every parameter, given dL/d(out) (B x D).
template <typename Scalar>
CompositionModel<Scalar> backward(const CompositionModel<Scalar>& m,
                                  std::span<const SceneView> scenes, const ForwardCache<Scalar>& c,
                                  const Mat<Scalar>& dout) {
  const Eigen::Index d = m.dim;
  const auto b = static_cast<Eigen::Index>(scenes.size());
  CompositionModel<Scalar> g = CompositionModel<Scalar>::zeros(m.dim, m.hidden);

  // Feed-forward branch and output bias.
  g.b2 = dout.colwise().sum();
  g.w2.noalias() = c.act.transpose() * dout;
  Mat<Scalar> dpre = dout * m.w2.transpose();
  for (Eigen::Index i = 0; i < dpre.size(); ++i) {
    dpre.data()[i] *= static_cast<Scalar>(detail::gelu_grad(static_cast<double>(c.pre.data()[i])));
  }
  g.b1 = dpre.colwise().sum();
  g.w1.noalias() = c.v.transpose() * dpre;
  const Mat<Scalar> dv = dpre * m.w1.transpose();
  Mat<Scalar> dxp = dout + detail::layer_norm_backward(dv, c.xhat2, c.rstd2, m.ln2_gamma,
                                                       g.ln2_gamma, g.ln2_beta);

  // Attention residual: xp = cls + context * wo.
  g.cls = dxp.colwise().sum();
  g.wo.noalias() = c.context.transpose() * dxp;
  const Mat<Scalar> dctx = dxp * m.wo.transpose();

  const Eigen::Index total = c.offset.back();
  Mat<Scalar> dkeys = Mat<Scalar>::Zero(total, d);
  Mat<Scalar> dvalues = Mat<Scalar>::Zero(total, d);
  Mat<Scalar> dq(b, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::Index lo = c.offset[i], n = c.offset[i + 1] - lo;
    const Eigen::VectorXd& a = c.attn[static_cast<std::size_t>(i)];
    const Eigen::VectorXd da = (c.values.middleRows(lo, n) * dctx.row(i).transpose()).template cast<double>();
    dvalues.middleRows(lo, n).noalias() = a.template cast<Scalar>() * dctx.row(i);
    const Eigen::VectorXd ds = (a.array() * (da.array() - a.dot(da))).matrix() * scale;
    const auto dsc = ds.template cast<Scalar>();
    dq.row(i) = dsc.transpose() * c.keys.middleRows(lo, n);
    dkeys.middleRows(lo, n).noalias() = dsc * c.q.row(i);
  }

  Mat<Scalar> u_cls(b, d);
  for (Eigen::Index i = 0; i < b; ++i) u_cls.row(i) = c.u.row(c.offset[i]);
  g.wq.noalias() = u_cls.transpose() * dq;
  g.wk.noalias() = c.u.transpose() * dkeys;
  g.wv.noalias() = c.u.transpose() * dvalues;

  Mat<Scalar> du = dkeys * m.wk.transpose();
  du.noalias() += dvalues * m.wv.transpose();
  const Mat<Scalar> dq_u = dq * m.wq.transpose();
  for (Eigen::Index i = 0; i < b; ++i) du.row(c.offset[i]) += dq_u.row(i);

  const Mat<Scalar> dx = detail::layer_norm_backward(du, c.xhat1, c.rstd1, m.ln1_gamma,
                                                     g.ln1_gamma, g.ln1_beta);
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::Index row = c.offset[i];
    g.cls.row(0) += dx.row(row++);
    for (const Source& src : scenes[i]) {
      for (int r : token_rows(src)) g.tokens.row(r) += dx.row(row);
      ++row;
    }
  }
  return g;
}

/// Mean over the batch of 1 - cos(target, prediction), and its gradient with respect to the
/// predictions. Rows are items.
template <typename Scalar>
double cosine_loss(const Mat<Scalar>& target, const Mat<Scalar>& pred, Mat<Scalar>* dpred = nullptr) {
  if (target.rows() != pred.rows() || target.cols() != pred.cols()) {
    throw ArgumentError("cosine_loss: shape mismatch");
  }
  const auto b = pred.rows();
  if (b == 0) throw ArgumentError("cosine_loss: empty batch");
  if (dpred != nullptr) dpred->resize(b, pred.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    const Eigen::RowVectorXd z = target.row(i).template cast<double>();
    const Eigen::RowVectorXd p = pred.row(i).template cast<double>();
    const double nz = z.norm(), np = p.norm();
    if (!(nz > 0.0)) throw DegenerateError("cosine_loss: zero-norm target in row " + std::to_string(i));
    if (!(np > 0.0)) throw DegenerateError("cosine_loss: zero-norm prediction in row " + std::to_string(i));
    const double cos = z.dot(p) / (nz * np);
    total += 1.0 - cos;
    if (dpred != nullptr) {
      dpred->row(i) = (-(z / (nz * np) - cos * p / (np * np)) / static_cast<double>(b)).template cast<Scalar>();
    }
  }
  return total / static_cast<double>(b);
}

/// Loss on a batch plus gradients for every parameter.
template <typename Scalar>
double loss_and_grad(const CompositionModel<Scalar>& m, std::span<const SceneView> scenes,
                     const Mat<Scalar>& targets, CompositionModel<Scalar>& grad) {
  ForwardCache<Scalar> c;
  const Mat<Scalar> pred = forward(m, scenes, c);
  Mat<Scalar> dpred;
  const double loss = cosine_loss(targets, pred, &dpred);
  grad = backward(m, scenes, c, dpred);
  return loss;
}

}  // namespace compbench::tre
