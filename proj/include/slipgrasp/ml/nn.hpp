#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "slipgrasp/core.hpp"
#include "slipgrasp/signal.hpp"

namespace slipgrasp::ml {

using signal::PaddedBatch;

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)), grad(Matrix::Zero(rows, cols)) {}
};

using ParamList = std::vector<Param*>;

inline void zero_grads(const ParamList& ps) {
  for (Param* p : ps) p->grad.setZero();
}

inline void init_uniform(Param& p, double scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Eigen::Index j = 0; j < p.value.cols(); ++j)
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = u(rng);
}

inline Matrix sigmoid(const Matrix& z) { return (1.0 / (1.0 + (-z.array()).exp())).matrix(); }

// Inverted dropout mask: kept entries scaled by 1/(1-rate).
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  if (rate <= 0.0) {
    m.setOnes();
    return m;
  }
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = keep(rng) ? scale : 0.0;
  return m;
}

// y = x W + b
struct Dense {
  Param w, b;

  Dense() = default;
  Dense(const std::string& name, int in, int out) : w(name + ".w", in, out), b(name + ".b", 1, out) {}

  int in() const { return static_cast<int>(w.value.rows()); }
  int out() const { return static_cast<int>(w.value.cols()); }

  void init(std::mt19937_64& rng) {
    const double s = 1.0 / std::sqrt(static_cast<double>(in()));
    init_uniform(w, s, rng);
    init_uniform(b, s, rng);
  }

  Matrix forward(const Matrix& x) const {
    if (x.cols() != w.value.rows())
      throw Error(ErrorCode::shape_mismatch, w.name + " expects " + std::to_string(w.value.rows()) + " inputs, got " +
                                                  std::to_string(x.cols()));
    Matrix y = x * w.value;
    y.rowwise() += b.value.row(0);
    return y;
  }

  // Accumulates parameter gradients, returns d loss / d x.
  Matrix backward(const Matrix& x, const Matrix& dy) {
    w.grad.noalias() += x.transpose() * dy;
    b.grad.row(0) += dy.colwise().sum();
    return dy * w.value.transpose();
  }

  ParamList params() { return {&w, &b}; }
};

// Per-step tensors kept for backpropagation through time.
struct LstmCache {
  int steps = 0;
  std::vector<Matrix> x;       // dropped input, B x F
  std::vector<Matrix> h_prev;  // dropped previous hidden, B x H
  std::vector<Matrix> gates;   // activated i f g o, B x 4H
  std::vector<Matrix> c_prev;  // B x H
  std::vector<Matrix> tanh_c;  // tanh of the candidate new cell, B x H
  Matrix input_mask;           // B x F dropout mask, shared over time
  Matrix recurrent_mask;       // B x H
  bool dropout = false;
};

struct LstmOutput {
  std::vector<Matrix> hidden;  // B x H per step
  Matrix pooled;               // B x H, mean over unmasked steps
};

// Gate order in the packed weights: input, forget, cell candidate, output.
struct Lstm {
  Param w, u, b;

  Lstm() = default;
  Lstm(const std::string& name, int features, int cells)
      : w(name + ".w", features, 4 * cells), u(name + ".u", cells, 4 * cells), b(name + ".b", 1, 4 * cells) {}

  int features() const { return static_cast<int>(w.value.rows()); }
  int cells() const { return static_cast<int>(u.value.rows()); }

  void init(std::mt19937_64& rng) {
    init_uniform(w, 1.0 / std::sqrt(static_cast<double>(features())), rng);
    init_uniform(u, 1.0 / std::sqrt(static_cast<double>(cells())), rng);
    init_uniform(b, 1.0 / std::sqrt(static_cast<double>(cells())), rng);
  }

  ParamList params() { return {&w, &u, &b}; }

  LstmOutput forward(const PaddedBatch& batch, double input_dropout, double recurrent_dropout, bool dropout_on,
                     std::mt19937_64* rng, LstmCache* cache) const {
    if (batch.features != features())
      throw Error(ErrorCode::shape_mismatch, w.name + " expects " + std::to_string(features()) + " features, got " +
                                                  std::to_string(batch.features));
    const int bsz = batch.batch, hn = cells();
    int steps = 0;
    for (int t = 0; t < batch.steps; ++t)
      if ((batch.mask.col(t).array() != 0.0).any()) steps = t + 1;
    if (static_cast<int>(batch.data.size()) < steps) throw Error(ErrorCode::shape_mismatch, "batch has too few steps");
    const bool drop = dropout_on && rng != nullptr && (input_dropout > 0.0 || recurrent_dropout > 0.0);
    Matrix in_mask, rec_mask;
    if (drop) {
      in_mask = dropout_mask(bsz, features(), input_dropout, *rng);
      rec_mask = dropout_mask(bsz, hn, recurrent_dropout, *rng);
    }
    if (cache) {
      *cache = LstmCache{};
      cache->steps = steps;
      cache->dropout = drop;
      cache->input_mask = in_mask;
      cache->recurrent_mask = rec_mask;
    }

    LstmOutput out;
    Matrix h = Matrix::Zero(bsz, hn), c = Matrix::Zero(bsz, hn);
    Matrix pooled = Matrix::Zero(bsz, hn);
    Matrix z(bsz, 4 * hn);
    for (int t = 0; t < steps; ++t) {
      const Matrix xt = drop ? Matrix(batch.data[static_cast<std::size_t>(t)].cwiseProduct(in_mask))
                             : batch.data[static_cast<std::size_t>(t)];
      const Matrix ht = drop ? Matrix(h.cwiseProduct(rec_mask)) : h;
      z.noalias() = xt * w.value;
      z.noalias() += ht * u.value;
      z.rowwise() += b.value.row(0);
      Matrix act(bsz, 4 * hn);
      act.leftCols(2 * hn) = sigmoid(z.leftCols(2 * hn));
      act.middleCols(2 * hn, hn) = z.middleCols(2 * hn, hn).array().tanh().matrix();
      act.rightCols(hn) = sigmoid(z.rightCols(hn));
      Matrix c_new = act.middleCols(hn, hn).cwiseProduct(c) + act.leftCols(hn).cwiseProduct(act.middleCols(2 * hn, hn));
      Matrix tc = c_new.array().tanh().matrix();
      Matrix h_new = act.rightCols(hn).cwiseProduct(tc);
      if (cache) {
        cache->x.push_back(xt);
        cache->h_prev.push_back(ht);
        cache->gates.push_back(act);
        cache->c_prev.push_back(c);
        cache->tanh_c.push_back(tc);
      }
      for (int r = 0; r < bsz; ++r) {
        if (batch.mask(r, t) != 0.0) {
          h.row(r) = h_new.row(r);
          c.row(r) = c_new.row(r);
          pooled.row(r) += h.row(r);
        }
      }
      out.hidden.push_back(h);
    }
    for (int r = 0; r < bsz; ++r) {
      const double len = batch.mask.row(r).head(steps).sum();
      if (len > 0.0) pooled.row(r) /= len;
    }
    out.pooled = std::move(pooled);
    return out;
  }

  // d_pooled: gradient of the loss w.r.t. the pooled vector. Accumulates into w, u, b.
  void backward(const PaddedBatch& batch, const LstmCache& cache, const Matrix& d_pooled) {
    const int bsz = batch.batch, hn = cells();
    Vector inv_len = Vector::Zero(bsz);
    for (int r = 0; r < bsz; ++r) {
      const double len = batch.mask.row(r).head(cache.steps).sum();
      inv_len(r) = len > 0.0 ? 1.0 / len : 0.0;
    }
    Matrix dh = Matrix::Zero(bsz, hn), dc = Matrix::Zero(bsz, hn);
    Matrix dz(bsz, 4 * hn);
    for (int t = cache.steps - 1; t >= 0; --t) {
      const auto ts = static_cast<std::size_t>(t);
      const Matrix& act = cache.gates[ts];
      // Masked rows pass gradients straight to the previous state.
      Matrix dh_new = Matrix::Zero(bsz, hn), dc_new = Matrix::Zero(bsz, hn);
      for (int r = 0; r < bsz; ++r) {
        if (batch.mask(r, t) != 0.0) {
          dh_new.row(r) = dh.row(r) + inv_len(r) * d_pooled.row(r);
          dc_new.row(r) = dc.row(r);
          dh.row(r).setZero();
          dc.row(r).setZero();
        }
      }
      const auto gi = act.leftCols(hn).array();
      const auto gf = act.middleCols(hn, hn).array();
      const auto gg = act.middleCols(2 * hn, hn).array();
      const auto go = act.rightCols(hn).array();
      const auto tc = cache.tanh_c[ts].array();
      const Eigen::ArrayXXd dct = dc_new.array() + dh_new.array() * go * (1.0 - tc.square());
      dz.leftCols(hn) = (dct * gg * gi * (1.0 - gi)).matrix();
      dz.middleCols(hn, hn) = (dct * cache.c_prev[ts].array() * gf * (1.0 - gf)).matrix();
      dz.middleCols(2 * hn, hn) = (dct * gi * (1.0 - gg.square())).matrix();
      dz.rightCols(hn) = (dh_new.array() * tc * go * (1.0 - go)).matrix();
      w.grad.noalias() += cache.x[ts].transpose() * dz;
      u.grad.noalias() += cache.h_prev[ts].transpose() * dz;
      b.grad.row(0) += dz.colwise().sum();
      Matrix dh_prev = dz * u.value.transpose();
      if (cache.dropout) dh_prev = dh_prev.cwiseProduct(cache.recurrent_mask);
      dh += dh_prev;
      dc += (dct * gf).matrix();
    }
  }
};

// Losses are means over every element of the batch.
inline constexpr double bce_clamp = 1e-7;

inline double bce_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw Error(ErrorCode::shape_mismatch, "prediction and target shapes differ");
  const Eigen::ArrayXXd p = pred.array().max(bce_clamp).min(1.0 - bce_clamp);
  const Eigen::ArrayXXd t = target.array();
  return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean();
}

inline Matrix bce_grad(const Matrix& pred, const Matrix& target) {
  const double n = static_cast<double>(pred.size());
  Matrix g(pred.rows(), pred.cols());
  for (Eigen::Index j = 0; j < pred.cols(); ++j) {
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
      const double p = pred(i, j);
      if (p < bce_clamp || p > 1.0 - bce_clamp) {
        g(i, j) = 0.0;
        continue;
      }
      g(i, j) = (p - target(i, j)) / (p * (1.0 - p) * n);
    }
  }
  return g;
}

// Gradient of the BCE loss w.r.t. the logits of a sigmoid output. Matches
// bce_grad composed with the sigmoid derivative inside the clamp range.
inline Matrix bce_logit_grad(const Matrix& pred, const Matrix& target) {
  const double n = static_cast<double>(pred.size());
  Matrix g = (pred - target) / n;
  for (Eigen::Index j = 0; j < pred.cols(); ++j)
    for (Eigen::Index i = 0; i < pred.rows(); ++i)
      if (pred(i, j) < bce_clamp || pred(i, j) > 1.0 - bce_clamp) g(i, j) = 0.0;
  return g;
}

inline double mse_loss(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw Error(ErrorCode::shape_mismatch, "prediction and target shapes differ");
  return (pred - target).array().square().mean();
}

inline Matrix mse_grad(const Matrix& pred, const Matrix& target) {
  return 2.0 * (pred - target) / static_cast<double>(pred.size());
}

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;
};

inline void adam_step(const ParamList& params, AdamState& s) {
  if (s.m.empty()) {
    for (const Param* p : params) {
      s.m.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
      s.v.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (s.m.size() != params.size()) throw Error(ErrorCode::shape_mismatch, "optimizer state does not match parameters");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    if (s.m[k].rows() != p.grad.rows() || s.m[k].cols() != p.grad.cols())
      throw Error(ErrorCode::shape_mismatch, "optimizer moment shape differs for " + p.name);
    s.m[k] = s.beta1 * s.m[k] + (1.0 - s.beta1) * p.grad;
    s.v[k] = s.beta2 * s.v[k] + (1.0 - s.beta2) * p.grad.cwiseAbs2();
    p.value.array() -= s.lr * (s.m[k].array() / c1) / ((s.v[k].array() / c2).sqrt() + s.eps);
  }
}

inline std::vector<Matrix> snapshot(const ParamList& ps) {
  std::vector<Matrix> out;
  for (const Param* p : ps) out.push_back(p->value);
  return out;
}

inline void restore(const ParamList& ps, const std::vector<Matrix>& values) {
  for (std::size_t k = 0; k < ps.size(); ++k) ps[k]->value = values[k];
}

}  // namespace slipgrasp::ml
