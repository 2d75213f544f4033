#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "slipgrasp/core.hpp"

namespace slipgrasp::ml {

enum class KernelType { linear, rbf };

inline std::string_view kernel_name(KernelType k) { return k == KernelType::linear ? "linear" : "rbf"; }

inline KernelType kernel_from_name(std::string_view s) {
  if (s == "linear") return KernelType::linear;
  if (s == "rbf") return KernelType::rbf;
  throw Error(ErrorCode::schema, "unknown kernel '" + std::string(s) + "'");
}

struct Kernel {
  KernelType type = KernelType::linear;
  double gamma = 1.0;

  double operator()(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) const {
    if (type == KernelType::linear) return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
  }

  // Kernel between every row of a and every row of b.
  Matrix gram(const Matrix& a, const Matrix& b) const {
    Matrix k = a * b.transpose();
    if (type == KernelType::rbf) {
      const Vector na = a.rowwise().squaredNorm();
      const Vector nb = b.rowwise().squaredNorm();
      for (Eigen::Index j = 0; j < k.cols(); ++j)
        for (Eigen::Index i = 0; i < k.rows(); ++i)
          k(i, j) = std::exp(-gamma * std::max(0.0, na(i) + nb(j) - 2.0 * k(i, j)));
    }
    return k;
  }
};

// Width used when no gamma is configured: 1 / (feature_count * feature_variance).
inline double default_gamma(const Matrix& x) {
  const double n = static_cast<double>(x.size());
  if (n == 0.0) return 1.0;
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / n;
  return 1.0 / (static_cast<double>(x.cols()) * std::max(var, 1e-12));
}

// Binary decision function f(x) = sum_k w_k K(x_k, x) + b with w_k = alpha_k y_k.
struct SvmModel {
  Kernel kernel;
  double c = 1.0;
  Matrix support_vectors;  // one row per support vector
  Vector weights;
  double bias = 0.0;

  // Solver diagnostics.
  bool converged = false;
  long iterations = 0;
  double kkt_residual = 0.0;
  double dual_objective = 0.0;

  double decision(const Eigen::Ref<const Vector>& x) const {
    if (support_vectors.rows() > 0 && x.size() != support_vectors.cols())
      throw Error(ErrorCode::dimension_mismatch, "feature vector has " + std::to_string(x.size()) +
                                                     " entries, model expects " + std::to_string(support_vectors.cols()));
    double f = bias;
    for (Eigen::Index k = 0; k < support_vectors.rows(); ++k)
      f += weights(k) * kernel(support_vectors.row(k).transpose(), x);
    return f;
  }

  Vector decisions(const Matrix& x) const {
    if (support_vectors.rows() == 0) return Vector::Constant(x.rows(), bias);
    if (x.cols() != support_vectors.cols()) throw Error(ErrorCode::dimension_mismatch, "feature dimension mismatch");
    return (kernel.gram(x, support_vectors) * weights).array() + bias;
  }
};

struct SmoOptions {
  double tol = 1e-3;
  long max_iterations = 0;  // 0 picks max(1e6, 100 n)
  bool record_objective = false;
};

struct SmoResult {
  SvmModel model;
  Vector alpha;
  std::vector<double> objective_trace;  // dual objective after each iteration when recorded
};

// Dual objective sum(alpha) - 1/2 alpha' Q alpha with Q_ij = y_i y_j K_ij.
inline double svm_dual_objective(const Matrix& gram, const Vector& y, const Vector& alpha) {
  const Vector ay = alpha.cwiseProduct(y);
  return alpha.sum() - 0.5 * ay.dot(gram * ay);
}

// Sequential minimal optimization on a precomputed kernel matrix, using maximal
// violating pairs with second-order selection of the second index.
inline SmoResult train_svm_gram(const Matrix& gram, const Vector& y, double c, const SmoOptions& opt = {}) {
  const Eigen::Index n = y.size();
  if (gram.rows() != n || gram.cols() != n) throw Error(ErrorCode::dimension_mismatch, "kernel matrix shape");
  if (!(c > 0.0)) throw Error(ErrorCode::invalid_argument, "C must be positive");
  bool has_pos = false, has_neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 1.0) has_pos = true;
    else if (y(i) == -1.0) has_neg = true;
    else throw Error(ErrorCode::invalid_argument, "labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) throw Error(ErrorCode::invalid_argument, "need at least one sample of each label");

  constexpr double tau = 1e-12;
  const long max_iter = opt.max_iterations > 0 ? opt.max_iterations : std::max<long>(1000000, 100 * n);
  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  auto upper = [&](Eigen::Index t) { return alpha(t) >= c; };
  auto lower = [&](Eigen::Index t) { return alpha(t) <= 0.0; };
  auto objective = [&] { return 0.5 * alpha.sum() - 0.5 * alpha.dot(grad); };

  SmoResult res;
  long iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (iter < max_iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool up = y(t) > 0 ? !upper(t) : !lower(t);
      if (up && -y(t) * grad(t) >= gmax) {
        gmax = -y(t) * grad(t);
        i = t;
      }
    }
    double gmax2 = -std::numeric_limits<double>::infinity();
    double best_gain = std::numeric_limits<double>::infinity();
    Eigen::Index j = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      const bool low = y(t) > 0 ? !lower(t) : !upper(t);
      if (!low) continue;
      const double v = y(t) * grad(t);
      gmax2 = std::max(gmax2, v);
      const double diff = gmax + v;
      if (i >= 0 && diff > 0.0) {
        double quad = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (quad <= 0.0) quad = tau;
        const double gain = -(diff * diff) / quad;
        if (gain <= best_gain) {
          best_gain = gain;
          j = t;
        }
      }
    }
    residual = gmax + gmax2;
    if (i < 0 || j < 0 || residual < opt.tol) break;
    ++iter;

    const double old_i = alpha(i), old_j = alpha(j);
    const double qij = y(i) * y(j) * gram(i, j);
    if (y(i) != y(j)) {
      double quad = gram(i, i) + gram(j, j) + 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
      } else {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
      }
    } else {
      double quad = gram(i, i) + gram(j, j) - 2.0 * qij;
      if (quad <= 0.0) quad = tau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > c) {
        if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > c) {
        if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }
    const double di = alpha(i) - old_i, dj = alpha(j) - old_j;
    for (Eigen::Index t = 0; t < n; ++t)
      grad(t) += y(t) * (y(i) * gram(t, i) * di + y(j) * gram(t, j) * dj);
    if (opt.record_objective) res.objective_trace.push_back(objective());
  }

  // Bias from free variables, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y(t) * grad(t);
    if (upper(t)) {
      if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (lower(t)) {
      if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);

  res.alpha = alpha;
  SvmModel& m = res.model;
  m.c = c;
  m.bias = -rho;
  m.converged = residual < opt.tol;
  m.iterations = iter;
  m.kkt_residual = residual;
  m.dual_objective = objective();
  return res;
}

inline SvmModel train_svm(const Matrix& x, const Vector& y, KernelType kernel, double c, double gamma = 0.0,
                          const SmoOptions& opt = {}) {
  if (x.rows() != y.size()) throw Error(ErrorCode::dimension_mismatch, "sample and label counts differ");
  Kernel k{kernel, gamma > 0.0 ? gamma : default_gamma(x)};
  SmoResult r = train_svm_gram(k.gram(x, x), y, c, opt);
  SvmModel m = std::move(r.model);
  m.kernel = k;
  std::vector<Eigen::Index> sv;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (r.alpha(i) > 0.0) sv.push_back(i);
  m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  m.weights.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t k2 = 0; k2 < sv.size(); ++k2) {
    m.support_vectors.row(static_cast<Eigen::Index>(k2)) = x.row(sv[k2]);
    m.weights(static_cast<Eigen::Index>(k2)) = r.alpha(sv[k2]) * y(sv[k2]);
  }
  return m;
}

// One-vs-one ensemble: one binary model per unordered class pair, positive label for
// the first class of the pair.
struct OneVsOneSvm {
  std::vector<int> classes;
  std::vector<std::pair<int, int>> pairs;
  std::vector<SvmModel> models;

  Vector decision_values(const Eigen::Ref<const Vector>& x) const {
    Vector d(static_cast<Eigen::Index>(models.size()));
    for (std::size_t p = 0; p < models.size(); ++p) d(static_cast<Eigen::Index>(p)) = models[p].decision(x);
    return d;
  }

  // Majority vote; ties go to the class with the largest summed winning margin.
  int vote(const Vector& decisions) const {
    std::map<int, int> votes;
    std::map<int, double> margin;
    for (int cls : classes) votes[cls] = 0, margin[cls] = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const double f = decisions(static_cast<Eigen::Index>(p));
      const int winner = f > 0.0 ? pairs[p].first : pairs[p].second;
      ++votes[winner];
      margin[winner] += std::abs(f);
    }
    int best = classes.front();
    for (int cls : classes) {
      if (votes[cls] > votes[best] || (votes[cls] == votes[best] && margin[cls] > margin[best])) best = cls;
    }
    return best;
  }

  int predict(const Eigen::Ref<const Vector>& x) const {
    if (models.empty()) throw Error(ErrorCode::invalid_argument, "empty one-vs-one model");
    return vote(decision_values(x));
  }

  std::vector<int> predict_all(const Matrix& x) const {
    Matrix d(x.rows(), static_cast<Eigen::Index>(models.size()));
    for (std::size_t p = 0; p < models.size(); ++p) d.col(static_cast<Eigen::Index>(p)) = models[p].decisions(x);
    std::vector<int> out;
    for (Eigen::Index i = 0; i < x.rows(); ++i) out.push_back(vote(d.row(i).transpose()));
    return out;
  }
};

inline OneVsOneSvm train_one_vs_one(const Matrix& x, const std::vector<int>& labels, KernelType kernel, double c,
                                    double gamma = 0.0, const SmoOptions& opt = {}) {
  if (static_cast<Eigen::Index>(labels.size()) != x.rows())
    throw Error(ErrorCode::dimension_mismatch, "sample and label counts differ");
  OneVsOneSvm ovo;
  ovo.classes = labels;
  std::sort(ovo.classes.begin(), ovo.classes.end());
  ovo.classes.erase(std::unique(ovo.classes.begin(), ovo.classes.end()), ovo.classes.end());
  if (ovo.classes.size() < 2) throw Error(ErrorCode::invalid_argument, "need at least two classes");
  const Kernel k{kernel, gamma > 0.0 ? gamma : default_gamma(x)};
  const Matrix full = k.gram(x, x);
  for (std::size_t a = 0; a < ovo.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < ovo.classes.size(); ++b) {
      std::vector<Eigen::Index> idx;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == ovo.classes[a] || labels[i] == ovo.classes[b]) idx.push_back(static_cast<Eigen::Index>(i));
      const auto m = static_cast<Eigen::Index>(idx.size());
      Matrix g(m, m);
      Vector y(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        y(r) = labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] == ovo.classes[a] ? 1.0 : -1.0;
        for (Eigen::Index s = 0; s < m; ++s) g(r, s) = full(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(s)]);
      }
      SmoResult res = train_svm_gram(g, y, c, opt);
      SvmModel model = std::move(res.model);
      model.kernel = k;
      std::vector<Eigen::Index> sv;
      for (Eigen::Index r = 0; r < m; ++r)
        if (res.alpha(r) > 0.0) sv.push_back(r);
      model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
      model.weights.resize(static_cast<Eigen::Index>(sv.size()));
      for (std::size_t s = 0; s < sv.size(); ++s) {
        model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(idx[static_cast<std::size_t>(sv[s])]);
        model.weights(static_cast<Eigen::Index>(s)) = res.alpha(sv[s]) * y(sv[s]);
      }
      ovo.pairs.emplace_back(ovo.classes[a], ovo.classes[b]);
      ovo.models.push_back(std::move(model));
    }
  }
  return ovo;
}

}  // namespace slipgrasp::ml
