#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "slipgrasp/core.hpp"

namespace slipgrasp::ml {

struct FoldSplit {
  std::vector<std::vector<std::string>> objects;     // object names per fold
  std::vector<std::vector<std::size_t>> indices;     // sample indices per fold

  int k() const { return static_cast<int>(objects.size()); }

  // Indices outside fold f.
  std::vector<std::size_t> complement(int f) const {
    std::vector<std::size_t> out;
    for (int g = 0; g < k(); ++g)
      if (g != f) out.insert(out.end(), indices[static_cast<std::size_t>(g)].begin(), indices[static_cast<std::size_t>(g)].end());
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline std::vector<std::string> unique_sorted(const std::vector<std::string>& names) {
  std::set<std::string> s(names.begin(), names.end());
  return {s.begin(), s.end()};
}

// Objects are shuffled and dealt round-robin, so fold sizes differ by at most one object.
inline FoldSplit kfold_objectwise(const std::vector<std::string>& sample_objects, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::invalid_argument, "k must be >= 2");
  std::vector<std::string> objs = unique_sorted(sample_objects);
  if (static_cast<int>(objs.size()) < k)
    throw Error(ErrorCode::too_few_objects, std::to_string(objs.size()) + " objects for " + std::to_string(k) + " folds");
  std::mt19937_64 rng(seed);
  std::shuffle(objs.begin(), objs.end(), rng);
  FoldSplit split;
  split.objects.resize(static_cast<std::size_t>(k));
  split.indices.resize(static_cast<std::size_t>(k));
  std::map<std::string, std::size_t> fold_of;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    split.objects[i % static_cast<std::size_t>(k)].push_back(objs[i]);
    fold_of[objs[i]] = i % static_cast<std::size_t>(k);
  }
  for (auto& f : split.objects) std::sort(f.begin(), f.end());
  for (std::size_t i = 0; i < sample_objects.size(); ++i) split.indices[fold_of[sample_objects[i]]].push_back(i);
  return split;
}

struct ObjectSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
};

// 5:1 object split; the validation share is round(n / 6), at least one object.
inline ObjectSplit train_val_split(const std::vector<std::string>& objects, std::uint64_t seed) {
  std::vector<std::string> objs = unique_sorted(objects);
  if (objs.size() < 2) throw Error(ErrorCode::too_few_objects, "need at least two objects for a validation split");
  std::mt19937_64 rng(seed);
  std::shuffle(objs.begin(), objs.end(), rng);
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(objs.size()) / 6.0)));
  ObjectSplit s;
  s.validation.assign(objs.begin(), objs.begin() + static_cast<std::ptrdiff_t>(n_val));
  s.train.assign(objs.begin() + static_cast<std::ptrdiff_t>(n_val), objs.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  return s;
}

struct ConfusionMatrix {
  std::vector<int> classes;
  Matrix counts;  // rows: true class, columns: predicted class

  double total() const { return counts.sum(); }
  double accuracy() const { return total() > 0.0 ? counts.trace() / total() : 0.0; }

  // Row-normalized; rows without support stay zero.
  Matrix normalized() const {
    Matrix n = counts;
    for (Eigen::Index r = 0; r < n.rows(); ++r) {
      const double s = n.row(r).sum();
      if (s > 0.0) n.row(r) /= s;
    }
    return n;
  }

  int index_of(int cls) const {
    const auto it = std::find(classes.begin(), classes.end(), cls);
    return it == classes.end() ? -1 : static_cast<int>(it - classes.begin());
  }

  double support(int cls) const {
    const int i = index_of(cls);
    return i < 0 ? 0.0 : counts.row(i).sum();
  }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& preds, const std::vector<int>& labels,
                                        const std::vector<int>& classes) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::dimension_mismatch, "prediction and label counts differ");
  if (preds.empty()) throw Error(ErrorCode::empty_input, "no predictions");
  ConfusionMatrix cm;
  cm.classes = classes;
  const auto n = static_cast<Eigen::Index>(classes.size());
  cm.counts = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int r = cm.index_of(labels[i]), c = cm.index_of(preds[i]);
    if (r < 0 || c < 0) throw Error(ErrorCode::invalid_argument, "label outside the class list");
    cm.counts(r, c) += 1.0;
  }
  return cm;
}

// Macro F-score over every class that occurs among labels or predictions.
inline double f_score(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::dimension_mismatch, "prediction and label counts differ");
  if (preds.empty()) throw Error(ErrorCode::empty_input, "no predictions");
  std::set<int> classes(labels.begin(), labels.end());
  classes.insert(preds.begin(), preds.end());
  double sum = 0.0;
  for (int cls : classes) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == cls && labels[i] == cls) ++tp;
      else if (preds[i] == cls) ++fp;
      else if (labels[i] == cls) ++fn;
    }
    const double p = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double r = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    sum += p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
  }
  return sum / static_cast<double>(classes.size());
}

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw Error(ErrorCode::dimension_mismatch, "prediction and label counts differ");
  if (preds.empty()) throw Error(ErrorCode::empty_input, "no predictions");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hit += preds[i] == labels[i];
  return static_cast<double>(hit) / static_cast<double>(preds.size());
}

}  // namespace slipgrasp::ml
