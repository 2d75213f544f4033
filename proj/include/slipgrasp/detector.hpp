#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "slipgrasp/core.hpp"
#include "slipgrasp/ml/eval.hpp"
#include "slipgrasp/ml/sequence_net.hpp"
#include "slipgrasp/ml/svm.hpp"
#include "slipgrasp/physics.hpp"
#include "slipgrasp/signal.hpp"

namespace slipgrasp::detector {

using physics::Episode;
using physics::SlipLabel;
using signal::PaddedBatch;

enum class Backend { linear_svm, rbf_svm, lstm };
enum class InputMode { tactile, torque, both };

inline std::string_view backend_name(Backend b) {
  switch (b) {
    case Backend::linear_svm: return "linear_svm";
    case Backend::rbf_svm: return "rbf_svm";
    case Backend::lstm: return "lstm";
  }
  return "unknown";
}

inline Backend backend_from_name(std::string_view s) {
  if (s == "linear_svm") return Backend::linear_svm;
  if (s == "rbf_svm") return Backend::rbf_svm;
  if (s == "lstm") return Backend::lstm;
  throw Error(ErrorCode::schema, "unknown backend '" + std::string(s) + "'");
}

inline std::string_view mode_name(InputMode m) {
  switch (m) {
    case InputMode::tactile: return "tactile";
    case InputMode::torque: return "torque";
    case InputMode::both: return "both";
  }
  return "unknown";
}

inline InputMode mode_from_name(std::string_view s) {
  if (s == "tactile") return InputMode::tactile;
  if (s == "torque") return InputMode::torque;
  if (s == "both") return InputMode::both;
  throw Error(ErrorCode::schema, "unknown input mode '" + std::string(s) + "'");
}

inline int feature_count(InputMode m) {
  switch (m) {
    case InputMode::tactile: return physics::tactile_features;
    case InputMode::torque: return physics::wrench_features;
    case InputMode::both: return physics::tactile_features + physics::wrench_features;
  }
  return 0;
}

// Per-step feature matrix for the chosen input ablation; "torque" is the full wrench.
inline Matrix select_features(const Episode& ep, InputMode m) {
  switch (m) {
    case InputMode::tactile: return ep.tactile;
    case InputMode::torque: return ep.wrench;
    case InputMode::both: {
      Matrix x(ep.tactile.rows(), physics::tactile_features + physics::wrench_features);
      x << ep.tactile, ep.wrench;
      return x;
    }
  }
  return {};
}

// Classes handled by the sequence classifier; translational slip comes from the contact gate.
inline const std::vector<int>& classifier_classes() {
  static const std::vector<int> c{0, 1, 2};
  return c;
}

struct DetectorConfig {
  Backend backend = Backend::linear_svm;
  InputMode mode = InputMode::tactile;
  double c_linear = 1.0;
  double c_rbf = 1e3;
  double gamma = 0.0;  // 0 selects 1 / (features * variance)
  double smo_tol = 1e-3;
  int svm_steps = 65;  // fixed length for the flattened SVM input
  int max_steps = 150;
  ml::NetConfig net;
  ml::TrainOptions train;
  double contact_threshold = 0.1;  // mean taxel pressure, 5x the tactile noise sigma
  int contact_window = 5;
  int min_translational_support = 30;
};

enum class ContactState { never, held, lost };

// Mean taxel pressure per frame.
inline Vector frame_pressure(const Matrix& tactile) { return tactile.rowwise().mean(); }

inline ContactState contact_state(const Matrix& tactile, double threshold, int window) {
  if (tactile.rows() == 0) return ContactState::never;
  const Vector p = frame_pressure(tactile);
  if (p.maxCoeff() < threshold) return ContactState::never;
  const Eigen::Index w = std::min<Eigen::Index>(std::max(1, window), p.size());
  return p.tail(w).mean() < threshold ? ContactState::lost : ContactState::held;
}

struct SlipDetector {
  DetectorConfig config;
  signal::StandardizationStats stats;
  std::optional<ml::OneVsOneSvm> svm;
  std::optional<ml::SequenceClassifier> lstm;

  bool trained() const {
    if (!stats.fitted()) return false;
    return config.backend == Backend::lstm ? lstm.has_value() : svm.has_value();
  }

  // Classifier output over {no_slip, cw, ccw} for already-selected feature sequences.
  std::vector<int> classify(const std::vector<Matrix>& raw) const {
    if (!trained()) throw Error(ErrorCode::untrained_detector, "detector has no trained model");
    if (raw.empty()) return {};
    const auto [seqs, s] = signal::standardize(raw, stats);
    if (config.backend == Backend::lstm) {
      std::vector<int> out;
      const std::size_t chunk = 128;
      for (std::size_t start = 0; start < seqs.size(); start += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = start; i < std::min(seqs.size(), start + chunk); ++i) idx.push_back(i);
        const Matrix prob = lstm->forward(ml::gather_batch(seqs, idx, config.max_steps)).output;
        for (Eigen::Index r = 0; r < prob.rows(); ++r) {
          Eigen::Index best = 0;
          prob.row(r).maxCoeff(&best);
          out.push_back(classifier_classes()[static_cast<std::size_t>(best)]);
        }
      }
      return out;
    }
    Matrix x(static_cast<Eigen::Index>(seqs.size()), config.svm_steps * stats.features());
    for (std::size_t i = 0; i < seqs.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) = signal::flatten_for_svm(seqs[i], config.svm_steps).transpose();
    return svm->predict_all(x);
  }
};

inline std::vector<Matrix> features_of(const std::vector<const Episode*>& eps, InputMode m) {
  std::vector<Matrix> out;
  out.reserve(eps.size());
  for (const Episode* e : eps) out.push_back(select_features(*e, m));
  return out;
}

inline Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix t = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return t;
}

// Trains the classifier on the non-translational episodes. Standardization statistics
// come from the training episodes only. The LSTM holds out a 5:1 object-wise
// validation split for early stopping.
inline SlipDetector train_detector(const std::vector<const Episode*>& episodes, const DetectorConfig& cfg,
                                   std::uint64_t seed) {
  std::vector<const Episode*> usable;
  for (const Episode* e : episodes)
    if (e->label != SlipLabel::translational) usable.push_back(e);
  if (usable.empty()) throw Error(ErrorCode::empty_input, "no classifier training episodes");
  SlipDetector det;
  det.config = cfg;
  const std::vector<Matrix> raw = features_of(usable, cfg.mode);
  std::vector<int> labels;
  for (const Episode* e : usable) labels.push_back(static_cast<int>(e->label));

  if (cfg.backend != Backend::lstm) {
    auto [seqs, stats] = signal::standardize(raw);
    det.stats = stats;
    Matrix x(static_cast<Eigen::Index>(seqs.size()), cfg.svm_steps * stats.features());
    for (std::size_t i = 0; i < seqs.size(); ++i)
      x.row(static_cast<Eigen::Index>(i)) = signal::flatten_for_svm(seqs[i], cfg.svm_steps).transpose();
    ml::SmoOptions opt;
    opt.tol = cfg.smo_tol;
    if (cfg.backend == Backend::linear_svm)
      det.svm = ml::train_one_vs_one(x, labels, ml::KernelType::linear, cfg.c_linear, 0.0, opt);
    else
      det.svm = ml::train_one_vs_one(x, labels, ml::KernelType::rbf, cfg.c_rbf, cfg.gamma, opt);
    return det;
  }

  std::vector<std::string> objects;
  for (const Episode* e : usable) objects.push_back(e->object_name);
  std::vector<std::size_t> tr, va;
  if (ml::unique_sorted(objects).size() >= 2) {
    const ml::ObjectSplit split = ml::train_val_split(objects, derive_seed(seed, 1));
    for (std::size_t i = 0; i < usable.size(); ++i) {
      const bool val = std::binary_search(split.validation.begin(), split.validation.end(), objects[i]);
      (val ? va : tr).push_back(i);
    }
  } else {
    for (std::size_t i = 0; i < usable.size(); ++i) tr.push_back(i);
  }
  std::vector<Matrix> train_raw;
  for (std::size_t i : tr) train_raw.push_back(raw[i]);
  det.stats = signal::fit_stats(train_raw);
  const auto [seqs, unused] = signal::standardize(raw, det.stats);
  const Matrix targets = one_hot(labels, 3);

  ml::SequenceClassifier net(feature_count(cfg.mode), 3, cfg.net);
  net.init(derive_seed(seed, 2));
  auto gather_targets = [&](const std::vector<std::size_t>& idx) {
    Matrix t(static_cast<Eigen::Index>(idx.size()), 3);
    for (std::size_t k = 0; k < idx.size(); ++k) t.row(static_cast<Eigen::Index>(k)) = targets.row(static_cast<Eigen::Index>(idx[k]));
    return t;
  };
  const PaddedBatch val_batch = va.empty() ? PaddedBatch{} : ml::gather_batch(seqs, va, cfg.max_steps);
  const Matrix val_targets = va.empty() ? Matrix{} : gather_targets(va);
  ml::fit(
      net.params(), tr.size(), cfg.train, derive_seed(seed, 3),
      [&](const std::vector<std::size_t>& local, std::mt19937_64& rng) {
        std::vector<std::size_t> idx;
        for (std::size_t k : local) idx.push_back(tr[k]);
        return net.accumulate_gradients(ml::gather_batch(seqs, idx, cfg.max_steps), gather_targets(idx), true, &rng);
      },
      [&] { return va.empty() ? std::numeric_limits<double>::quiet_NaN() : net.loss(val_batch, val_targets); });
  det.lstm = std::move(net);
  return det;
}

inline std::vector<SlipLabel> detect_all(const SlipDetector& det, const std::vector<const Episode*>& episodes) {
  if (!det.trained()) throw Error(ErrorCode::untrained_detector, "detector has no trained model");
  std::vector<SlipLabel> out(episodes.size(), SlipLabel::no_slip);
  std::vector<Matrix> pending;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const ContactState cs = contact_state(episodes[i]->tactile, det.config.contact_threshold, det.config.contact_window);
    if (cs == ContactState::never) {
      out[i] = SlipLabel::no_slip;
    } else if (cs == ContactState::lost) {
      out[i] = SlipLabel::translational;
    } else {
      pending.push_back(select_features(*episodes[i], det.config.mode));
      where.push_back(i);
    }
  }
  const std::vector<int> cls = det.classify(pending);
  for (std::size_t k = 0; k < where.size(); ++k) out[where[k]] = physics::label_from_int(cls[k]);
  return out;
}

inline SlipLabel detect(const SlipDetector& det, const Episode& ep) { return detect_all(det, {&ep}).front(); }

struct ObjectScore {
  std::string object;
  int episodes = 0;
  double f_score = 0.0;
  double accuracy = 0.0;
};

struct DetectorReport {
  ml::ConfusionMatrix confusion;  // all four labels
  double accuracy = 0.0;          // headline accuracy
  double f_score = 0.0;           // macro F over the headline classes
  bool translational_excluded = false;
  int evaluated = 0;
  std::vector<ObjectScore> per_object;
};

// Headline metrics drop translational episodes when that class has too little support.
inline DetectorReport summarize(const std::vector<const Episode*>& episodes, const std::vector<SlipLabel>& preds,
                                int min_translational_support) {
  if (episodes.empty()) throw Error(ErrorCode::empty_input, "no episodes to evaluate");
  std::vector<int> p, y;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    p.push_back(static_cast<int>(preds[i]));
    y.push_back(static_cast<int>(episodes[i]->label));
  }
  DetectorReport rep;
  rep.confusion = ml::confusion_matrix(p, y, {0, 1, 2, 3});
  rep.translational_excluded = rep.confusion.support(3) < min_translational_support;
  std::vector<int> hp, hy;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_object;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (rep.translational_excluded && y[i] == 3) continue;
    hp.push_back(p[i]);
    hy.push_back(y[i]);
    by_object[episodes[i]->object_name].first.push_back(p[i]);
    by_object[episodes[i]->object_name].second.push_back(y[i]);
  }
  rep.evaluated = static_cast<int>(hp.size());
  if (!hp.empty()) {
    rep.accuracy = ml::accuracy(hp, hy);
    rep.f_score = ml::f_score(hp, hy);
  }
  for (const auto& [name, py] : by_object)
    rep.per_object.push_back({name, static_cast<int>(py.first.size()), ml::f_score(py.first, py.second),
                              ml::accuracy(py.first, py.second)});
  return rep;
}

inline DetectorReport evaluate(const SlipDetector& det, const std::vector<const Episode*>& episodes) {
  if (episodes.empty()) throw Error(ErrorCode::empty_input, "no episodes to evaluate");
  return summarize(episodes, detect_all(det, episodes), det.config.min_translational_support);
}

}  // namespace slipgrasp::detector
