#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "slipgrasp/core.hpp"
#include "slipgrasp/detector.hpp"
#include "slipgrasp/geometry.hpp"
#include "slipgrasp/ml/eval.hpp"
#include "slipgrasp/ml/sequence_net.hpp"
#include "slipgrasp/physics.hpp"
#include "slipgrasp/signal.hpp"

namespace slipgrasp::regrasp {

using detector::InputMode;
using geometry::BoundaryPair;
using geometry::GraspPose;
using geometry::ObjectModel;
using physics::Episode;
using physics::SlipLabel;
using signal::PaddedBatch;

// mu = |b - a| / |c - a| for b on the segment from a to c.
inline double regrasp_ratio(const Vec2& a, const Vec2& c, const Vec2& b) {
  const Vec2 seg = c - a;
  const double y = seg.norm();
  if (y < 1e-9) throw Error(ErrorCode::degenerate_segment, "boundary point and grasp center coincide");
  const Vec2 rel = b - a;
  const double x = rel.norm();
  const double along = rel.dot(seg) / y;
  if (std::abs(x - std::abs(along)) > 1e-9 * std::max(1.0, y))
    throw Error(ErrorCode::out_of_range, "point is off the regrasp segment");
  const double mu = (along < 0.0 ? -x : x) / y;
  if (mu < -1e-12 || mu > 1.0 + 1e-12) throw Error(ErrorCode::out_of_range, "regrasp ratio outside [0,1]");
  return std::clamp(mu, 0.0, 1.0);
}

// Convex form keeps both endpoints exact.
inline Vec2 regrasp_pose(const Vec2& pose_a, const Vec2& pose_c, double mu) {
  return (1.0 - mu) * pose_a + mu * pose_c;
}

// The boundary point on the side of the center of mass: a for cw (d > 0), a' for ccw.
inline Vec2 reference_boundary_point(const BoundaryPair& pair, SlipLabel slip) {
  if (slip == SlipLabel::cw_rotational) return pair.a;
  if (slip == SlipLabel::ccw_rotational) return pair.a_prime;
  throw Error(ErrorCode::not_rotational, "reference point needs a rotational slip, got " +
                                             std::string(physics::label_name(slip)));
}

// Parallel-jaw grasp closing along the first grasp's normal direction, centered at p.
// Empty when the jaws find no valid contact pair or the pair is not force closure.
inline std::optional<GraspPose> grasp_through(const ObjectModel& obj, const GraspPose& like, const Vec2& p,
                                              double grip_force, const geometry::SamplerConfig& sampler = {}) {
  const Vec2 n = like.normal_dir.normalized();
  const auto tp = geometry::ray_exit(obj.polygon, p, n, 0.0);
  const auto tm = geometry::ray_exit(obj.polygon, p, -n, 0.0);
  if (!tp || !tm) return std::nullopt;
  const Vec2 a = p - *tm * n, b = p + *tp * n;
  const double width = (b - a).norm();
  if (width < sampler.min_width || width > sampler.max_width) return std::nullopt;
  try {
    if (!geometry::is_force_closure(obj, a, b, obj.surface_friction)) return std::nullopt;
  } catch (const Error&) {
    return std::nullopt;
  }
  GraspPose g = geometry::make_grasp(a, b, like.depth_z, grip_force, obj.surface_friction);
  g.closure_friction = like.closure_friction;
  return g;
}

inline constexpr double max_grip_force = 100.0;

// Oracle label of the second grasp: 1 if it lifts without slip.
inline int second_grasp_label(const ObjectModel& obj, const GraspPose& first, SlipLabel first_slip, double mu,
                              double force_delta) {
  const BoundaryPair pair = geometry::boundary_intersections(obj, first);
  const Vec2 p = regrasp_pose(reference_boundary_point(pair, first_slip), first.center, mu);
  const double force = std::min(max_grip_force, first.grip_force + force_delta);
  const auto g = grasp_through(obj, first, p, force);
  if (!g) return 0;
  return physics::slip_outcome(obj, *g) == SlipLabel::no_slip ? 1 : 0;
}

struct RegraspSample {
  std::string object_name;
  Matrix tactile;  // first-grasp sequence, T x 32
  Matrix wrench;   // T x 6
  double mu = 0.0;
  double force_delta = 0.0;
  int label = 0;
  SlipLabel first_slip = SlipLabel::no_slip;
};

struct PlannerConfig {
  InputMode mode = InputMode::both;
  int cells = 75;
  int scalar_width = 16;
  int hidden = 50;
  double input_dropout = 0.2;
  double recurrent_dropout = 0.2;
  double head_dropout = 0.5;
  int max_steps = 150;
  int n_candidates = 21;
  std::vector<double> force_deltas{0.0, 10.0, 20.0};
  ml::TrainOptions train;
};

inline constexpr double force_delta_scale = 20.0;

// Network input for the ratio, centered on the segment midpoint.
inline double mu_feature(double mu) { return 4.0 * (mu - 0.5); }

// Tactile LSTM + wrench LSTM + dense expanders for mu and the force delta, concatenated
// into an FC head with a sigmoid robustness output.
struct RegraspNet {
  PlannerConfig config;
  ml::Lstm tactile, wrench;
  ml::Dense mu_fc, force_fc;
  ml::SigmoidHead head;

  struct Inputs {
    const PaddedBatch* tactile = nullptr;
    const PaddedBatch* wrench = nullptr;
    Matrix mu;     // B x 1
    Matrix force;  // B x 1, scaled
  };

  struct Cache {
    ml::LstmCache tactile, wrench;
    Matrix mu_hidden, force_hidden;
    ml::SigmoidHead::Cache head;
  };

  RegraspNet() = default;
  explicit RegraspNet(const PlannerConfig& cfg) : config(cfg) {
    if (use_tactile()) tactile = ml::Lstm("tactile_lstm", physics::tactile_features, cfg.cells);
    if (use_wrench()) wrench = ml::Lstm("wrench_lstm", physics::wrench_features, cfg.cells);
    mu_fc = ml::Dense("mu_fc", 1, cfg.scalar_width);
    force_fc = ml::Dense("force_fc", 1, cfg.scalar_width);
    head = ml::SigmoidHead("head", concat_width(), cfg.hidden, 1);
  }

  bool use_tactile() const { return config.mode != InputMode::torque; }
  bool use_wrench() const { return config.mode != InputMode::tactile; }
  int concat_width() const {
    return (use_tactile() ? config.cells : 0) + (use_wrench() ? config.cells : 0) + 2 * config.scalar_width;
  }

  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    if (use_tactile()) tactile.init(rng);
    if (use_wrench()) wrench.init(rng);
    mu_fc.init(rng);
    force_fc.init(rng);
    head.init(rng);
  }

  ml::ParamList params() {
    ml::ParamList ps;
    if (use_tactile()) ps = tactile.params();
    if (use_wrench())
      for (ml::Param* p : wrench.params()) ps.push_back(p);
    for (ml::Param* p : mu_fc.params()) ps.push_back(p);
    for (ml::Param* p : force_fc.params()) ps.push_back(p);
    for (ml::Param* p : head.params()) ps.push_back(p);
    return ps;
  }

  // Pooled encodings, one row per sequence.
  Matrix encode(const Inputs& in, bool dropout_on, std::mt19937_64* rng, Cache* cache) const {
    std::vector<Matrix> parts;
    if (use_tactile()) {
      if (!in.tactile) throw Error(ErrorCode::shape_mismatch, "tactile input missing");
      parts.push_back(tactile.forward(*in.tactile, config.input_dropout, config.recurrent_dropout, dropout_on, rng,
                                      cache ? &cache->tactile : nullptr).pooled);
    }
    if (use_wrench()) {
      if (!in.wrench) throw Error(ErrorCode::shape_mismatch, "wrench input missing");
      parts.push_back(wrench.forward(*in.wrench, config.input_dropout, config.recurrent_dropout, dropout_on, rng,
                                     cache ? &cache->wrench : nullptr).pooled);
    }
    const Eigen::Index rows = parts.front().rows();
    Matrix out(rows, (use_tactile() ? config.cells : 0) + (use_wrench() ? config.cells : 0));
    Eigen::Index col = 0;
    for (const Matrix& p : parts) {
      out.middleCols(col, p.cols()) = p;
      col += p.cols();
    }
    return out;
  }

  Matrix head_forward(const Matrix& encoded, const Matrix& mu, const Matrix& force, bool dropout_on,
                      std::mt19937_64* rng, Cache* cache) const {
    const Matrix mh = mu_fc.forward(mu).array().tanh().matrix();
    const Matrix fh = force_fc.forward(force).array().tanh().matrix();
    Matrix x(encoded.rows(), concat_width());
    x << encoded, mh, fh;
    if (cache) {
      cache->mu_hidden = mh;
      cache->force_hidden = fh;
    }
    return head.forward(x, config.head_dropout, dropout_on, rng, cache ? &cache->head : nullptr);
  }

  Matrix forward(const Inputs& in, bool dropout_on = false, std::mt19937_64* rng = nullptr) const {
    return head_forward(encode(in, dropout_on, rng, nullptr), in.mu, in.force, dropout_on, rng, nullptr);
  }

  double accumulate_gradients(const Inputs& in, const Matrix& targets, bool dropout_on, std::mt19937_64* rng) {
    Cache cache;
    const Matrix enc = encode(in, dropout_on, rng, &cache);
    const Matrix out = head_forward(enc, in.mu, in.force, dropout_on, rng, &cache);
    const double loss = ml::mse_loss(out, targets);
    const Matrix d_logit = (ml::mse_grad(out, targets).array() * out.array() * (1.0 - out.array())).matrix();
    const Matrix dx = head.backward(cache.head, d_logit);
    const int s = config.scalar_width;
    const Eigen::Index enc_cols = enc.cols();
    const Matrix d_mh = (dx.middleCols(enc_cols, s).array() * (1.0 - cache.mu_hidden.array().square())).matrix();
    const Matrix d_fh = (dx.middleCols(enc_cols + s, s).array() * (1.0 - cache.force_hidden.array().square())).matrix();
    mu_fc.backward(in.mu, d_mh);
    force_fc.backward(in.force, d_fh);
    Eigen::Index col = 0;
    if (use_tactile()) {
      tactile.backward(*in.tactile, cache.tactile, dx.middleCols(col, config.cells));
      col += config.cells;
    }
    if (use_wrench()) wrench.backward(*in.wrench, cache.wrench, dx.middleCols(col, config.cells));
    return loss;
  }
};

struct RegraspPlanner {
  PlannerConfig config;
  signal::StandardizationStats tactile_stats;
  signal::StandardizationStats wrench_stats;
  std::optional<RegraspNet> net;

  bool trained() const {
    if (!net) return false;
    if (net->use_tactile() && !tactile_stats.fitted()) return false;
    if (net->use_wrench() && !wrench_stats.fitted()) return false;
    return true;
  }

  void require_trained() const {
    if (!trained()) throw Error(ErrorCode::untrained_planner, "planner has no trained network");
  }

  // Robustness of every (mu, force_delta) candidate for a single first-grasp sequence.
  Vector score_candidates(const Matrix& tactile_seq, const Matrix& wrench_seq,
                          const std::vector<std::pair<double, double>>& candidates) const {
    require_trained();
    PaddedBatch tb, wb;
    RegraspNet::Inputs in;
    if (net->use_tactile()) {
      tb = signal::pad_and_mask({signal::transform(tactile_stats, tactile_seq)}, config.max_steps);
      in.tactile = &tb;
    }
    if (net->use_wrench()) {
      wb = signal::pad_and_mask({signal::transform(wrench_stats, wrench_seq)}, config.max_steps);
      in.wrench = &wb;
    }
    const Matrix enc = net->encode(in, false, nullptr, nullptr);
    const auto n = static_cast<Eigen::Index>(candidates.size());
    Matrix rep = enc.replicate(n, 1);
    Matrix mu(n, 1), force(n, 1);
    for (Eigen::Index k = 0; k < n; ++k) {
      mu(k, 0) = mu_feature(candidates[static_cast<std::size_t>(k)].first);
      force(k, 0) = candidates[static_cast<std::size_t>(k)].second / force_delta_scale;
    }
    return net->head_forward(rep, mu, force, false, nullptr, nullptr).col(0);
  }

  double robustness(const Matrix& tactile_seq, const Matrix& wrench_seq, double mu, double force_delta) const {
    return score_candidates(tactile_seq, wrench_seq, {{mu, force_delta}})(0);
  }
};

// Planner with all-zero head output weights: every score is exactly 0.5.
inline RegraspPlanner neutral_planner(const PlannerConfig& cfg, const signal::StandardizationStats& tactile_stats,
                                      const signal::StandardizationStats& wrench_stats, std::uint64_t seed) {
  RegraspPlanner p;
  p.config = cfg;
  p.tactile_stats = tactile_stats;
  p.wrench_stats = wrench_stats;
  p.net = RegraspNet(cfg);
  p.net->init(seed);
  p.net->head.fc2.w.value.setZero();
  p.net->head.fc2.b.value.setZero();
  return p;
}

inline double sample_mse(const RegraspNet& net, const std::vector<Matrix>& tac, const std::vector<Matrix>& wre,
                         const std::vector<RegraspSample>& samples, const std::vector<std::size_t>& idx, int max_steps,
                         std::vector<double>* predictions = nullptr);

inline RegraspNet::Inputs make_inputs(const RegraspNet& net, const std::vector<Matrix>& tac,
                                      const std::vector<Matrix>& wre, const std::vector<RegraspSample>& samples,
                                      const std::vector<std::size_t>& idx, int max_steps, PaddedBatch& tb,
                                      PaddedBatch& wb) {
  RegraspNet::Inputs in;
  if (net.use_tactile()) {
    tb = ml::gather_batch(tac, idx, max_steps);
    in.tactile = &tb;
  }
  if (net.use_wrench()) {
    wb = ml::gather_batch(wre, idx, max_steps);
    in.wrench = &wb;
  }
  in.mu.resize(static_cast<Eigen::Index>(idx.size()), 1);
  in.force.resize(static_cast<Eigen::Index>(idx.size()), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    in.mu(static_cast<Eigen::Index>(k), 0) = mu_feature(samples[idx[k]].mu);
    in.force(static_cast<Eigen::Index>(k), 0) = samples[idx[k]].force_delta / force_delta_scale;
  }
  return in;
}

inline Matrix sample_targets(const std::vector<RegraspSample>& samples, const std::vector<std::size_t>& idx) {
  Matrix t(static_cast<Eigen::Index>(idx.size()), 1);
  for (std::size_t k = 0; k < idx.size(); ++k) t(static_cast<Eigen::Index>(k), 0) = samples[idx[k]].label;
  return t;
}

inline double sample_mse(const RegraspNet& net, const std::vector<Matrix>& tac, const std::vector<Matrix>& wre,
                         const std::vector<RegraspSample>& samples, const std::vector<std::size_t>& idx, int max_steps,
                         std::vector<double>* predictions) {
  double sq = 0.0;
  const std::size_t chunk = 128;
  for (std::size_t start = 0; start < idx.size(); start += chunk) {
    const std::vector<std::size_t> part(idx.begin() + static_cast<std::ptrdiff_t>(start),
                                        idx.begin() + static_cast<std::ptrdiff_t>(std::min(idx.size(), start + chunk)));
    PaddedBatch tb, wb;
    const RegraspNet::Inputs in = make_inputs(net, tac, wre, samples, part, max_steps, tb, wb);
    const Matrix out = net.forward(in);
    const Matrix t = sample_targets(samples, part);
    sq += (out - t).squaredNorm();
    if (predictions)
      for (Eigen::Index r = 0; r < out.rows(); ++r) predictions->push_back(out(r, 0));
  }
  return idx.empty() ? 0.0 : sq / static_cast<double>(idx.size());
}

struct PlannerFit {
  RegraspPlanner planner;
  ml::TrainHistory history;
  double validation_accuracy = 0.0;  // threshold 0.5 on the held-out objects
  int validation_samples = 0;
};

// Fits the planner with a 5:1 object-wise train/validation split of the samples.
inline PlannerFit train_planner(const std::vector<RegraspSample>& samples, const PlannerConfig& cfg,
                                std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::empty_input, "no regrasp samples");
  std::vector<std::string> objects;
  for (const auto& s : samples) objects.push_back(s.object_name);
  const ml::ObjectSplit split = ml::train_val_split(objects, derive_seed(seed, 1));
  std::vector<std::size_t> tr, va;
  for (std::size_t i = 0; i < samples.size(); ++i)
    (std::binary_search(split.validation.begin(), split.validation.end(), objects[i]) ? va : tr).push_back(i);
  if (tr.empty()) throw Error(ErrorCode::empty_input, "no planner training samples after the split");

  PlannerFit fit;
  RegraspPlanner& p = fit.planner;
  p.config = cfg;
  std::vector<Matrix> tac_train, wre_train;
  for (std::size_t i : tr) {
    tac_train.push_back(samples[i].tactile);
    wre_train.push_back(samples[i].wrench);
  }
  p.tactile_stats = signal::fit_stats(tac_train);
  p.wrench_stats = signal::fit_stats(wre_train);
  std::vector<Matrix> tac, wre;
  for (const auto& s : samples) {
    tac.push_back(signal::transform(p.tactile_stats, s.tactile));
    wre.push_back(signal::transform(p.wrench_stats, s.wrench));
  }
  RegraspNet net(cfg);
  net.init(derive_seed(seed, 2));
  fit.history = ml::fit(
      net.params(), tr.size(), cfg.train, derive_seed(seed, 3),
      [&](const std::vector<std::size_t>& local, std::mt19937_64& rng) {
        std::vector<std::size_t> idx;
        for (std::size_t k : local) idx.push_back(tr[k]);
        PaddedBatch tb, wb;
        const RegraspNet::Inputs in = make_inputs(net, tac, wre, samples, idx, cfg.max_steps, tb, wb);
        return net.accumulate_gradients(in, sample_targets(samples, idx), true, &rng);
      },
      [&] {
        return va.empty() ? std::numeric_limits<double>::quiet_NaN()
                          : sample_mse(net, tac, wre, samples, va, cfg.max_steps);
      });
  if (!va.empty()) {
    std::vector<double> pred;
    sample_mse(net, tac, wre, samples, va, cfg.max_steps, &pred);
    int hit = 0;
    for (std::size_t k = 0; k < va.size(); ++k) hit += (pred[k] >= 0.5 ? 1 : 0) == samples[va[k]].label;
    fit.validation_accuracy = static_cast<double>(hit) / static_cast<double>(va.size());
    fit.validation_samples = static_cast<int>(va.size());
  }
  p.net = std::move(net);
  return fit;
}

struct PlanResult {
  double mu = 0.0;
  double force_delta = 0.0;
  double score = 0.0;
  Vec2 pose_b = Vec2::Zero();
};

inline std::vector<double> ratio_grid(int n_candidates) {
  if (n_candidates < 1) throw Error(ErrorCode::invalid_argument, "n_candidates must be >= 1");
  if (n_candidates == 1) return {0.5};
  std::vector<double> g;
  for (int k = 0; k < n_candidates; ++k) g.push_back(static_cast<double>(k) / (n_candidates - 1));
  return g;
}

using Scorer = std::function<Vector(const std::vector<std::pair<double, double>>&)>;

// Grid search over mu and force delta; ties go to the smallest mu, then the smallest delta.
inline PlanResult plan(const Scorer& score, SlipLabel slip, const BoundaryPair& pair, const Vec2& center,
                       int n_candidates, const std::vector<double>& force_deltas = {0.0}) {
  const Vec2 a = reference_boundary_point(pair, slip);
  std::vector<std::pair<double, double>> cands;
  for (double mu : ratio_grid(n_candidates))
    for (double df : force_deltas) cands.emplace_back(mu, df);
  if (cands.empty()) throw Error(ErrorCode::invalid_argument, "empty force delta grid");
  const Vector s = score(cands);
  std::size_t best = 0;
  for (std::size_t k = 1; k < cands.size(); ++k)
    if (s(static_cast<Eigen::Index>(k)) > s(static_cast<Eigen::Index>(best))) best = k;
  PlanResult r;
  r.mu = cands[best].first;
  r.force_delta = cands[best].second;
  r.score = s(static_cast<Eigen::Index>(best));
  r.pose_b = regrasp_pose(a, center, r.mu);
  return r;
}

inline PlanResult plan(const RegraspPlanner& planner, const Episode& ep, const BoundaryPair& pair, SlipLabel slip,
                       int n_candidates) {
  planner.require_trained();
  const Scorer s = [&](const std::vector<std::pair<double, double>>& c) {
    return planner.score_candidates(ep.tactile, ep.wrench, c);
  };
  return plan(s, slip, pair, ep.grasp.center, n_candidates, planner.config.force_deltas);
}

inline PlanResult plan(const RegraspPlanner& planner, const Episode& ep, const BoundaryPair& pair, int n_candidates) {
  return plan(planner, ep, pair, ep.label, n_candidates);
}

enum class Policy { random_planner, centroid_baseline, fixed_ratio_planner, learned_planner };

inline constexpr std::array<Policy, 4> all_policies{Policy::random_planner, Policy::centroid_baseline,
                                                    Policy::fixed_ratio_planner, Policy::learned_planner};

inline std::string_view policy_name(Policy p) {
  switch (p) {
    case Policy::random_planner: return "random_planner";
    case Policy::centroid_baseline: return "centroid_baseline";
    case Policy::fixed_ratio_planner: return "fixed_ratio_planner";
    case Policy::learned_planner: return "learned_planner";
  }
  return "unknown";
}

struct RolloutConfig {
  int candidate_poses = 20;
  double grid_cell = 0.002;
  double fixed_ratio = 0.5;
  double translational_force_step = 20.0;
  double lift_height = 0.1;
  physics::NoiseConfig noise;
  physics::SimConfig sim;
  geometry::SamplerConfig sampler;
};

struct RolloutResult {
  bool success = false;
  int trials = 1;
  SlipLabel first_outcome = SlipLabel::no_slip;
  SlipLabel detected = SlipLabel::no_slip;
  SlipLabel final_outcome = SlipLabel::no_slip;
};

inline SlipLabel true_outcome(const ObjectModel& obj, const GraspPose& g) { return physics::slip_outcome(obj, g); }

// One grasp attempt of up to two trials on an already posed object. The closed-loop
// policies need the detector, the learned one also the planner.
inline RolloutResult run_policy(Policy policy, const ObjectModel& obj, double grip_force, std::uint64_t seed,
                                const RolloutConfig& cfg, const detector::SlipDetector* det = nullptr,
                                const RegraspPlanner* planner = nullptr) {
  geometry::SamplerConfig sc = cfg.sampler;
  sc.grip_force = grip_force;
  const std::vector<GraspPose> cands =
      geometry::sample_antipodal_grasps(obj, cfg.candidate_poses, cfg.sim.table_depth, derive_seed(seed, 1), sc);
  std::mt19937_64 rng(derive_seed(seed, 2));
  std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
  RolloutResult r;

  if (policy == Policy::random_planner) {
    const GraspPose& first = cands[pick(rng)];
    const GraspPose& second = cands[pick(rng)];
    r.first_outcome = true_outcome(obj, first);
    r.final_outcome = true_outcome(obj, second);
    r.trials = 2;
    r.success = r.final_outcome == SlipLabel::no_slip;
    return r;
  }
  if (policy == Policy::centroid_baseline) {
    const Vec2 centroid = geometry::rasterize_and_segment(obj, cfg.grid_cell).grid.centroid();
    std::size_t best = 0;
    for (std::size_t k = 1; k < cands.size(); ++k)
      if ((cands[k].center - centroid).norm() < (cands[best].center - centroid).norm()) best = k;
    r.first_outcome = r.final_outcome = true_outcome(obj, cands[best]);
    r.trials = 2;
    r.success = r.final_outcome == SlipLabel::no_slip;
    return r;
  }

  if (!det) throw Error(ErrorCode::untrained_detector, "closed-loop policy needs a detector");
  const GraspPose first = cands[pick(rng)];
  const Episode ep = physics::simulate_lift(obj, first, cfg.lift_height, derive_seed(seed, 3), cfg.noise, cfg.sim);
  r.first_outcome = ep.label;
  r.detected = detector::detect(*det, ep);
  if (r.detected == SlipLabel::no_slip) {
    r.final_outcome = r.first_outcome;
    r.success = r.first_outcome == SlipLabel::no_slip;
    return r;
  }
  r.trials = 2;
  std::optional<GraspPose> second;
  if (r.detected == SlipLabel::translational) {
    second = first;
    second->grip_force = std::min(max_grip_force, first.grip_force + cfg.translational_force_step);
  } else {
    const BoundaryPair pair = geometry::boundary_intersections(obj, first);
    PlanResult pr;
    if (policy == Policy::fixed_ratio_planner) {
      pr.mu = cfg.fixed_ratio;
      pr.pose_b = regrasp_pose(reference_boundary_point(pair, r.detected), first.center, pr.mu);
    } else {
      if (!planner) throw Error(ErrorCode::untrained_planner, "learned policy needs a planner");
      pr = plan(*planner, ep, pair, r.detected, planner->config.n_candidates);
    }
    second = grasp_through(obj, first, pr.pose_b, std::min(max_grip_force, first.grip_force + pr.force_delta),
                           cfg.sampler);
  }
  if (!second) {
    r.final_outcome = r.first_outcome;
    r.success = false;
    return r;
  }
  r.final_outcome = true_outcome(obj, *second);
  r.success = r.final_outcome == SlipLabel::no_slip;
  return r;
}

}  // namespace slipgrasp::regrasp
