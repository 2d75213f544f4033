#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "oracles/finite_diff.hpp"
#include "oracles/generators.hpp"
#include "slipgrasp/regrasp.hpp"

using namespace slipgrasp;
using namespace slipgrasp::regrasp;

namespace {

physics::NoiseConfig silent() {
  physics::NoiseConfig n;
  n.tactile_sigma = n.force_sigma = n.torque_sigma = n.force_drift = n.torque_drift = 0.0;
  return n;
}

SlipLabel side_of(double d) { return d > 0.0 ? SlipLabel::cw_rotational : SlipLabel::ccw_rotational; }

// Bar of length 0.3 whose COM sits at fraction `com_along` of its length, grasped at `grasp_along`.
struct BarCase {
  ObjectModel bar;
  GraspPose grasp;
};

BarCase bar_case(double com_along, double grasp_along, double head_mass = 0.8, double force = 40.0) {
  BarCase c;
  c.bar = oracle::box(0.30, 0.04, 0.2, "bar");
  // Body COM at the middle; the head mass moves the total COM to com_along.
  const double total = 0.2 + head_mass;
  const double x_com = (com_along - 0.5) * 0.30;
  c.bar.attachments = {{Vec2(x_com * total / head_mass, 0.0), head_mass}};
  c.grasp = oracle::bar_grasp(c.bar, grasp_along, force);
  return c;
}

Vector oracle_closeness(const ObjectModel& obj, const GraspPose& first, SlipLabel slip,
                        const std::vector<std::pair<double, double>>& cands) {
  const BoundaryPair pair = geometry::boundary_intersections(obj, first);
  Vector s(static_cast<Eigen::Index>(cands.size()));
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const Vec2 p = regrasp_pose(reference_boundary_point(pair, slip), first.center, cands[k].first);
    const auto g = grasp_through(obj, first, p, first.grip_force);
    s(static_cast<Eigen::Index>(k)) =
        g ? -std::abs(geometry::signed_com_offset(obj, *g)) : -std::numeric_limits<double>::infinity();
  }
  return s;
}

}  // namespace

TEST(RegraspRatio, Examples) {
  EXPECT_DOUBLE_EQ(regrasp_ratio({0, 0}, {0.2, 0}, {0.1, 0}), 0.5);
  EXPECT_EQ(regrasp_ratio({0, 0}, {0.2, 0}, {0, 0}), 0.0);
  EXPECT_EQ(regrasp_ratio({0, 0}, {0.2, 0}, {0.2, 0}), 1.0);
}

TEST(RegraspRatio, Errors) {
  auto code = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::invalid_argument;
  };
  EXPECT_EQ(code([] { regrasp_ratio({0, 0}, {0, 0}, {0, 0}); }), ErrorCode::degenerate_segment);
  EXPECT_EQ(code([] { regrasp_ratio({0, 0}, {0.2, 0}, {0.3, 0}); }), ErrorCode::out_of_range);
  EXPECT_EQ(code([] { regrasp_ratio({0, 0}, {0.2, 0}, {-0.1, 0}); }), ErrorCode::out_of_range);
  EXPECT_EQ(code([] { regrasp_ratio({0, 0}, {0.2, 0}, {0.1, 0.05}); }), ErrorCode::out_of_range);
}

TEST(RegraspPose, ExamplesAndRoundTrip) {
  const Vec2 a(0.0, 0.0), c(0.3, 0.0);
  EXPECT_TRUE(regrasp_pose(a, c, 0.0) == a);
  EXPECT_TRUE(regrasp_pose(a, c, 1.0) == c);
  EXPECT_NEAR((regrasp_pose(a, c, 1.0 / 3.0) - Vec2(0.1, 0.0)).norm(), 0.0, 1e-15);
  std::mt19937_64 rng(1);
  for (int k = 0; k < 10000; ++k) {
    const Vec2 p(oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1));
    const Vec2 q = p + Vec2(oracle::uniform(rng, -1, 1), oracle::uniform(rng, -1, 1));
    if ((q - p).norm() < 1e-3) continue;
    const double mu = oracle::uniform(rng, 0, 1);
    EXPECT_NEAR(regrasp_ratio(p, q, regrasp_pose(p, q, mu)), mu, 1e-9);
    EXPECT_TRUE(regrasp_pose(p, q, 0.0) == p);
    EXPECT_TRUE(regrasp_pose(p, q, 1.0) == q);
  }
}

TEST(ReferencePoint, ClockwisePicksASideAndMirrorPicksPrime) {
  const BarCase c = bar_case(0.8, 0.5);
  const double d = geometry::signed_com_offset(c.bar, c.grasp);
  const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
  const Vec2 com = geometry::center_of_mass(c.bar);
  const Vec2 ref = reference_boundary_point(pair, side_of(d));
  // The reference point is the bar end nearer the COM.
  EXPECT_LT((ref - com).norm(), (c.grasp.center - com).norm() + 1e-12);
  const ObjectModel m = geometry::mirrored(c.bar);
  const GraspPose mg = geometry::mirrored(c.grasp);
  const double md = geometry::signed_com_offset(m, mg);
  EXPECT_NEAR(md, -d, 1e-12);
  const BoundaryPair mp = geometry::boundary_intersections(m, mg);
  const Vec2 mref = reference_boundary_point(mp, side_of(md));
  EXPECT_NEAR((mref - Vec2(-ref.x(), ref.y())).norm(), 0.0, 1e-12);
  EXPECT_THROW(reference_boundary_point(pair, SlipLabel::no_slip), Error);
  EXPECT_THROW(reference_boundary_point(pair, SlipLabel::translational), Error);
}

TEST(ReferencePoint, SegmentContainsComForRandomBars) {
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const ObjectModel bar = oracle::random_bar(rng);
    const GraspPose g = oracle::bar_grasp(bar, oracle::uniform(rng, 0.05, 0.95), 40.0);
    const double d = geometry::signed_com_offset(bar, g);
    if (std::abs(d) < 1e-9) continue;
    const BoundaryPair pair = geometry::boundary_intersections(bar, g);
    const double mu = regrasp_ratio(reference_boundary_point(pair, side_of(d)), g.center, geometry::center_of_mass(bar));
    EXPECT_GE(mu, 0.0);
    EXPECT_LE(mu, 1.0);
    ++checked;
  }
  EXPECT_GT(checked, 190);
}

TEST(SecondGrasp, ComAtMidpointSucceedsAtHalf) {
  // Grasped at 0.1 of the length with the COM toward the far end: the reference point is
  // the far end (1.0), so mu = 0.5 lands at 0.55.
  const BarCase c = bar_case(0.55, 0.1);
  const double d = geometry::signed_com_offset(c.bar, c.grasp);
  const SlipLabel slip = physics::slip_outcome(c.bar, c.grasp);
  ASSERT_EQ(slip, side_of(d));
  const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
  const Vec2 mid = regrasp_pose(reference_boundary_point(pair, slip), c.grasp.center, 0.5);
  EXPECT_NEAR((mid - geometry::center_of_mass(c.bar)).norm(), 0.0, 1e-9);
  EXPECT_EQ(second_grasp_label(c.bar, c.grasp, slip, 0.5, 0.0), 1);
  EXPECT_EQ(second_grasp_label(c.bar, c.grasp, slip, 1.0, 0.0), 0);
  EXPECT_EQ(second_grasp_label(c.bar, c.grasp, slip, 0.05, 0.0), 0);
}

TEST(SecondGrasp, SuccessRegionIsAnIntervalAroundCom) {
  std::mt19937_64 rng(3);
  int checked = 0;
  for (int k = 0; k < 60; ++k) {
    const BarCase c = bar_case(oracle::uniform(rng, 0.2, 0.8), oracle::uniform(rng, 0.05, 0.95),
                               oracle::uniform(rng, 0.6, 1.5), oracle::uniform(rng, 20.0, 60.0));
    const SlipLabel slip = physics::slip_outcome(c.bar, c.grasp);
    if (!physics::is_rotational(slip)) continue;
    const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
    const double com_mu =
        regrasp_ratio(reference_boundary_point(pair, slip), c.grasp.center, geometry::center_of_mass(c.bar));
    std::vector<int> ok;
    const auto grid = ratio_grid(201);
    for (double mu : grid) ok.push_back(second_grasp_label(c.bar, c.grasp, slip, mu, 0.0));
    // Contiguous run of successes.
    int runs = 0;
    for (std::size_t i = 0; i < ok.size(); ++i) runs += ok[i] && (i == 0 || !ok[i - 1]);
    EXPECT_LE(runs, 1);
    if (runs == 0) continue;
    const auto first = static_cast<std::size_t>(std::find(ok.begin(), ok.end(), 1) - ok.begin());
    const auto last = ok.size() - 1 - static_cast<std::size_t>(std::find(ok.rbegin(), ok.rend(), 1) - ok.rbegin());
    EXPECT_LE(grid[first], com_mu + 1e-9);
    EXPECT_GE(grid[last], com_mu - 1e-9);
    // A binary oracle planner lands inside the interval.
    const Scorer binary = [&](const std::vector<std::pair<double, double>>& cands) {
      Vector s(static_cast<Eigen::Index>(cands.size()));
      for (std::size_t j = 0; j < cands.size(); ++j)
        s(static_cast<Eigen::Index>(j)) = second_grasp_label(c.bar, c.grasp, slip, cands[j].first, cands[j].second);
      return s;
    };
    const PlanResult pr = plan(binary, slip, pair, c.grasp.center, 201);
    EXPECT_EQ(second_grasp_label(c.bar, c.grasp, slip, pr.mu, 0.0), 1);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Plan, OracleScorerLandsWithinGridResolutionOfCom) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const BarCase c = bar_case(oracle::uniform(rng, 0.1, 0.9), oracle::uniform(rng, 0.05, 0.95));
    const double d = geometry::signed_com_offset(c.bar, c.grasp);
    if (std::abs(d) < 1e-6) continue;
    const SlipLabel slip = side_of(d);
    const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
    const Scorer s = [&](const std::vector<std::pair<double, double>>& cands) {
      return oracle_closeness(c.bar, c.grasp, slip, cands);
    };
    const PlanResult pr = plan(s, slip, pair, c.grasp.center, 21);
    const double seg = (c.grasp.center - reference_boundary_point(pair, slip)).norm();
    EXPECT_LE((pr.pose_b - geometry::center_of_mass(c.bar)).norm(), 0.5 * seg / 20.0 + 1e-9) << k;
  }
}

TEST(Plan, SingleCandidateAndTies) {
  const BarCase c = bar_case(0.8, 0.5);
  const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
  const SlipLabel slip = side_of(geometry::signed_com_offset(c.bar, c.grasp));
  const Scorer flat = [](const std::vector<std::pair<double, double>>& cands) {
    return Vector(Vector::Constant(static_cast<Eigen::Index>(cands.size()), 0.7));
  };
  EXPECT_EQ(plan(flat, slip, pair, c.grasp.center, 1).mu, 0.5);
  const PlanResult tie = plan(flat, slip, pair, c.grasp.center, 21, {0.0, 10.0, 20.0});
  EXPECT_EQ(tie.mu, 0.0);
  EXPECT_EQ(tie.force_delta, 0.0);
  EXPECT_TRUE(tie.pose_b == reference_boundary_point(pair, slip));
  EXPECT_THROW(plan(flat, SlipLabel::no_slip, pair, c.grasp.center, 5), Error);
  EXPECT_THROW(ratio_grid(0), Error);
  const auto g = ratio_grid(21);
  EXPECT_EQ(g.size(), 21u);
  EXPECT_DOUBLE_EQ(g[1], 0.05);
  EXPECT_EQ(g.back(), 1.0);
}

TEST(Planner, NeutralScoresOneHalfEverywhere) {
  std::mt19937_64 rng(5);
  PlannerConfig cfg;
  cfg.cells = 6;
  cfg.hidden = 5;
  cfg.scalar_width = 4;
  const auto ts = signal::fit_stats({oracle::random_matrix(rng, 20, physics::tactile_features)});
  const auto ws = signal::fit_stats({oracle::random_matrix(rng, 20, physics::wrench_features)});
  const RegraspPlanner p = neutral_planner(cfg, ts, ws, 9);
  ASSERT_TRUE(p.trained());
  const Matrix tac = oracle::random_matrix(rng, 30, physics::tactile_features);
  const Matrix wre = oracle::random_matrix(rng, 30, physics::wrench_features);
  for (double mu : {0.0, 0.3, 1.0})
    for (double df : {0.0, 20.0}) EXPECT_EQ(p.robustness(tac, wre, mu, df), 0.5);
  EXPECT_EQ(p.robustness(tac, wre, 0.4, 10.0), p.robustness(tac, wre, 0.4, 10.0));
}

TEST(Planner, UntrainedThrows) {
  const RegraspPlanner p;
  EXPECT_FALSE(p.trained());
  try {
    p.robustness(Matrix::Zero(3, 32), Matrix::Zero(3, 6), 0.5, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::untrained_planner);
  }
}

TEST(Planner, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(6);
  PlannerConfig cfg;
  cfg.cells = 3;
  cfg.hidden = 4;
  cfg.scalar_width = 2;
  for (InputMode mode : {InputMode::tactile, InputMode::torque, InputMode::both}) {
    cfg.mode = mode;
    RegraspNet net(cfg);
    net.init(7);
    std::vector<Matrix> tac, wre;
    std::vector<RegraspSample> samples(4);
    std::vector<std::size_t> idx{0, 1, 2, 3};
    for (auto& s : samples) {
      const int len = std::uniform_int_distribution<int>(1, 5)(rng);
      tac.push_back(oracle::random_matrix(rng, len, physics::tactile_features));
      wre.push_back(oracle::random_matrix(rng, len, physics::wrench_features));
      s.mu = oracle::uniform(rng, 0, 1);
      s.force_delta = 10.0 * std::uniform_int_distribution<int>(0, 2)(rng);
      s.label = std::uniform_int_distribution<int>(0, 1)(rng);
    }
    PaddedBatch tb, wb;
    const RegraspNet::Inputs in = make_inputs(net, tac, wre, samples, idx, 5, tb, wb);
    const Matrix t = sample_targets(samples, idx);
    const ml::ParamList ps = net.params();
    ml::zero_grads(ps);
    net.accumulate_gradients(in, t, false, nullptr);
    const auto r = oracle::check_gradients(ps, [&] { return ml::mse_loss(net.forward(in), t); }, 400, 8);
    EXPECT_LT(r.max_rel_error, 1e-4) << detector::mode_name(mode) << " " << r.worst;
  }
}

TEST(Planner, TrainedOnBarsRanksComAboveEnds) {
  // Noiseless first grasps on bars with a heavy end, labelled by the second-grasp oracle.
  // A firm grip keeps the success window around the COM wide enough to learn from 480 samples.
  std::mt19937_64 rng(10);
  std::vector<RegraspSample> samples;
  std::vector<BarCase> cases;
  while (samples.size() < 480) {
    const BarCase c = bar_case(oracle::uniform(rng, 0.15, 0.85), oracle::uniform(rng, 0.05, 0.95), 0.8, 80.0);
    const SlipLabel slip = physics::slip_outcome(c.bar, c.grasp);
    if (!physics::is_rotational(slip)) continue;
    const auto ep = physics::simulate_lift(c.bar, c.grasp, 0.1, rng(), silent());
    for (int r = 0; r < 6; ++r) {
      RegraspSample s;
      s.object_name = "bar" + std::to_string(samples.size() % 12);
      s.tactile = ep.tactile;
      s.wrench = ep.wrench;
      s.mu = oracle::uniform(rng, 0, 1);
      s.first_slip = slip;
      s.label = second_grasp_label(c.bar, c.grasp, slip, s.mu, 0.0);
      samples.push_back(std::move(s));
    }
  }
  PlannerConfig cfg;
  cfg.cells = 12;
  cfg.hidden = 16;
  cfg.scalar_width = 8;
  cfg.train.epochs = 40;
  cfg.train.patience = 40;
  cfg.force_deltas = {0.0};
  const PlannerFit fit = train_planner(samples, cfg, 11);
  EXPECT_GT(fit.validation_accuracy, 0.6);

  // Held-out bar: COM at 0.7 of the length, grasped at 0.3.
  const BarCase c = bar_case(0.7, 0.3, 0.8, 80.0);
  const SlipLabel slip = physics::slip_outcome(c.bar, c.grasp);
  ASSERT_TRUE(physics::is_rotational(slip));
  const auto ep = physics::simulate_lift(c.bar, c.grasp, 0.1, 99, silent());
  const BoundaryPair pair = geometry::boundary_intersections(c.bar, c.grasp);
  const double com_mu = regrasp_ratio(reference_boundary_point(pair, slip), c.grasp.center, geometry::center_of_mass(c.bar));
  const double at_com = fit.planner.robustness(ep.tactile, ep.wrench, com_mu, 0.0);
  EXPECT_GT(at_com, fit.planner.robustness(ep.tactile, ep.wrench, 0.0, 0.0));
  EXPECT_GT(at_com, fit.planner.robustness(ep.tactile, ep.wrench, 1.0, 0.0));
}

TEST(Policies, SymmetricLightBoxSucceedsFirstTime) {
  const ObjectModel box = oracle::box(0.06, 0.05, 0.1, "box");
  // Noiseless detector trained on stable and slipping lifts.
  std::mt19937_64 rng(12);
  std::vector<physics::Episode> eps;
  while (eps.size() < 150) {
    const auto c = oracle::random_configuration(rng);
    auto ep = physics::simulate_lift(c.object, c.grasp, 0.1, rng(), silent());
    if (ep.label != SlipLabel::translational) eps.push_back(std::move(ep));
  }
  // Sampled poses on the box itself, as the rollouts see them.
  geometry::SamplerConfig sc;
  sc.grip_force = 40.0;
  for (const GraspPose& g : geometry::sample_antipodal_grasps(box, 40, physics::SimConfig{}.table_depth, 77, sc))
    eps.push_back(physics::simulate_lift(box, g, 0.1, rng(), silent()));
  std::vector<const physics::Episode*> ptrs;
  for (const auto& e : eps) ptrs.push_back(&e);
  detector::DetectorConfig dc;
  dc.mode = InputMode::both;
  const detector::SlipDetector det = detector::train_detector(ptrs, dc, 1);
  PlannerConfig pc;
  pc.cells = 4;
  pc.hidden = 4;
  pc.scalar_width = 2;
  const RegraspPlanner planner = neutral_planner(pc, signal::fit_stats({eps[0].tactile}), signal::fit_stats({eps[0].wrench}), 2);
  RolloutConfig rc;
  rc.noise = silent();
  int false_alarms = 0;
  for (Policy p : all_policies) {
    for (std::uint64_t s = 0; s < 5; ++s) {
      const RolloutResult r = run_policy(p, box, 40.0, s, rc, &det, &planner);
      EXPECT_EQ(r.first_outcome, SlipLabel::no_slip) << policy_name(p);
      if (p == Policy::random_planner || p == Policy::centroid_baseline) {
        EXPECT_TRUE(r.success) << policy_name(p);
      } else if (r.detected == SlipLabel::no_slip) {
        EXPECT_TRUE(r.success);
        EXPECT_EQ(r.trials, 1);
      } else {
        ++false_alarms;
      }
    }
  }
  EXPECT_LE(false_alarms, 1);
}

TEST(Policies, CentroidBaselineDropsHeavyHeadedHammer) {
  const BarCase c = bar_case(0.92, 0.5, 1.2);
  RolloutConfig rc;
  rc.noise = silent();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const RolloutResult r = run_policy(Policy::centroid_baseline, c.bar, 40.0, s, rc);
    EXPECT_TRUE(physics::is_rotational(r.first_outcome));
    EXPECT_FALSE(r.success);
  }
}

TEST(Policies, ClosedLoopNeedsDetector) {
  const ObjectModel box = oracle::box(0.06, 0.05, 0.1, "box");
  EXPECT_THROW(run_policy(Policy::fixed_ratio_planner, box, 40.0, 1, {}), Error);
  EXPECT_EQ(policy_name(Policy::learned_planner), "learned_planner");
}
