#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "oracles/filter.hpp"
#include "oracles/generators.hpp"
#include "slipgrasp/signal.hpp"

using namespace slipgrasp;
using namespace slipgrasp::signal;

TEST(Butterworth, RejectsBadCutoff) {
  EXPECT_THROW(butterworth_lowpass(0.0, 1000.0), Error);
  EXPECT_THROW(butterworth_lowpass(500.0, 1000.0), Error);
  EXPECT_THROW(butterworth_lowpass(-3.0, 1000.0), Error);
  try {
    butterworth_lowpass(600.0, 1000.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_cutoff);
  }
}

TEST(Butterworth, UnitDcGainAndHalfPowerAtCutoff) {
  const Biquad f = butterworth_lowpass(25.0, 1000.0);
  EXPECT_NEAR((f.b0 + f.b1 + f.b2) / (1.0 + f.a1 + f.a2), 1.0, 1e-12);
  EXPECT_NEAR(oracle::biquad_gain(f, 25.0, 1000.0), 1.0 / std::sqrt(2.0), 1e-9);
}

TEST(Butterworth, ConstantInputConvergesFromRest) {
  const Matrix x = Matrix::Constant(1000, 1, 3.5);
  const Matrix y = iir_lowpass(x, 25.0, 1000.0, FilterInit::zero);
  EXPECT_NEAR(y(999, 0), 3.5, 1e-9);
  EXPECT_NEAR(y(0, 0), 3.5 * butterworth_lowpass(25.0, 1000.0).b0, 1e-12);
}

TEST(Butterworth, SteadyStateStartHasNoTransient) {
  const Matrix x = Matrix::Constant(200, 3, -0.7);
  const Matrix y = iir_lowpass(x, 25.0);
  EXPECT_LT((y - x).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Butterworth, ImpulseMatchesPartialFractions) {
  for (double fc : {5.0, 25.0, 100.0, 300.0}) {
    const Biquad f = butterworth_lowpass(fc, 1000.0);
    const auto h = impulse_response(f, 400);
    const auto ref = oracle::biquad_impulse_closed_form(f, 400);
    for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(h[i], ref[i], 1e-12) << fc << " " << i;
  }
}

TEST(Butterworth, AttenuatesTwoHundredHertz) {
  const Biquad f = butterworth_lowpass(25.0, 1000.0);
  const double db = 20.0 * std::log10(oracle::biquad_gain(f, 200.0, 1000.0));
  EXPECT_LE(db, -30.0);
  // Measured on a filtered sinusoid after the transient.
  const int n = 4000;
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = std::sin(2.0 * std::numbers::pi * 200.0 * i / 1000.0);
  const Matrix y = iir_lowpass(x, 25.0, 1000.0, FilterInit::zero);
  const double peak = y.bottomRows(1000).cwiseAbs().maxCoeff();
  EXPECT_LE(20.0 * std::log10(peak), -30.0);
}

TEST(Butterworth, ImpulseDecaysWithinOneSecond) {
  for (double fc = 10.0; fc <= 490.0; fc += 5.0) {
    const auto h = impulse_response(butterworth_lowpass(fc, 1000.0), 2000);
    for (std::size_t i = 1000; i < h.size(); ++i) ASSERT_LT(std::abs(h[i]), 1e-12) << fc;
  }
}

// Within ~6.3 Hz of either end of the band the pole envelope cannot reach 1e-12 in
// 1 s; the response still decays, on a time scale of 1 / distance to the edge.
TEST(Butterworth, EdgeCutoffsDecayOnTheirOwnTimeScale) {
  for (double fc : {0.5, 1.0, 2.0, 5.0, 495.0, 499.0}) {
    const double edge = std::min(fc, 500.0 - fc);
    const int n = static_cast<int>(std::ceil(10.0 / edge * 1000.0));
    const auto h = impulse_response(butterworth_lowpass(fc, 1000.0), n + 100);
    for (int i = n; i < n + 100; ++i) ASSERT_LT(std::abs(h[static_cast<std::size_t>(i)]), 1e-12) << fc;
  }
}

TEST(Butterworth, LinearAndColumnwise) {
  std::mt19937_64 rng(5);
  const Matrix a = oracle::random_matrix(rng, 300, 2), b = oracle::random_matrix(rng, 300, 2);
  Matrix both(300, 4);
  both << a, b;
  const Matrix ya = iir_lowpass(a, 25.0, 1000.0, FilterInit::zero);
  const Matrix yb = iir_lowpass(b, 25.0, 1000.0, FilterInit::zero);
  const Matrix yab = iir_lowpass(both, 25.0, 1000.0, FilterInit::zero);
  EXPECT_LT((yab.leftCols(2) - ya).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((iir_lowpass(Matrix(2.0 * a - b), 25.0, 1000.0, FilterInit::zero) - (2.0 * ya - yb)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Decimate, KeepsEveryTwentiethRow) {
  Matrix ramp(2000, 1);
  for (int i = 0; i < 2000; ++i) ramp(i, 0) = i;
  const Matrix d = decimate(ramp, 20);
  ASSERT_EQ(d.rows(), 100);
  EXPECT_EQ(d(0, 0), 0.0);
  EXPECT_EQ(d(99, 0), 1980.0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(d(i, 0), 20.0 * i);
  std::vector<double> ts(2000);
  for (int i = 0; i < 2000; ++i) ts[static_cast<std::size_t>(i)] = i * 1e-3;
  const auto dt = decimate(ts, 20);
  ASSERT_EQ(dt.size(), 100u);
  EXPECT_DOUBLE_EQ(dt[1], 0.02);
  EXPECT_EQ(decimate(Matrix(Matrix::Zero(21, 2)), 20).rows(), 2);
  EXPECT_THROW(decimate(ramp, 0), Error);
}

TEST(Standardize, SmallExample) {
  Matrix a(2, 2), b(1, 2);
  a << 1, 10, 3, 10;
  b << 5, 10;
  const auto [out, stats] = standardize({a, b});
  EXPECT_NEAR(stats.mean(0), 3.0, 1e-15);
  EXPECT_NEAR(stats.stddev(0), std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(stats.mean(1), 10.0, 1e-15);
  EXPECT_EQ(stats.stddev(1), stddev_floor);
  EXPECT_NEAR(out[0](0, 0), -2.0 / std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_NEAR(out[1](0, 0), 2.0 / std::sqrt(8.0 / 3.0), 1e-12);
  EXPECT_EQ(out[0](1, 1), 0.0);
}

TEST(Standardize, TwoPointsMapToPlusMinusOne) {
  Matrix a(2, 1);
  a << 1, 3;
  const auto [out, stats] = standardize({a});
  EXPECT_NEAR(out[0](0, 0), -1.0, 1e-15);
  EXPECT_NEAR(out[0](1, 0), 1.0, 1e-15);
}

TEST(Standardize, AlreadyStandardIsIdentity) {
  Matrix a(4, 2);
  a << -1, 1, 1, -1, -1, -1, 1, 1;
  const auto [out, stats] = standardize({a});
  EXPECT_LT((out[0] - a).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Standardize, LargeRandomColumnMeans) {
  std::mt19937_64 rng(1);
  const Matrix m = Matrix(oracle::random_matrix(rng, 1000, 32, 4.0)).array() + 2.5;
  const auto [out, stats] = standardize({m});
  const Vector means = out[0].colwise().mean().transpose();
  EXPECT_LT(means.cwiseAbs().maxCoeff(), 1e-9);
  const Vector ref = m.colwise().mean().transpose();
  EXPECT_LT((stats.mean - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, ZeroMeanUnitVarianceAndIdempotent) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix> data;
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int i = 0; i < n; ++i)
      data.push_back(Matrix(oracle::random_matrix(rng, std::uniform_int_distribution<int>(2, 30)(rng), 5) * 7.0).array() + 3.0);
    const auto [once, s1] = standardize(data);
    const auto [twice, s2] = standardize(once);
    EXPECT_LT(s2.mean.cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((s2.stddev.array() - 1.0).abs().maxCoeff(), 1e-12);
    for (std::size_t i = 0; i < once.size(); ++i) EXPECT_LT((once[i] - twice[i]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Standardize, Errors) {
  EXPECT_THROW(fit_stats({}), Error);
  EXPECT_THROW(fit_stats({Matrix(0, 3)}), Error);
  const auto s = fit_stats({Matrix(Matrix::Ones(3, 2))});
  EXPECT_THROW(transform(s, Matrix::Ones(3, 4)), Error);
}

TEST(PadAndMask, ShortLongAndExact) {
  Matrix s1(2, 1), s2(5, 1), s3(3, 1);
  s1 << 1, 2;
  s2 << 1, 2, 3, 4, 5;
  s3 << 7, 8, 9;
  const PaddedBatch pb = pad_and_mask({s1, s2, s3}, 3);
  EXPECT_EQ(pb.lengths, (std::vector<int>{2, 3, 3}));
  Matrix mask(3, 3);
  mask << 1, 1, 0, 1, 1, 1, 1, 1, 1;
  EXPECT_TRUE(pb.mask == mask);
  EXPECT_EQ(pb.data[0](0, 0), 1.0);
  EXPECT_EQ(pb.data[2](0, 0), 0.0);
  EXPECT_EQ(pb.data[0](1, 0), 3.0);  // most recent three rows
  EXPECT_EQ(pb.data[2](1, 0), 5.0);
  EXPECT_EQ(pb.data[2](2, 0), 9.0);
  EXPECT_THROW(pad_and_mask({}, 3), Error);
  EXPECT_THROW(pad_and_mask({s1}, 0), Error);
  EXPECT_THROW(pad_and_mask({s1, Matrix(2, 2)}, 3), Error);
}

TEST(PadAndMask, UnpadRoundTrip) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Matrix> seqs;
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < n; ++i) seqs.push_back(oracle::random_matrix(rng, std::uniform_int_distribution<int>(1, 40)(rng), 4));
    const PaddedBatch pb = pad_and_mask(seqs, 40);
    const auto back = unpad(pb);
    ASSERT_EQ(back.size(), seqs.size());
    for (std::size_t i = 0; i < seqs.size(); ++i) EXPECT_TRUE(back[i] == seqs[i]);
    for (int b = 0; b < pb.batch; ++b)
      for (int t = pb.lengths[static_cast<std::size_t>(b)]; t < pb.steps; ++t) {
        EXPECT_FALSE(pb.valid(b, t));
        EXPECT_EQ(pb.data[static_cast<std::size_t>(t)].row(b).cwiseAbs().maxCoeff(), 0.0);
      }
  }
}

TEST(FlattenForSvm, TimeMajorWithPadding) {
  Matrix s(2, 3);
  s << 1, 2, 3, 4, 5, 6;
  Vector v = flatten_for_svm(s, 3);
  ASSERT_EQ(v.size(), 9);
  Vector want(9);
  want << 1, 2, 3, 4, 5, 6, 0, 0, 0;
  EXPECT_TRUE(v == want);
  v = flatten_for_svm(s, 1);
  ASSERT_EQ(v.size(), 3);
  EXPECT_EQ(v(0), 4.0);
  EXPECT_EQ(flatten_for_svm(Matrix::Ones(100, 32), 100).size(), 3200);
  EXPECT_EQ(flatten_for_svm(Matrix::Ones(130, 32), 100).size(), 3200);
  EXPECT_THROW(flatten_for_svm(s, 0), Error);
}
