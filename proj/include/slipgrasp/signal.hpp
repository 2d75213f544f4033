#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "slipgrasp/core.hpp"

namespace slipgrasp::signal {

// Streams are matrices with one row per time step and one column per feature.

struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;  // denominator 1 + a1 z^-1 + a2 z^-2
};

// Second-order Butterworth low-pass via the bilinear transform with prewarping:
//   K = tan(pi fc / fs),  n = 1 / (1 + sqrt2 K + K^2)
//   b0 = K^2 n, b1 = 2 b0, b2 = b0
//   a1 = 2 (K^2 - 1) n,  a2 = (1 - sqrt2 K + K^2) n
inline Biquad butterworth_lowpass(double cutoff_hz, double sample_rate_hz) {
  if (!(cutoff_hz > 0.0 && cutoff_hz < 0.5 * sample_rate_hz))
    throw Error(ErrorCode::invalid_cutoff, "cutoff must lie in (0, fs/2)");
  const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad f;
  f.b0 = k2 * norm;
  f.b1 = 2.0 * f.b0;
  f.b2 = f.b0;
  f.a1 = 2.0 * (k2 - 1.0) * norm;
  f.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return f;
}

enum class FilterInit {
  zero,          // relaxed filter, suitable for impulse responses
  steady_state,  // state primed as if the first sample had been held forever
};

// Causal transposed direct form II, applied per column.
inline Matrix apply_biquad(const Biquad& f, const Matrix& stream, FilterInit init = FilterInit::steady_state) {
  Matrix out(stream.rows(), stream.cols());
  if (stream.rows() == 0) return out;
  for (Eigen::Index c = 0; c < stream.cols(); ++c) {
    double z1 = 0.0, z2 = 0.0;
    if (init == FilterInit::steady_state) {
      // DC gain is one, so the held output equals the held input x0.
      const double x0 = stream(0, c);
      z2 = f.b2 * x0 - f.a2 * x0;
      z1 = f.b1 * x0 - f.a1 * x0 + z2;
    }
    for (Eigen::Index t = 0; t < stream.rows(); ++t) {
      const double x = stream(t, c);
      const double y = f.b0 * x + z1;
      z1 = f.b1 * x - f.a1 * y + z2;
      z2 = f.b2 * x - f.a2 * y;
      out(t, c) = y;
    }
  }
  return out;
}

inline Matrix iir_lowpass(const Matrix& stream, double cutoff_hz, double sample_rate_hz = 1000.0,
                          FilterInit init = FilterInit::steady_state) {
  return apply_biquad(butterworth_lowpass(cutoff_hz, sample_rate_hz), stream, init);
}

inline std::vector<double> impulse_response(const Biquad& f, int n) {
  Matrix impulse = Matrix::Zero(n, 1);
  if (n > 0) impulse(0, 0) = 1.0;
  const Matrix h = apply_biquad(f, impulse, FilterInit::zero);
  return {h.data(), h.data() + n};
}

// Keeps rows 0, factor, 2*factor, ...
inline Matrix decimate(const Matrix& stream, int factor = 20) {
  if (factor < 1) throw Error(ErrorCode::invalid_argument, "decimation factor must be >= 1");
  const Eigen::Index n = (stream.rows() + factor - 1) / factor;
  Matrix out(n, stream.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = stream.row(i * factor);
  return out;
}

inline std::vector<double> decimate(const std::vector<double>& timestamps, int factor = 20) {
  if (factor < 1) throw Error(ErrorCode::invalid_argument, "decimation factor must be >= 1");
  std::vector<double> out;
  for (std::size_t i = 0; i < timestamps.size(); i += static_cast<std::size_t>(factor)) out.push_back(timestamps[i]);
  return out;
}

struct StandardizationStats {
  Vector mean;
  Vector stddev;

  bool fitted() const { return mean.size() > 0; }
  Eigen::Index features() const { return mean.size(); }
};

inline constexpr double stddev_floor = 1e-8;

// Population statistics over every time step of every sequence.
inline StandardizationStats fit_stats(const std::vector<Matrix>& dataset) {
  if (dataset.empty()) throw Error(ErrorCode::empty_input, "cannot fit statistics on an empty dataset");
  const Eigen::Index f = dataset.front().cols();
  Vector sum = Vector::Zero(f);
  double count = 0.0;
  for (const auto& seq : dataset) {
    if (seq.cols() != f) throw Error(ErrorCode::dimension_mismatch, "sequences differ in feature count");
    sum += seq.colwise().sum().transpose();
    count += static_cast<double>(seq.rows());
  }
  if (count == 0.0) throw Error(ErrorCode::empty_input, "dataset has no time steps");
  StandardizationStats stats;
  stats.mean = sum / count;
  Vector sq = Vector::Zero(f);
  for (const auto& seq : dataset) sq += (seq.rowwise() - stats.mean.transpose()).array().square().colwise().sum().matrix().transpose();
  stats.stddev = (sq / count).array().sqrt().max(stddev_floor).matrix();
  return stats;
}

inline Matrix transform(const StandardizationStats& stats, const Matrix& seq) {
  if (seq.cols() != stats.features())
    throw Error(ErrorCode::dimension_mismatch, "feature count does not match standardization stats");
  return ((seq.rowwise() - stats.mean.transpose()).array().rowwise() / stats.stddev.transpose().array()).matrix();
}

// Fits on the given set when stats is empty, otherwise only transforms.
inline std::pair<std::vector<Matrix>, StandardizationStats> standardize(
    const std::vector<Matrix>& dataset, std::optional<StandardizationStats> stats = std::nullopt) {
  StandardizationStats s = stats ? *stats : fit_stats(dataset);
  std::vector<Matrix> out;
  out.reserve(dataset.size());
  for (const auto& seq : dataset) out.push_back(transform(s, seq));
  return {std::move(out), std::move(s)};
}

struct PaddedBatch {
  int batch = 0;
  int steps = 0;
  int features = 0;
  std::vector<Matrix> data;  // one batch x features matrix per time step
  Matrix mask;               // batch x steps, 1 for real steps, 0 for padding
  std::vector<int> lengths;

  bool valid(int b, int t) const { return mask(b, t) != 0.0; }
  int max_length() const { return lengths.empty() ? 0 : *std::max_element(lengths.begin(), lengths.end()); }
};

// Sequences longer than max_steps keep their most recent max_steps rows; shorter ones
// are zero padded at the end.
inline PaddedBatch pad_and_mask(const std::vector<Matrix>& sequences, int max_steps) {
  if (sequences.empty()) throw Error(ErrorCode::empty_input, "no sequences to pad");
  if (max_steps < 1) throw Error(ErrorCode::invalid_argument, "max_steps must be >= 1");
  PaddedBatch pb;
  pb.batch = static_cast<int>(sequences.size());
  pb.steps = max_steps;
  pb.features = static_cast<int>(sequences.front().cols());
  pb.data.assign(static_cast<std::size_t>(max_steps), Matrix::Zero(pb.batch, pb.features));
  pb.mask = Matrix::Zero(pb.batch, max_steps);
  for (int b = 0; b < pb.batch; ++b) {
    const Matrix& seq = sequences[static_cast<std::size_t>(b)];
    if (seq.rows() < 1) throw Error(ErrorCode::invalid_argument, "sequence length must be >= 1");
    if (seq.cols() != pb.features) throw Error(ErrorCode::dimension_mismatch, "sequences differ in feature count");
    const int len = static_cast<int>(std::min<Eigen::Index>(seq.rows(), max_steps));
    const Eigen::Index first = seq.rows() - len;
    for (int t = 0; t < len; ++t) {
      pb.data[static_cast<std::size_t>(t)].row(b) = seq.row(first + t);
      pb.mask(b, t) = 1.0;
    }
    pb.lengths.push_back(len);
  }
  return pb;
}

inline std::vector<Matrix> unpad(const PaddedBatch& pb) {
  std::vector<Matrix> out;
  for (int b = 0; b < pb.batch; ++b) {
    Matrix seq(pb.lengths[static_cast<std::size_t>(b)], pb.features);
    for (int t = 0; t < seq.rows(); ++t) seq.row(t) = pb.data[static_cast<std::size_t>(t)].row(b);
    out.push_back(std::move(seq));
  }
  return out;
}

// Same pad/truncate rule as pad_and_mask, then time-major flattening.
inline Vector flatten_for_svm(const Matrix& sequence, int fixed_steps) {
  if (fixed_steps < 1) throw Error(ErrorCode::invalid_argument, "fixed_steps must be >= 1");
  const Eigen::Index f = sequence.cols();
  Vector out = Vector::Zero(fixed_steps * f);
  const int len = static_cast<int>(std::min<Eigen::Index>(sequence.rows(), fixed_steps));
  const Eigen::Index first = sequence.rows() - len;
  for (int t = 0; t < len; ++t) out.segment(t * f, f) = sequence.row(first + t).transpose();
  return out;
}

}  // namespace slipgrasp::signal
