#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "slipgrasp/ml/nn.hpp"

namespace slipgrasp::ml {

struct NetConfig {
  int cells = 75;
  int hidden = 50;
  double input_dropout = 0.2;
  double recurrent_dropout = 0.2;
  double head_dropout = 0.5;
};

// FC(hidden, tanh) -> dropout -> FC(outputs) -> sigmoid.
struct SigmoidHead {
  Dense fc1, fc2;

  struct Cache {
    Matrix input, hidden, dropped, drop_mask, output;
    bool dropout = false;
  };

  SigmoidHead() = default;
  SigmoidHead(const std::string& name, int in, int hidden, int outputs)
      : fc1(name + ".fc1", in, hidden), fc2(name + ".fc2", hidden, outputs) {}

  void init(std::mt19937_64& rng) {
    fc1.init(rng);
    fc2.init(rng);
  }

  Matrix forward(const Matrix& x, double dropout, bool dropout_on, std::mt19937_64* rng, Cache* cache) const {
    Matrix hidden = fc1.forward(x).array().tanh().matrix();
    Matrix dropped = hidden;
    Matrix mask;
    const bool drop = dropout_on && rng != nullptr && dropout > 0.0;
    if (drop) {
      mask = dropout_mask(hidden.rows(), hidden.cols(), dropout, *rng);
      dropped = hidden.cwiseProduct(mask);
    }
    Matrix out = sigmoid(fc2.forward(dropped));
    if (cache) *cache = Cache{x, hidden, dropped, mask, out, drop};
    return out;
  }

  // d_logits: gradient w.r.t. the pre-sigmoid outputs. Returns gradient w.r.t. the head input.
  Matrix backward(const Cache& cache, const Matrix& d_logits) {
    Matrix d_dropped = fc2.backward(cache.dropped, d_logits);
    if (cache.dropout) d_dropped = d_dropped.cwiseProduct(cache.drop_mask);
    const Matrix d_pre = (d_dropped.array() * (1.0 - cache.hidden.array().square())).matrix();
    return fc1.backward(cache.input, d_pre);
  }

  ParamList params() { return {&fc1.w, &fc1.b, &fc2.w, &fc2.b}; }
};

// LSTM -> masked mean pooling -> sigmoid head, trained with per-output BCE.
struct SequenceClassifier {
  NetConfig config;
  Lstm lstm;
  SigmoidHead head;

  struct Forward {
    LstmOutput lstm;
    Matrix output;  // batch x outputs, in (0, 1)
  };

  SequenceClassifier() = default;
  SequenceClassifier(int features, int outputs, const NetConfig& cfg = {})
      : config(cfg), lstm("lstm", features, cfg.cells), head("head", cfg.cells, cfg.hidden, outputs) {}

  int features() const { return lstm.features(); }
  int outputs() const { return head.fc2.out(); }

  void init(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    lstm.init(rng);
    head.init(rng);
  }

  ParamList params() {
    ParamList ps = lstm.params();
    for (Param* p : head.params()) ps.push_back(p);
    return ps;
  }

  Forward forward(const PaddedBatch& batch, bool dropout_on = false, std::mt19937_64* rng = nullptr) const {
    Forward f;
    f.lstm = lstm.forward(batch, config.input_dropout, config.recurrent_dropout, dropout_on, rng, nullptr);
    f.output = head.forward(f.lstm.pooled, config.head_dropout, dropout_on, rng, nullptr);
    return f;
  }

  // Forward with dropout, backward, gradients accumulated. Returns the batch loss.
  double accumulate_gradients(const PaddedBatch& batch, const Matrix& targets, bool dropout_on, std::mt19937_64* rng) {
    LstmCache lc;
    SigmoidHead::Cache hc;
    const LstmOutput lo = lstm.forward(batch, config.input_dropout, config.recurrent_dropout, dropout_on, rng, &lc);
    const Matrix out = head.forward(lo.pooled, config.head_dropout, dropout_on, rng, &hc);
    const double loss = bce_loss(out, targets);
    const Matrix d_pooled = head.backward(hc, bce_logit_grad(out, targets));
    lstm.backward(batch, lc, d_pooled);
    return loss;
  }

  double loss(const PaddedBatch& batch, const Matrix& targets) const { return bce_loss(forward(batch).output, targets); }
};

struct TrainOptions {
  int epochs = 100;
  int batch_size = 16;
  int patience = 10;
  double learning_rate = 1e-3;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> validation_loss;
  int best_epoch = -1;
  int epochs_run = 0;
};

// Minibatch Adam with early stopping on validation loss; the best parameters are
// restored at the end. step(indices, rng) must accumulate gradients and return the
// batch loss. validate() returns NaN when there is no validation set.
inline TrainHistory fit(const ParamList& params, std::size_t n_train, const TrainOptions& opt, std::uint64_t seed,
                        const std::function<double(const std::vector<std::size_t>&, std::mt19937_64&)>& step,
                        const std::function<double()>& validate) {
  if (n_train == 0) throw Error(ErrorCode::empty_input, "no training samples");
  std::mt19937_64 rng(seed);
  AdamState adam;
  adam.lr = opt.learning_rate;
  TrainHistory hist;
  std::vector<std::size_t> order(n_train);
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values = snapshot(params);
  int since_best = 0;
  const auto bs = static_cast<std::size_t>(std::max(1, opt.batch_size));
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < n_train; start += bs) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n_train, start + bs)));
      zero_grads(params);
      total += step(idx, rng) * static_cast<double>(idx.size());
      adam_step(params, adam);
    }
    hist.train_loss.push_back(total / static_cast<double>(n_train));
    ++hist.epochs_run;
    const double v = validate();
    hist.validation_loss.push_back(v);
    const double score = std::isnan(v) ? hist.train_loss.back() : v;
    if (score < best) {
      best = score;
      best_values = snapshot(params);
      hist.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= opt.patience) {
      break;
    }
  }
  restore(params, best_values);
  return hist;
}

// Gathers the given sequences into a padded batch.
inline PaddedBatch gather_batch(const std::vector<Matrix>& seqs, const std::vector<std::size_t>& idx, int max_steps) {
  std::vector<Matrix> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx) picked.push_back(seqs[i]);
  return signal::pad_and_mask(picked, max_steps);
}

}  // namespace slipgrasp::ml
