#pragma once

// Mini-batch training for the token scoring model: Adam with decoupled
// weight decay over the mean BCE loss, seeded shuffling, and best-checkpoint
// selection on a development metric (recall when a corpus is attached,
// otherwise dev loss).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexlink/model.hpp"
#include "lexlink/nn/encoder.hpp"
#include "lexlink/nn/graph.hpp"

namespace lexlink {

struct TrainExample {
  ExtractorInput input;
  std::vector<std::uint8_t> labels;
};

struct TrainConfig {
  // 1e-3 suits the small from-scratch encoder; 2e-5 is the full-scale
  // default for a pretrained 100M-parameter backbone.
  double learning_rate = 1e-3;
  double weight_decay = 0.01;
  int batch_size = 8;
  int epochs = 10;
  std::size_t k = 32;  // keywords per mention, used by recall-based dev metrics
  std::uint64_t seed = 42;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (learning_rate <= 0.0 || weight_decay < 0.0 || batch_size < 1 || epochs < 1)
      throw std::invalid_argument("invalid training configuration");
  }
};

inline nn::ModelParams zero_like(const nn::ModelParams& params) {
  nn::ModelParams zeros;
  zeros.layers.resize(params.layers.size());
  auto src = nn::tensor_entries(const_cast<nn::ModelParams&>(params));
  auto dst = nn::tensor_entries(zeros);
  for (std::size_t i = 0; i < src.size(); ++i)
    *dst[i].second = nn::Mat::Zero(src[i].second->rows(), src[i].second->cols());
  return zeros;
}

// Forward + backward for one example. Accumulates d(loss)/d(param) into
// `grads` and returns the example's BCE loss. The gradient is seeded at the
// logits with (sigmoid(z) - label) / L, the exact derivative of the
// unclamped mean BCE; the clamp only affects the reported value when scores
// saturate.
inline double example_loss_and_grad(const TokenScoringModel& model,
                                    const TrainExample& example, nn::ModelParams& grads) {
  if (example.labels.size() != example.input.token_ids.size())
    throw std::invalid_argument("label length does not match input length");

  nn::Graph graph;
  nn::ParamNodes nodes = nn::register_params(graph, model.params);
  const int logits = nn::forward_logits(graph, nodes, model.hyper, example.input.token_ids);

  const nn::Mat& z = graph.value(logits);
  const auto len = static_cast<std::size_t>(z.rows());
  std::vector<double> scores(len);
  nn::Mat seed(z.rows(), 1);
  for (std::size_t i = 0; i < len; ++i) {
    const double zi = z(static_cast<Eigen::Index>(i), 0);
    double s;
    if (zi >= 0.0) {
      s = 1.0 / (1.0 + std::exp(-zi));
    } else {
      const double e = std::exp(zi);
      s = e / (1.0 + e);
    }
    scores[i] = s;
    seed(static_cast<Eigen::Index>(i), 0) =
        (s - static_cast<double>(example.labels[i])) / static_cast<double>(len);
  }
  graph.backward(logits, seed);

  auto grad_entries = nn::tensor_entries(grads);
  auto node_entries = nn::tensor_entries(const_cast<nn::ParamNodes&>(nodes));
  for (std::size_t i = 0; i < grad_entries.size(); ++i)
    *grad_entries[i].second += graph.grad(*node_entries[i].second);

  return bce_loss(scores, example.labels);
}

inline double mean_loss(const TokenScoringModel& model,
                        const std::vector<TrainExample>& examples) {
  if (examples.empty()) throw std::invalid_argument("no examples");
  double total = 0.0;
  for (const auto& example : examples)
    total += bce_loss(score_tokens(model, example.input), example.labels);
  return total / static_cast<double>(examples.size());
}

class AdamW {
 public:
  AdamW(const nn::ModelParams& params, const TrainConfig& config)
      : config_(config), m_(zero_like(params)), v_(zero_like(params)) {}

  void step(nn::ModelParams& params, nn::ModelParams& grads) {
    ++t_;
    const double bias1 = 1.0 - std::pow(config_.adam_beta1, static_cast<double>(t_));
    const double bias2 = 1.0 - std::pow(config_.adam_beta2, static_cast<double>(t_));

    auto p = nn::tensor_entries(params);
    auto g = nn::tensor_entries(grads);
    auto m = nn::tensor_entries(m_);
    auto v = nn::tensor_entries(v_);
    for (std::size_t i = 0; i < p.size(); ++i) {
      nn::Mat& param = *p[i].second;
      const nn::Mat& grad = *g[i].second;
      nn::Mat& mom = *m[i].second;
      nn::Mat& var = *v[i].second;

      mom = config_.adam_beta1 * mom + (1.0 - config_.adam_beta1) * grad;
      var = config_.adam_beta2 * var + (1.0 - config_.adam_beta2) * grad.cwiseProduct(grad);
      const nn::Mat m_hat = mom / bias1;
      const nn::Mat v_hat = var / bias2;
      param -= config_.learning_rate *
               (m_hat.array() / (v_hat.array().sqrt() + config_.adam_eps)).matrix();
      if (config_.weight_decay > 0.0)
        param -= config_.learning_rate * config_.weight_decay * param;
    }
  }

 private:
  TrainConfig config_;
  std::int64_t t_ = 0;
  nn::ModelParams m_;
  nn::ModelParams v_;
};

struct DevMetric {
  std::string name;
  bool higher_is_better = true;
  std::function<double(const TokenScoringModel&)> evaluate;
};

inline DevMetric dev_loss_metric(std::vector<TrainExample> dev_examples) {
  return DevMetric{"dev_loss", false,
                   [examples = std::move(dev_examples)](const TokenScoringModel& model) {
                     return mean_loss(model, examples);
                   }};
}

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double dev_metric = std::numeric_limits<double>::quiet_NaN();
  bool is_best = false;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  std::string dev_metric_name;
};

// Trains in place and leaves `model` at the best checkpoint (final epoch when
// no dev metric is supplied). Deterministic for a fixed seed.
inline TrainLog train(TokenScoringModel& model, const std::vector<TrainExample>& examples,
                      const TrainConfig& config, const DevMetric* dev = nullptr) {
  config.validate();
  if (examples.empty()) throw std::invalid_argument("no training examples");

  std::mt19937_64 rng(config.seed);
  AdamW optimizer(model.params, config);

  TrainLog log;
  log.dev_metric_name = dev ? dev->name : "";
  nn::ModelParams best_params = model.params;
  double best_metric =
      dev && dev->higher_is_better ? -std::numeric_limits<double>::infinity()
                                   : std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    std::size_t cursor = 0;
    while (cursor < order.size()) {
      const std::size_t batch_end =
          std::min(order.size(), cursor + static_cast<std::size_t>(config.batch_size));
      nn::ModelParams grads = zero_like(model.params);
      double batch_loss = 0.0;
      for (std::size_t i = cursor; i < batch_end; ++i)
        batch_loss += example_loss_and_grad(model, examples[order[i]], grads);
      const double batch_n = static_cast<double>(batch_end - cursor);
      batch_loss /= batch_n;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) +
                                 ", example offset " + std::to_string(cursor));
      epoch_loss += batch_loss * batch_n;

      auto entries = nn::tensor_entries(grads);
      for (auto& [name, mat] : entries) *mat /= batch_n;
      optimizer.step(model.params, grads);
      cursor = batch_end;
    }
    epoch_loss /= static_cast<double>(order.size());

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss;
    if (dev) {
      stats.dev_metric = dev->evaluate(model);
      const bool improved = dev->higher_is_better ? stats.dev_metric > best_metric
                                                  : stats.dev_metric < best_metric;
      if (improved) {
        best_metric = stats.dev_metric;
        best_params = model.params;
        log.best_epoch = epoch;
        stats.is_best = true;
      }
    }
    log.epochs.push_back(stats);
  }

  if (dev) {
    model.params = std::move(best_params);
    log.best_metric = best_metric;
  } else {
    log.best_epoch = config.epochs;
  }
  return log;
}

}  // namespace lexlink
