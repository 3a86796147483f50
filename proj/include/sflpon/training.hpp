#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sflpon/core.hpp"
#include "sflpon/rng.hpp"

// Local trainer: a linear softmax classifier fitted with mini-batch SGD on
// synthetic class-conditional Gaussian data. Parameters are flattened as
// C class-major blocks of f weights followed by C biases.

namespace sflpon {

struct SoftmaxLayout {
  std::size_t feature_dim = 0;
  std::size_t n_classes = 0;

  bool operator==(const SoftmaxLayout&) const = default;

  std::size_t dim() const noexcept { return feature_dim * n_classes + n_classes; }
  std::size_t weight_index(std::size_t cls, std::size_t feature) const noexcept {
    return cls * feature_dim + feature;
  }
  std::size_t bias_index(std::size_t cls) const noexcept { return feature_dim * n_classes + cls; }
};

/// Samples stored row-major: sample i occupies features[i*f, (i+1)*f).
class LocalDataset {
 public:
  LocalDataset(std::size_t feature_dim, std::size_t n_classes, std::vector<double> features, std::vector<int> labels)
      : layout_{feature_dim, n_classes}, features_(std::move(features)), labels_(std::move(labels)) {
    if (feature_dim == 0 || n_classes == 0) {
      throw Error(ErrorCode::InvalidConfig, "dataset needs feature_dim >= 1 and n_classes >= 1");
    }
    if (labels_.empty()) throw Error(ErrorCode::ZeroSamples, "dataset has no samples");
    if (features_.size() != labels_.size() * feature_dim) {
      throw Error(ErrorCode::DimensionMismatch, "feature matrix does not match label count");
    }
    for (int y : labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= n_classes) {
        throw Error(ErrorCode::InvalidConfig, "label " + std::to_string(y) + " outside [0, n_classes)");
      }
    }
    for (double x : features_) {
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteWeight, "dataset contains a non-finite feature");
    }
  }

  const SoftmaxLayout& layout() const noexcept { return layout_; }
  std::size_t feature_dim() const noexcept { return layout_.feature_dim; }
  std::size_t n_classes() const noexcept { return layout_.n_classes; }
  std::size_t sample_count() const noexcept { return labels_.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * layout_.feature_dim, layout_.feature_dim);
  }
  int label(std::size_t i) const { return labels_[i]; }
  std::span<const int> labels() const noexcept { return labels_; }

  bool operator==(const LocalDataset&) const = default;

 private:
  SoftmaxLayout layout_;
  std::vector<double> features_;
  std::vector<int> labels_;
};

struct HyperParams {
  double learning_rate = 0.05;
  int batch_size = 10;
  int local_epochs = 1;
  double l2_penalty = 0.0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw Error(ErrorCode::InvalidHyperParams, "learning_rate must be finite and > 0");
    }
    if (batch_size < 1) throw Error(ErrorCode::InvalidHyperParams, "batch_size must be >= 1");
    if (local_epochs < 1) throw Error(ErrorCode::InvalidHyperParams, "local_epochs must be >= 1");
    if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) {
      throw Error(ErrorCode::InvalidHyperParams, "l2_penalty must be finite and >= 0");
    }
  }
};

struct PartitionConfig {
  int n_clients = 320;
  int n_classes = 10;
  int feature_dim = 16;
  int k_min = 20;
  int k_max = 200;
  double skew = 0.8;               // 0 = IID labels, 1 = two classes per client
  double class_separation = 0.6;   // std-dev of the class mean coordinates
  int test_samples = 2000;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
    if (n_clients < 1) fail("partition.n_clients must be >= 1");
    if (n_classes < 2) fail("partition.n_classes must be >= 2");
    if (feature_dim < 1) fail("partition.feature_dim must be >= 1");
    if (k_min < 1 || k_min > k_max) fail("partition requires 1 <= k_min <= k_max");
    if (!(skew >= 0.0 && skew <= 1.0)) fail("partition.skew must lie in [0, 1]");
    if (!(class_separation > 0.0) || !std::isfinite(class_separation)) {
      fail("partition.class_separation must be finite and > 0");
    }
    if (test_samples < 1000) fail("partition.test_samples must be >= 1000");
  }
};

struct Partition {
  std::vector<LocalDataset> clients;
  LocalDataset test;
};

namespace detail {

inline void require_layout(const ModelParams& params, const SoftmaxLayout& layout) {
  if (params.dim() != layout.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "params dim " + std::to_string(params.dim()) +
                                                  " does not match softmax layout dim " +
                                                  std::to_string(layout.dim()));
  }
}

// Class scores for one sample.
inline void scores(std::span<const double> w, const SoftmaxLayout& layout, std::span<const double> x,
                   std::span<double> out) {
  for (std::size_t c = 0; c < layout.n_classes; ++c) {
    double s = w[layout.bias_index(c)];
    const double* wc = w.data() + layout.weight_index(c, 0);
    for (std::size_t f = 0; f < layout.feature_dim; ++f) s += wc[f] * x[f];
    out[c] = s;
  }
}

// In-place softmax; returns log-sum-exp of the input scores.
inline double softmax_inplace(std::span<double> z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - zmax);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return zmax + std::log(sum);
}

inline std::vector<std::size_t> all_indices(const LocalDataset& data) {
  std::vector<std::size_t> idx(data.sample_count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

}  // namespace detail

/// Mean softmax cross-entropy over the batch plus (l2/2)*||W||^2, biases
/// excluded from the penalty.
inline double loss_softmax(const ModelParams& params, const LocalDataset& data, std::span<const std::size_t> batch,
                           double l2) {
  const auto& layout = data.layout();
  detail::require_layout(params, layout);
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss over an empty batch");

  const auto w = params.weights();
  std::vector<double> z(layout.n_classes);
  double total = 0.0;
  for (std::size_t i : batch) {
    detail::scores(w, layout, data.row(i), z);
    const double label_score = z[static_cast<std::size_t>(data.label(i))];
    const double lse = detail::softmax_inplace(z);
    total += lse - label_score;
  }
  double penalty = 0.0;
  for (std::size_t d = 0; d < layout.feature_dim * layout.n_classes; ++d) penalty += w[d] * w[d];
  return total / static_cast<double>(batch.size()) + 0.5 * l2 * penalty;
}

inline double loss_softmax(const ModelParams& params, const LocalDataset& data, double l2) {
  const auto idx = detail::all_indices(data);
  return loss_softmax(params, data, idx, l2);
}

/// Gradient of loss_softmax with respect to every coordinate.
inline std::vector<double> grad_softmax(const ModelParams& params, const LocalDataset& data,
                                        std::span<const std::size_t> batch, double l2) {
  const auto& layout = data.layout();
  detail::require_layout(params, layout);
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "gradient over an empty batch");

  const auto w = params.weights();
  std::vector<double> grad(layout.dim(), 0.0);
  std::vector<double> p(layout.n_classes);
  for (std::size_t i : batch) {
    const auto x = data.row(i);
    detail::scores(w, layout, x, p);
    detail::softmax_inplace(p);
    p[static_cast<std::size_t>(data.label(i))] -= 1.0;
    for (std::size_t c = 0; c < layout.n_classes; ++c) {
      double* gc = grad.data() + layout.weight_index(c, 0);
      for (std::size_t f = 0; f < layout.feature_dim; ++f) gc[f] += p[c] * x[f];
      grad[layout.bias_index(c)] += p[c];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (double& g : grad) g *= inv;
  for (std::size_t d = 0; d < layout.feature_dim * layout.n_classes; ++d) grad[d] += l2 * w[d];
  return grad;
}

inline std::vector<double> grad_softmax(const ModelParams& params, const LocalDataset& data, double l2) {
  const auto idx = detail::all_indices(data);
  return grad_softmax(params, data, idx, l2);
}

inline ModelParams sgd_step(const ModelParams& params, std::span<const double> grad, double eta) {
  if (grad.size() != params.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "gradient dim does not match params dim");
  }
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error(ErrorCode::InvalidHyperParams, "eta must be finite and > 0");
  std::vector<double> out(params.weights().begin(), params.weights().end());
  for (std::size_t d = 0; d < out.size(); ++d) out[d] -= eta * grad[d];
  return ModelParams(std::move(out));
}

/// local_epochs passes of shuffled mini-batch SGD starting from the global
/// model. The final short batch of each epoch is kept.
inline ClientUpdate local_train(ClientId id, const GlobalModel& global, const LocalDataset& data,
                                const HyperParams& hp, Rng& rng) {
  hp.validate();
  detail::require_layout(global.params, data.layout());

  ModelParams w = global.params;
  auto order = detail::all_indices(data);
  const auto batch = static_cast<std::size_t>(hp.batch_size);
  for (int epoch = 0; epoch < hp.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t len = std::min(batch, order.size() - start);
      const auto g = grad_softmax(w, data, std::span<const std::size_t>(order).subspan(start, len), hp.l2_penalty);
      w = sgd_step(w, g, hp.learning_rate);
    }
  }
  return ClientUpdate(id, std::move(w), static_cast<std::int64_t>(data.sample_count()));
}

/// Fraction of samples whose highest-scoring class equals the label. Ties go
/// to the lowest class index.
inline double evaluate(const ModelParams& params, const LocalDataset& test) {
  const auto& layout = test.layout();
  detail::require_layout(params, layout);
  std::vector<double> z(layout.n_classes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.sample_count(); ++i) {
    detail::scores(params.weights(), layout, test.row(i), z);
    const auto best = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (best == test.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.sample_count());
}

inline double evaluate(const GlobalModel& model, const LocalDataset& test) { return evaluate(model.params, test); }

/// Synthetic non-IID federation: Gaussian class clusters (unit variance,
/// means drawn once from the seed), per-client sizes uniform in
/// [k_min, k_max], label mix interpolated by skew between uniform and an
/// even split over two client-specific classes. The test set is IID.
inline Partition synth_partition(const PartitionConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto C = static_cast<std::size_t>(cfg.n_classes);
  const auto f = static_cast<std::size_t>(cfg.feature_dim);

  std::vector<double> means(C * f);
  {
    std::normal_distribution<double> centre(0.0, cfg.class_separation);
    for (double& m : means) m = centre(rng);
  }

  std::normal_distribution<double> noise(0.0, 1.0);
  auto draw = [&](std::discrete_distribution<int>& label_dist, std::size_t count) {
    std::vector<double> xs(count * f);
    std::vector<int> ys(count);
    for (std::size_t i = 0; i < count; ++i) {
      const int y = label_dist(rng);
      ys[i] = y;
      for (std::size_t d = 0; d < f; ++d) xs[i * f + d] = means[static_cast<std::size_t>(y) * f + d] + noise(rng);
    }
    return LocalDataset(f, C, std::move(xs), std::move(ys));
  };

  std::uniform_int_distribution<int> size_dist(cfg.k_min, cfg.k_max);
  std::uniform_int_distribution<int> class_dist(0, cfg.n_classes - 1);
  std::uniform_int_distribution<int> other_dist(1, cfg.n_classes - 1);

  std::vector<LocalDataset> clients;
  clients.reserve(static_cast<std::size_t>(cfg.n_clients));
  for (int c = 0; c < cfg.n_clients; ++c) {
    const int k = size_dist(rng);
    const int a = class_dist(rng);
    const int b = (a + other_dist(rng)) % cfg.n_classes;
    std::vector<double> probs(C, (1.0 - cfg.skew) / static_cast<double>(C));
    probs[static_cast<std::size_t>(a)] += 0.5 * cfg.skew;
    probs[static_cast<std::size_t>(b)] += 0.5 * cfg.skew;
    std::discrete_distribution<int> label_dist(probs.begin(), probs.end());
    clients.push_back(draw(label_dist, static_cast<std::size_t>(k)));
  }

  std::vector<double> uniform(C, 1.0);
  std::discrete_distribution<int> test_labels(uniform.begin(), uniform.end());
  LocalDataset test = draw(test_labels, static_cast<std::size_t>(cfg.test_samples));
  return Partition{std::move(clients), std::move(test)};
}

}  // namespace sflpon
