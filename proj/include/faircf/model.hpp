#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "faircf/nn.hpp"
#include "faircf/tabular.hpp"
#include "json.hpp"

namespace faircf {

// The only thing the engine needs from a model. Inputs are normalized
// instances (schema order, target excluded). Implementations must be pure so
// they can be queried concurrently.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual double score(std::span<const double> x) const = 0;
  virtual double threshold() const { return 0.5; }
  int predict(std::span<const double> x) const { return score(x) >= threshold() ? 1 : 0; }
};

// Adapts any callable; used for tests and for models living outside C++.
class FunctionClassifier final : public Classifier {
 public:
  using ScoreFn = std::function<double(std::span<const double>)>;
  explicit FunctionClassifier(ScoreFn fn, double threshold = 0.5)
      : fn_(std::move(fn)), threshold_(threshold) {}
  double score(std::span<const double> x) const override { return fn_(x); }
  double threshold() const override { return threshold_; }

 private:
  ScoreFn fn_;
  double threshold_;
};

struct LogisticConfig {
  double lr = 0.5;
  int epochs = 500;
  double l2 = 1e-4;
};

// L2-regularized logistic regression over normalized features.
class LogisticRegression final : public Classifier {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::vector<double> weights, double bias, double threshold = 0.5);

  double score(std::span<const double> x) const override;
  double threshold() const override { return threshold_; }
  void set_threshold(double t) { threshold_ = t; }

  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  // Objective value after each full-batch epoch, starting with the initial one.
  const std::vector<double>& loss_history() const { return loss_history_; }

  // Mean binary cross-entropy + (l2 / 2) * |w|^2 and its gradient with respect
  // to (w..., b). Exposed for gradient checks.
  static double loss_and_gradient(const std::vector<double>& params,
                                  const std::vector<Instance>& x, const std::vector<int>& y,
                                  double l2, std::vector<double>* grad);

  nlohmann::json to_json(const FeatureSchema& schema) const;
  // Throws ValidationError when the stored fingerprint differs from `schema`.
  static LogisticRegression from_json(const nlohmann::json& doc, const FeatureSchema& schema);

 private:
  friend LogisticRegression train_classifier(const Dataset&, const LogisticConfig&);
  std::vector<double> weights_;
  double bias_ = 0.0;
  double threshold_ = 0.5;
  std::vector<double> loss_history_;
};

// Full-batch gradient descent on normalized features. The step is capped by
// the inverse of a Lipschitz bound on the gradient so the objective never
// increases, whatever `l2` is.
LogisticRegression train_classifier(const Dataset& train, const LogisticConfig& config = {});

// Scores for dataset rows produced by an external model. Only the rows of the
// dataset it was built for can be scored; anything else throws
// UnseenInstanceError, so counterfactual search needs a real model.
class ScoreTableClassifier final : public Classifier {
 public:
  ScoreTableClassifier(const Dataset& ds, const std::vector<double>& scores, double threshold = 0.5);
  double score(std::span<const double> x) const override;
  double threshold() const override { return threshold_; }

 private:
  std::map<std::vector<double>, double> table_;
  double threshold_;
};

// Reads a CSV with header `row_index,score`; every dataset row needs a score.
ScoreTableClassifier load_prediction_file(const std::filesystem::path& path, const Dataset& ds);

struct ModelFairnessAudit {
  double dp_difference = 0.0;
  double eo_difference = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double positive_rate0 = 0.0;
  double positive_rate1 = 0.0;
  double tpr0 = 0.0;
  double tpr1 = 0.0;
  double fpr0 = 0.0;
  double fpr1 = 0.0;
  std::size_t rows = 0;

  nlohmann::json to_json() const;
};

// Rates with an empty denominator are reported as 0.
ModelFairnessAudit audit_predictions(std::span<const int> y_true, std::span<const int> y_pred,
                                     std::span<const int> groups);
ModelFairnessAudit audit_fairness(const Classifier& h, const Dataset& test);

struct AutoencoderConfig {
  std::vector<int> hidden_dims;  // empty: (ceil(d/2), ceil(d/4))
  double noise_sigma = 0.1;
  double lr = 1e-3;
  int epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

// Denoising autoencoder: encoder hidden_dims, mirrored decoder, tanh hidden
// units, linear reconstruction.
class Autoencoder {
 public:
  Autoencoder() = default;
  explicit Autoencoder(nn::Mlp net, double noise_sigma = 0.1, double final_loss = 0.0)
      : net_(std::move(net)), noise_sigma_(noise_sigma), final_loss_(final_loss) {}

  int dim() const { return net_.input_dim(); }
  double noise_sigma() const { return noise_sigma_; }
  double final_loss() const { return final_loss_; }
  const nn::Mlp& network() const { return net_; }

  Instance reconstruct(std::span<const double> x) const;

  // Mean over the batch and coordinates of (reconstruction - clean)^2 where
  // the network sees `noisy`. Gradient with respect to the flat parameters.
  static double loss_and_gradient(const nn::Mlp& net, const nn::Matrix& noisy,
                                  const nn::Matrix& clean, nn::Vector* grad);

  nlohmann::json to_json() const;
  static Autoencoder from_json(const nlohmann::json& doc);

 private:
  nn::Mlp net_;
  double noise_sigma_ = 0.1;
  double final_loss_ = 0.0;
};

std::vector<int> default_autoencoder_hidden(int dim);

// Throws DivergenceError if the loss becomes non-finite.
Autoencoder train_autoencoder(const std::vector<Instance>& normalized_rows,
                              const AutoencoderConfig& config = {});
Autoencoder train_autoencoder(const Dataset& train, const AutoencoderConfig& config = {});

// Squared Euclidean reconstruction error of a normalized instance.
double plausibility(const Autoencoder& ae, std::span<const double> x_cf);

}  // namespace faircf
