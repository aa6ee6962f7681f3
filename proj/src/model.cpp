#include "faircf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "faircf/errors.hpp"

namespace faircf {

namespace {

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

nn::Matrix to_matrix(const std::vector<Instance>& rows) {
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  nn::Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw ShapeError("ragged rows");
    for (Eigen::Index j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), j) = rows[i][j];
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegression::LogisticRegression(std::vector<double> weights, double bias, double threshold)
    : weights_(std::move(weights)), bias_(bias), threshold_(threshold) {}

double LogisticRegression::score(std::span<const double> x) const {
  if (x.size() != weights_.size()) {
    throw ShapeError("classifier expects " + std::to_string(weights_.size()) + " features, got " +
                     std::to_string(x.size()));
  }
  double z = bias_;
  for (std::size_t j = 0; j < x.size(); ++j) z += weights_[j] * x[j];
  return sigmoid(z);
}

double LogisticRegression::loss_and_gradient(const std::vector<double>& params,
                                             const std::vector<Instance>& x,
                                             const std::vector<int>& y, double l2,
                                             std::vector<double>* grad) {
  const std::size_t d = params.size() - 1;
  const double n = static_cast<double>(x.size());
  double loss = 0.0;
  if (grad) grad->assign(params.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double z = params[d];
    for (std::size_t j = 0; j < d; ++j) z += params[j] * x[i][j];
    // BCE(y, sigmoid(z)) = softplus(z) - y z
    loss += softplus(z) - y[i] * z;
    if (grad) {
      const double r = (sigmoid(z) - y[i]) / n;
      for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * x[i][j];
      (*grad)[d] += r;
    }
  }
  loss /= n;
  double norm2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    norm2 += params[j] * params[j];
    if (grad) (*grad)[j] += l2 * params[j];
  }
  return loss + 0.5 * l2 * norm2;
}

LogisticRegression train_classifier(const Dataset& train, const LogisticConfig& config) {
  if (train.empty()) throw DataError("cannot train a classifier on an empty dataset");
  const auto positives = std::count(train.labels().begin(), train.labels().end(), 1);
  if (positives == 0 || positives == static_cast<long>(train.size())) {
    throw DataError("training data has a single class; both labels are required");
  }
  if (config.epochs < 0 || !(config.lr > 0) || config.l2 < 0) {
    throw ConfigError("classifier config needs lr > 0, epochs >= 0, l2 >= 0");
  }
  const auto& x = train.normalized_rows();
  const auto& y = train.labels();
  const std::size_t d = train.schema().size();

  double mean_sq = 0.0;
  for (const auto& row : x) {
    for (double v : row) mean_sq += v * v;
    mean_sq += 1.0;
  }
  mean_sq /= static_cast<double>(x.size());
  const double lipschitz = 0.25 * mean_sq + config.l2;
  const double step = std::min(config.lr, 1.0 / lipschitz);

  std::vector<double> params(d + 1, 0.0);
  std::vector<double> grad;
  LogisticRegression model;
  double loss = LogisticRegression::loss_and_gradient(params, x, y, config.l2, &grad);
  model.loss_history_.push_back(loss);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t j = 0; j <= d; ++j) params[j] -= step * grad[j];
    loss = LogisticRegression::loss_and_gradient(params, x, y, config.l2, &grad);
    if (!std::isfinite(loss)) throw DivergenceError("classifier loss diverged; lower lr");
    model.loss_history_.push_back(loss);
  }
  model.weights_.assign(params.begin(), params.begin() + static_cast<long>(d));
  model.bias_ = params[d];
  return model;
}

nlohmann::json LogisticRegression::to_json(const FeatureSchema& schema) const {
  return {{"type", "logistic_regression"},
          {"schema_fingerprint", schema.fingerprint()},
          {"weights", weights_},
          {"bias", bias_},
          {"threshold", threshold_}};
}

LogisticRegression LogisticRegression::from_json(const nlohmann::json& doc,
                                                 const FeatureSchema& schema) {
  const std::string stored = doc.at("schema_fingerprint").get<std::string>();
  if (stored != schema.fingerprint()) {
    throw ValidationError("model was trained on a different schema (fingerprint " + stored +
                          " vs " + schema.fingerprint() + ")");
  }
  LogisticRegression model(doc.at("weights").get<std::vector<double>>(), doc.at("bias").get<double>(),
                           doc.value("threshold", 0.5));
  if (model.weights_.size() != schema.size()) throw ShapeError("model weight count mismatch");
  return model;
}

// ---------------------------------------------------------------------------
// Prediction-file backend

ScoreTableClassifier::ScoreTableClassifier(const Dataset& ds, const std::vector<double>& scores,
                                           double threshold)
    : threshold_(threshold) {
  if (scores.size() != ds.size()) {
    throw ShapeError("prediction table has " + std::to_string(scores.size()) + " scores for " +
                     std::to_string(ds.size()) + " rows");
  }
  for (std::size_t i = 0; i < ds.size(); ++i) table_.emplace(ds.normalized_row(i), scores[i]);
}

double ScoreTableClassifier::score(std::span<const double> x) const {
  auto it = table_.find(std::vector<double>(x.begin(), x.end()));
  if (it == table_.end()) {
    throw UnseenInstanceError(
        "prediction-file classifier cannot score an instance outside its table");
  }
  return it->second;
}

ScoreTableClassifier load_prediction_file(const std::filesystem::path& path, const Dataset& ds) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open prediction file " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> scores(ds.size(), 0.0);
  std::vector<bool> seen(ds.size(), false);
  long line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream cells(line);
    std::string index_text;
    std::string score_text;
    std::getline(cells, index_text, ',');
    std::getline(cells, score_text, ',');
    std::size_t index = 0;
    double score = 0.0;
    try {
      index = std::stoul(index_text);
      score = std::stod(score_text);
    } catch (const std::exception&) {
      throw ParseError("bad prediction record on line " + std::to_string(line_number),
                       line_number, -1);
    }
    if (index >= ds.size()) {
      throw ValidationError("prediction row_index " + std::to_string(index) + " out of range");
    }
    if (!(score >= 0.0 && score <= 1.0)) {
      throw ValidationError("prediction score on line " + std::to_string(line_number) +
                            " outside [0, 1]");
    }
    scores[index] = score;
    seen[index] = true;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) throw ValidationError("prediction file has no score for row " + std::to_string(i));
  }
  return ScoreTableClassifier(ds, scores);
}

// ---------------------------------------------------------------------------
// Audit

nlohmann::json ModelFairnessAudit::to_json() const {
  return {{"dp_difference", dp_difference}, {"eo_difference", eo_difference},
          {"accuracy", accuracy},           {"precision", precision},
          {"recall", recall},               {"f1", f1},
          {"positive_rate", {positive_rate0, positive_rate1}},
          {"tpr", {tpr0, tpr1}},            {"fpr", {fpr0, fpr1}},
          {"rows", rows}};
}

ModelFairnessAudit audit_predictions(std::span<const int> y_true, std::span<const int> y_pred,
                                     std::span<const int> groups) {
  if (y_true.size() != y_pred.size() || y_true.size() != groups.size()) {
    throw ShapeError("audit inputs differ in length");
  }
  struct Counts {
    double tp = 0, fp = 0, tn = 0, fn = 0;
    double n() const { return tp + fp + tn + fn; }
  };
  Counts by_group[2];
  Counts total;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    Counts& g = by_group[groups[i] == 1 ? 1 : 0];
    const bool t = y_true[i] == 1;
    const bool p = y_pred[i] == 1;
    for (Counts* c : {&g, &total}) {
      if (t && p) c->tp += 1;
      if (!t && p) c->fp += 1;
      if (!t && !p) c->tn += 1;
      if (t && !p) c->fn += 1;
    }
  }
  for (int g = 0; g < 2; ++g) {
    if (by_group[g].n() == 0) {
      throw AuditError("protected group " + std::to_string(g) + " is absent from the audit split");
    }
  }
  auto ratio = [](double a, double b) { return b > 0 ? a / b : 0.0; };
  ModelFairnessAudit audit;
  audit.rows = y_true.size();
  audit.positive_rate0 = ratio(by_group[0].tp + by_group[0].fp, by_group[0].n());
  audit.positive_rate1 = ratio(by_group[1].tp + by_group[1].fp, by_group[1].n());
  audit.tpr0 = ratio(by_group[0].tp, by_group[0].tp + by_group[0].fn);
  audit.tpr1 = ratio(by_group[1].tp, by_group[1].tp + by_group[1].fn);
  audit.fpr0 = ratio(by_group[0].fp, by_group[0].fp + by_group[0].tn);
  audit.fpr1 = ratio(by_group[1].fp, by_group[1].fp + by_group[1].tn);
  audit.dp_difference = std::abs(audit.positive_rate0 - audit.positive_rate1);
  audit.eo_difference = std::max(std::abs(audit.tpr0 - audit.tpr1), std::abs(audit.fpr0 - audit.fpr1));
  audit.accuracy = ratio(total.tp + total.tn, total.n());
  audit.precision = ratio(total.tp, total.tp + total.fp);
  audit.recall = ratio(total.tp, total.tp + total.fn);
  audit.f1 = ratio(2 * audit.precision * audit.recall, audit.precision + audit.recall);
  return audit;
}

ModelFairnessAudit audit_fairness(const Classifier& h, const Dataset& test) {
  std::vector<int> pred(test.size());
  std::vector<int> groups(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    pred[i] = h.predict(test.normalized_row(i));
    groups[i] = test.group(i);
  }
  return audit_predictions(test.labels(), pred, groups);
}

// ---------------------------------------------------------------------------
// Autoencoder

std::vector<int> default_autoencoder_hidden(int dim) {
  return {(dim + 1) / 2, (dim + 3) / 4};
}

Instance Autoencoder::reconstruct(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) {
    throw ShapeError("autoencoder expects " + std::to_string(dim()) + " features, got " +
                     std::to_string(x.size()));
  }
  nn::Matrix in(1, dim());
  for (int j = 0; j < dim(); ++j) in(0, j) = x[j];
  const nn::Matrix out = net_.forward(in);
  return Instance(out.data(), out.data() + out.size());
}

double Autoencoder::loss_and_gradient(const nn::Mlp& net, const nn::Matrix& noisy,
                                      const nn::Matrix& clean, nn::Vector* grad) {
  nn::Mlp::Cache cache;
  const nn::Matrix out = net.forward(noisy, cache);
  const nn::Matrix diff = out - clean;
  const double count = static_cast<double>(diff.size());
  if (grad) *grad = net.backward(cache, (2.0 / count) * diff);
  return diff.squaredNorm() / count;
}

nlohmann::json Autoencoder::to_json() const {
  return {{"network", net_.to_json()}, {"noise_sigma", noise_sigma_}, {"final_loss", final_loss_}};
}

Autoencoder Autoencoder::from_json(const nlohmann::json& doc) {
  return Autoencoder(nn::Mlp::from_json(doc.at("network")), doc.at("noise_sigma").get<double>(),
                     doc.value("final_loss", 0.0));
}

Autoencoder train_autoencoder(const std::vector<Instance>& normalized_rows,
                              const AutoencoderConfig& config) {
  if (normalized_rows.empty()) throw DataError("cannot train an autoencoder on no rows");
  if (config.epochs < 0 || !(config.lr > 0) || config.batch_size <= 0 || config.noise_sigma < 0) {
    throw ConfigError("autoencoder config needs lr > 0, batch_size > 0, epochs >= 0, noise >= 0");
  }
  const nn::Matrix data = to_matrix(normalized_rows);
  const int d = static_cast<int>(data.cols());
  std::vector<int> hidden = config.hidden_dims.empty() ? default_autoencoder_hidden(d) : config.hidden_dims;
  std::vector<int> sizes{d};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.insert(sizes.end(), hidden.rbegin() + 1, hidden.rend());
  sizes.push_back(d);

  std::mt19937_64 rng(config.seed);
  nn::Mlp net(sizes);
  net.init(rng);
  nn::Adam adam(net.param_count(), config.lr);
  std::normal_distribution<double> noise(0.0, 1.0);

  const Eigen::Index n = data.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  nn::Vector grad;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index rows = std::min<Eigen::Index>(config.batch_size, n - start);
      nn::Matrix clean(rows, d);
      for (Eigen::Index r = 0; r < rows; ++r) clean.row(r) = data.row(order[start + r]);
      nn::Matrix noisy = clean;
      if (config.noise_sigma > 0) {
        for (Eigen::Index k = 0; k < noisy.size(); ++k) noisy.data()[k] += config.noise_sigma * noise(rng);
      }
      const double loss = Autoencoder::loss_and_gradient(net, noisy, clean, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw DivergenceError("autoencoder loss diverged at epoch " + std::to_string(epoch) +
                              "; try a smaller lr");
      }
      adam.step(net.params(), grad);
    }
  }
  const double final_loss = Autoencoder::loss_and_gradient(net, data, data, nullptr);
  if (!std::isfinite(final_loss)) throw DivergenceError("autoencoder loss diverged; try a smaller lr");
  return Autoencoder(std::move(net), config.noise_sigma, final_loss);
}

Autoencoder train_autoencoder(const Dataset& train, const AutoencoderConfig& config) {
  return train_autoencoder(train.normalized_rows(), config);
}

double plausibility(const Autoencoder& ae, std::span<const double> x_cf) {
  const Instance recon = ae.reconstruct(x_cf);
  double err = 0.0;
  for (std::size_t j = 0; j < recon.size(); ++j) err += (x_cf[j] - recon[j]) * (x_cf[j] - recon[j]);
  return err;
}

}  // namespace faircf
