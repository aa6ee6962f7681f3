#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "faircf/errors.hpp"
#include "faircf/model.hpp"
#include "support.hpp"

using namespace faircf;
using faircf::testing::numeric_gradient;
using faircf::testing::relative_error;
using faircf::testing::unit_schema;

namespace {

double accuracy(const Classifier& h, const Dataset& ds) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) ok += h.predict(ds.normalized_row(i)) == ds.label(i) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(ds.size());
}

Dataset separable(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = u(rng), b = u(rng);
    rows.push_back({a, b, static_cast<double>(i % 2)});
    labels.push_back(a + b >= 1.0 ? 1 : 0);
  }
  return Dataset::fit(unit_schema(2), std::move(rows), std::move(labels));
}

// Autoencoder whose network ignores its input and outputs `out`.
Autoencoder constant_autoencoder(const std::vector<double>& out) {
  const int d = static_cast<int>(out.size());
  nn::Mlp net({d, 2, d});
  net.params().setZero();
  for (int i = 0; i < d; ++i) net.params()[net.param_count() - d + i] = out[i];
  return Autoencoder(std::move(net));
}

}  // namespace

TEST_CASE("logistic regression separates a linearly separable set") {
  const Dataset ds = separable(400, 1);
  const LogisticRegression h = train_classifier(ds);
  CHECK(accuracy(h, ds) >= 0.95);
}

TEST_CASE("training loss never increases") {
  const Dataset ds = separable(200, 2);
  for (double l2 : {0.0, 1e-4, 1.0, 1e6}) {
    const LogisticRegression h = train_classifier(ds, {.lr = 5.0, .epochs = 200, .l2 = l2});
    const auto& hist = h.loss_history();
    REQUIRE(hist.size() == 201);
    for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1] + 1e-6);
  }
}

TEST_CASE("identical rows with mixed labels give the majority prediction") {
  std::vector<Instance> rows(10, Instance{0.3, 0.7, 0.0});
  rows.push_back({0.0, 0.0, 1.0});  // fixes ranges and both groups
  std::vector<int> labels = {1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  const Dataset ds = Dataset::fit(unit_schema(2), rows, labels);
  const LogisticRegression h = train_classifier(ds, {.lr = 0.5, .epochs = 2000, .l2 = 0.0});
  CHECK(h.predict(ds.normalized_row(0)) == 1);
}

TEST_CASE("huge l2 shrinks the weights and predicts the majority class") {
  const Dataset ds = separable(300, 3);
  const LogisticRegression free = train_classifier(ds, {.lr = 0.5, .epochs = 300, .l2 = 0.0});
  const LogisticRegression tight = train_classifier(ds, {.lr = 0.5, .epochs = 300, .l2 = 1e6});
  auto norm = [](const std::vector<double>& w) {
    double s = 0;
    for (double v : w) s += v * v;
    return std::sqrt(s);
  };
  CHECK(norm(tight.weights()) < 1e-3 * norm(free.weights()));
  std::size_t ones = std::count(ds.labels().begin(), ds.labels().end(), 1);
  const int majority = 2 * ones >= ds.size() ? 1 : 0;
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(tight.predict(ds.normalized_row(i)) == majority);
}

TEST_CASE("single-class training data is rejected") {
  const Dataset ds = Dataset::fit(unit_schema(2), {{0, 0, 0}, {1, 1, 1}}, {1, 1});
  CHECK_THROWS_AS(train_classifier(ds), DataError);
}

TEST_CASE("logistic loss gradient matches finite differences") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + trial % 4;
    std::vector<Instance> x(6, Instance(d));
    std::vector<int> y(6);
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (auto& v : x[i]) v = n(rng);
      y[i] = static_cast<int>(i % 2);
    }
    std::vector<double> p(d + 1);
    for (auto& v : p) v = n(rng);
    const double l2 = 0.1 * (trial % 3);
    std::vector<double> grad;
    LogisticRegression::loss_and_gradient(p, x, y, l2, &grad);
    const auto num = numeric_gradient(
        [&](const std::vector<double>& q) { return LogisticRegression::loss_and_gradient(q, x, y, l2, nullptr); }, p);
    CHECK(relative_error(grad, num) < 1e-4);
  }
}

TEST_CASE("raising the threshold never adds positives") {
  const Dataset ds = separable(200, 4);
  LogisticRegression h = train_classifier(ds);
  std::size_t prev = ds.size() + 1;
  for (double t = 0.5; t < 1.0; t += 0.05) {
    h.set_threshold(t);
    std::size_t pos = 0;
    for (const auto& x : ds.normalized_rows()) pos += h.predict(x);
    CHECK(pos <= prev);
    prev = pos;
  }
}

TEST_CASE("model persistence checks the schema fingerprint") {
  const Dataset ds = separable(100, 6);
  const LogisticRegression h = train_classifier(ds);
  const auto doc = h.to_json(ds.schema());
  const LogisticRegression back = LogisticRegression::from_json(doc, ds.schema());
  CHECK(back.weights() == h.weights());
  CHECK(back.bias() == h.bias());
  const Dataset other = separable(100, 7);
  CHECK_THROWS_AS(LogisticRegression::from_json(doc, other.schema()), ValidationError);
}

TEST_CASE("audit: demographic parity difference") {
  // G0 positive rate 0.6, G1 positive rate 0.5.
  std::vector<int> pred, truth, group;
  for (int i = 0; i < 10; ++i) {
    pred.push_back(i < 6);
    truth.push_back(i % 2);
    group.push_back(0);
  }
  for (int i = 0; i < 10; ++i) {
    pred.push_back(i < 5);
    truth.push_back(i % 2);
    group.push_back(1);
  }
  const ModelFairnessAudit a = audit_predictions(truth, pred, group);
  CHECK(a.positive_rate0 == doctest::Approx(0.6));
  CHECK(a.positive_rate1 == doctest::Approx(0.5));
  CHECK(a.dp_difference == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("audit: equalized odds difference") {
  // TPR (0.9, 0.8), FPR (0.2, 0.2).
  std::vector<int> pred, truth, group;
  auto add = [&](int g, int positives_hit, int negatives_hit) {
    for (int i = 0; i < 10; ++i) {
      truth.push_back(1);
      pred.push_back(i < positives_hit);
      group.push_back(g);
    }
    for (int i = 0; i < 10; ++i) {
      truth.push_back(0);
      pred.push_back(i < negatives_hit);
      group.push_back(g);
    }
  };
  add(0, 9, 2);
  add(1, 8, 2);
  const ModelFairnessAudit a = audit_predictions(truth, pred, group);
  CHECK(a.tpr0 == doctest::Approx(0.9));
  CHECK(a.fpr1 == doctest::Approx(0.2));
  CHECK(a.eo_difference == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(a.dp_difference >= 0.0);
  CHECK(a.dp_difference <= 1.0);
}

TEST_CASE("audit: identical outcomes and a missing group") {
  const std::vector<int> truth = {1, 0, 1, 0}, pred = {1, 0, 1, 0};
  const ModelFairnessAudit a = audit_predictions(truth, pred, std::vector<int>{0, 0, 1, 1});
  CHECK(a.dp_difference == 0.0);
  CHECK(a.eo_difference == 0.0);
  CHECK(a.accuracy == 1.0);
  try {
    audit_predictions(truth, pred, std::vector<int>{0, 0, 0, 0});
    FAIL("expected an audit error");
  } catch (const AuditError& e) {
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("prediction-file backend scores only its own rows") {
  const Dataset ds = separable(20, 8);
  const auto path = std::filesystem::temp_directory_path() / "faircf_scores.csv";
  {
    std::ofstream out(path);
    out << "row_index,score\n";
    for (std::size_t i = 0; i < ds.size(); ++i) out << i << ',' << (ds.label(i) ? 0.9 : 0.1) << '\n';
  }
  const ScoreTableClassifier h = load_prediction_file(path, ds);
  CHECK(accuracy(h, ds) == 1.0);
  CHECK_THROWS_AS(h.score(std::vector<double>{0.123456, 0.5, 0.0}), UnseenInstanceError);
  std::filesystem::remove(path);
}

TEST_CASE("plausibility is the squared reconstruction error") {
  const std::vector<double> fixed = {0.2, 0.4, 0.6};
  const Autoencoder ae = constant_autoencoder(fixed);
  CHECK(plausibility(ae, fixed) == 0.0);
  const std::vector<double> off = {0.2, 0.5, 0.6};
  CHECK(plausibility(ae, off) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK_THROWS_AS(plausibility(ae, std::vector<double>{0.1, 0.2}), ShapeError);
}

TEST_CASE("autoencoder loss gradient matches finite differences") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + trial % 3;
    nn::Mlp net({d, 1 + trial % 2 + 1, d});
    net.init(rng);
    nn::Matrix noisy(4, d), clean(4, d);
    for (int i = 0; i < noisy.size(); ++i) {
      noisy.data()[i] = n(rng);
      clean.data()[i] = n(rng);
    }
    nn::Vector grad;
    Autoencoder::loss_and_gradient(net, noisy, clean, &grad);
    std::vector<double> p(net.params().data(), net.params().data() + net.param_count());
    const auto num = numeric_gradient(
        [&](const std::vector<double>& q) {
          nn::Mlp m = net;
          m.params() = Eigen::Map<const nn::Vector>(q.data(), static_cast<Eigen::Index>(q.size()));
          return Autoencoder::loss_and_gradient(m, noisy, clean, nullptr);
        },
        p);
    CHECK(relative_error(std::vector<double>(grad.data(), grad.data() + grad.size()), num) < 1e-4);
  }
}

TEST_CASE("autoencoder learns a line embedded in three dimensions") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> rows;
  for (int i = 0; i < 200; ++i) {
    const double t = u(rng);
    rows.push_back({t, 0.5 * t + 0.25, 1.0 - t});
  }
  AutoencoderConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 300;
  cfg.lr = 3e-3;
  const Autoencoder ae = train_autoencoder(rows, cfg);
  double err = 0.0, variance = 0.0;
  Instance mean(3, 0.0);
  for (const auto& r : rows)
    for (int j = 0; j < 3; ++j) mean[j] += r[j] / rows.size();
  for (const auto& r : rows) {
    err += plausibility(ae, r) / rows.size();
    for (int j = 0; j < 3; ++j) variance += (r[j] - mean[j]) * (r[j] - mean[j]) / rows.size();
  }
  CHECK(std::isfinite(ae.final_loss()));
  CHECK(err < variance);
}

TEST_CASE("noise-free autoencoder with enough capacity nearly reproduces its inputs") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Instance> rows;
  for (int i = 0; i < 64; ++i) rows.push_back({u(rng), u(rng)});
  AutoencoderConfig cfg;
  cfg.hidden_dims = {8};
  cfg.noise_sigma = 0.0;
  cfg.epochs = 1500;
  cfg.lr = 1e-2;
  cfg.seed = 2;
  const Autoencoder ae = train_autoencoder(rows, cfg);
  double err = 0.0;
  for (const auto& r : rows) err += plausibility(ae, r) / rows.size();
  CHECK(err < 1e-3);
}

TEST_CASE("a far out-of-range probe reconstructs worse than the 95th percentile") {
  const Dataset ds = separable(300, 12);
  AutoencoderConfig cfg;
  cfg.seed = 3;
  const Autoencoder ae = train_autoencoder(ds, cfg);
  std::vector<double> errs;
  for (const auto& r : ds.normalized_rows()) errs.push_back(plausibility(ae, r));
  std::sort(errs.begin(), errs.end());
  const double p95 = errs[static_cast<std::size_t>(0.95 * (errs.size() - 1))];
  CHECK(plausibility(ae, std::vector<double>{3.0, 3.0, 3.0}) > p95);
}

TEST_CASE("autoencoder divergence is reported") {
  std::vector<Instance> rows(16, Instance{0.5, 0.5});
  rows[0] = {1e300, -1e300};
  AutoencoderConfig cfg;
  cfg.epochs = 5;
  CHECK_THROWS_AS(train_autoencoder(rows, cfg), DivergenceError);
}

TEST_CASE("autoencoder persistence round trip") {
  const Dataset ds = separable(50, 13);
  AutoencoderConfig cfg;
  cfg.epochs = 5;
  const Autoencoder ae = train_autoencoder(ds, cfg);
  const Autoencoder back = Autoencoder::from_json(ae.to_json());
  const auto& x = ds.normalized_row(0);
  CHECK(plausibility(back, x) == plausibility(ae, x));
}
