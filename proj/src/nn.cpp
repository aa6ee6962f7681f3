#include "faircf/nn.hpp"

#include <cmath>

#include "faircf/errors.hpp"

namespace faircf::nn {

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw ShapeError("an MLP needs at least an input and an output size");
  Eigen::Index total = 0;
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
    if (sizes_[k] <= 0 || sizes_[k + 1] <= 0) throw ShapeError("MLP layer sizes must be positive");
    offsets_.push_back(total);
    total += static_cast<Eigen::Index>(sizes_[k]) * sizes_[k + 1] + sizes_[k + 1];
  }
  params_ = Vector::Zero(total);
}

void Mlp::init(std::mt19937_64& rng) {
  for (int k = 0; k < layer_count(); ++k) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[k]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index begin = offsets_[k];
    const Eigen::Index count = static_cast<Eigen::Index>(sizes_[k]) * sizes_[k + 1] + sizes_[k + 1];
    for (Eigen::Index i = 0; i < count; ++i) params_[begin + i] = dist(rng);
  }
}

void Mlp::init_uniform(std::mt19937_64& rng, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < params_.size(); ++i) params_[i] = dist(rng);
}

Eigen::Map<const Matrix> Mlp::weight(int layer) const {
  return {params_.data() + offsets_[layer], sizes_[layer], sizes_[layer + 1]};
}

Eigen::Map<const Vector> Mlp::bias(int layer) const {
  const Eigen::Index w = static_cast<Eigen::Index>(sizes_[layer]) * sizes_[layer + 1];
  return {params_.data() + offsets_[layer] + w, sizes_[layer + 1]};
}

void Mlp::check_input(const Matrix& input) const {
  if (input.cols() != input_dim()) {
    throw ShapeError("MLP expects " + std::to_string(input_dim()) + " inputs, got " +
                     std::to_string(input.cols()));
  }
}

Matrix Mlp::forward(const Matrix& input) const {
  check_input(input);
  Matrix x = input;
  for (int k = 0; k < layer_count(); ++k) {
    Matrix z = x * weight(k);
    z.rowwise() += bias(k).transpose();
    if (k + 1 < layer_count()) z = z.array().tanh();
    x = std::move(z);
  }
  return x;
}

Matrix Mlp::forward(const Matrix& input, Cache& cache) const {
  check_input(input);
  cache.activations.clear();
  cache.activations.reserve(sizes_.size());
  cache.activations.push_back(input);
  for (int k = 0; k < layer_count(); ++k) {
    Matrix z = cache.activations.back() * weight(k);
    z.rowwise() += bias(k).transpose();
    if (k + 1 < layer_count()) z = z.array().tanh();
    cache.activations.push_back(std::move(z));
  }
  return cache.activations.back();
}

Vector Mlp::backward(const Cache& cache, const Matrix& upstream, Matrix* input_grad) const {
  if (cache.activations.size() != sizes_.size()) throw ShapeError("MLP cache does not match network");
  if (upstream.cols() != output_dim() || upstream.rows() != cache.activations.back().rows()) {
    throw ShapeError("MLP upstream gradient has the wrong shape");
  }
  Vector grad = Vector::Zero(params_.size());
  Matrix delta = upstream;  // dL/dz for the current layer
  for (int k = layer_count() - 1; k >= 0; --k) {
    const Matrix& in = cache.activations[k];
    const Eigen::Index w = static_cast<Eigen::Index>(sizes_[k]) * sizes_[k + 1];
    Eigen::Map<Matrix>(grad.data() + offsets_[k], sizes_[k], sizes_[k + 1]) = in.transpose() * delta;
    Eigen::Map<Vector>(grad.data() + offsets_[k] + w, sizes_[k + 1]) = delta.colwise().sum().transpose();
    if (k == 0 && input_grad == nullptr) break;
    Matrix back = delta * weight(k).transpose();
    if (k > 0) {
      // tanh'(z) = 1 - tanh(z)^2, and the cached activation is tanh(z).
      back.array() *= 1.0 - in.array().square();
      delta = std::move(back);
    } else {
      *input_grad = std::move(back);
    }
  }
  return grad;
}

nlohmann::json Mlp::to_json() const {
  return {{"sizes", sizes_},
          {"params", std::vector<double>(params_.data(), params_.data() + params_.size())}};
}

Mlp Mlp::from_json(const nlohmann::json& doc) {
  Mlp net(doc.at("sizes").get<std::vector<int>>());
  const auto values = doc.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != net.param_count()) {
    throw ShapeError("MLP checkpoint parameter count does not match its sizes");
  }
  net.params_ = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return net;
}

Adam::Adam(Eigen::Index size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(Vector::Zero(size)), v_(Vector::Zero(size)) {}

void Adam::step(Vector& params, const Vector& grad) {
  if (grad.size() != m_.size() || params.size() != m_.size()) {
    throw ShapeError("Adam state does not match parameter size");
  }
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

void polyak_update(Mlp& target, const Mlp& source, double tau) {
  if (target.param_count() != source.param_count()) throw ShapeError("polyak update across different networks");
  if (tau == 1.0) {
    target.params() = source.params();
  } else if (tau != 0.0) {
    target.params() = tau * source.params() + (1.0 - tau) * target.params();
  }
}

}  // namespace faircf::nn
