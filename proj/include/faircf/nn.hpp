#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "json.hpp"

namespace faircf::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Dense network with tanh hidden layers and a linear output layer. Samples
// are rows: input is (batch x in), output is (batch x out).
//
// All weights and biases live in one flat parameter vector so optimizers,
// polyak averaging, checkpoints and finite-difference checks can treat a
// network as a point in R^P. Layer k stores W_k (in x out, column-major)
// followed by b_k (out).
class Mlp {
 public:
  struct Cache {
    // activations[0] is the input; activations[k] the output of layer k.
    std::vector<Matrix> activations;
  };

  Mlp() = default;
  explicit Mlp(std::vector<int> layer_sizes);

  // PyTorch-style uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  void init(std::mt19937_64& rng);
  void init_uniform(std::mt19937_64& rng, double bound);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  const std::vector<int>& sizes() const { return sizes_; }

  Vector& params() { return params_; }
  const Vector& params() const { return params_; }
  Eigen::Index param_count() const { return params_.size(); }

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, Cache& cache) const;

  // Backpropagates `upstream` = dL/d(output). Returns dL/d(params); writes
  // dL/d(input) when `input_grad` is non-null.
  Vector backward(const Cache& cache, const Matrix& upstream, Matrix* input_grad = nullptr) const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& doc);

 private:
  Eigen::Map<const Matrix> weight(int layer) const;
  Eigen::Map<const Vector> bias(int layer) const;
  void check_input(const Matrix& input) const;

  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Vector params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(Vector& params, const Vector& grad);
  double lr() const { return lr_; }

 private:
  double lr_ = 1e-3;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long t_ = 0;
  Vector m_;
  Vector v_;
};

// target <- tau * source + (1 - tau) * target
void polyak_update(Mlp& target, const Mlp& source, double tau);

}  // namespace faircf::nn
