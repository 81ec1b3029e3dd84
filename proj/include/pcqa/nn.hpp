#pragma once

// Small dense-network toolkit with hand-written backpropagation. Samples are
// matrix columns.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"

namespace pcqa::nn {

enum class Activation { Identity, Relu, LeakyRelu, Sigmoid };

constexpr double kLeakySlope = 0.01;

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

double sigmoid(double x);

struct Dense {
  Eigen::MatrixXd w;  ///< out x in
  Eigen::VectorXd b;
  Activation act = Activation::Identity;

  Eigen::Index in() const { return w.cols(); }
  Eigen::Index out() const { return w.rows(); }
};

/// Flat list of parameter tensors, in a fixed order.
using ParamSpans = std::vector<std::span<double>>;

void append_params(Dense& layer, ParamSpans& out);
void append_params(Eigen::MatrixXd& m, ParamSpans& out);
void append_params(Eigen::VectorXd& v, ParamSpans& out);
std::size_t total_size(const ParamSpans& spans);

/// Uniform(-a, a) with a = sqrt(6 / (in + out)) for weights, zero biases.
Dense make_dense(Eigen::Index in, Eigen::Index out, Activation act, std::uint64_t seed);
Dense zeros_like(const Dense& d);

class Mlp {
 public:
  struct Tape {
    std::vector<Eigen::MatrixXd> inputs;  ///< input of each layer
    std::vector<Eigen::MatrixXd> pre;     ///< pre-activation of each layer
    std::vector<Eigen::MatrixXd> post;    ///< output of each layer
  };

  Mlp() = default;
  explicit Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {}

  /// widths = {in, h1, ..., out}; one activation per layer.
  static Mlp make(const std::vector<int>& widths, const std::vector<Activation>& acts,
                  std::uint64_t seed);

  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape* tape = nullptr) const;

  /// Accumulates parameter gradients into `grad` (same shapes) and returns
  /// the gradient with respect to the input.
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& d_out, Mlp& grad) const;

  Mlp zeros_like() const;
  void append_params(ParamSpans& out);

  std::vector<Dense>& layers() { return layers_; }
  const std::vector<Dense>& layers() const { return layers_; }

 private:
  std::vector<Dense> layers_;
};

/// Adam over a flat parameter list.
class Adam {
 public:
  explicit Adam(double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const ParamSpans& params, const ParamSpans& grads, double lr);

 private:
  double beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// Step decay: base * factor^(floor(epoch / every)).
double step_decay(double base, double factor, int every, int epoch);

nlohmann::json to_json(const Dense& d);
Dense dense_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Mlp& m);
Mlp mlp_from_json(const nlohmann::json& j);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);  ///< {rows, cols, data row-major}
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);

}  // namespace pcqa::nn
