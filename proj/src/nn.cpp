#include "pcqa/nn.hpp"

#include <cmath>
#include <random>

#include "pcqa/cloud.hpp"

namespace pcqa::nn {

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::LeakyRelu:
      return "leaky_relu";
    case Activation::Sigmoid:
      return "sigmoid";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "leaky_relu") return Activation::LeakyRelu;
  if (name == "sigmoid") return Activation::Sigmoid;
  throw Error("unknown activation '" + name + "'");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::Identity:
      return z;
    case Activation::Relu:
      return z.cwiseMax(0.0);
    case Activation::LeakyRelu:
      return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
    case Activation::Sigmoid:
      return z.unaryExpr([](double v) { return sigmoid(v); });
  }
  return z;
}

// d(out)/d(pre) evaluated elementwise, multiplied into the incoming gradient.
Eigen::MatrixXd activation_backward(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& post,
                                    const Eigen::MatrixXd& d_out, Activation a) {
  switch (a) {
    case Activation::Identity:
      return d_out;
    case Activation::Relu:
      return d_out.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
    case Activation::LeakyRelu:
      return d_out.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; }));
    case Activation::Sigmoid:
      return d_out.cwiseProduct(post.unaryExpr([](double s) { return s * (1.0 - s); }));
  }
  return d_out;
}

}  // namespace

void append_params(Eigen::MatrixXd& m, ParamSpans& out) {
  out.emplace_back(m.data(), static_cast<std::size_t>(m.size()));
}

void append_params(Eigen::VectorXd& v, ParamSpans& out) {
  out.emplace_back(v.data(), static_cast<std::size_t>(v.size()));
}

void append_params(Dense& layer, ParamSpans& out) {
  append_params(layer.w, out);
  append_params(layer.b, out);
}

std::size_t total_size(const ParamSpans& spans) {
  std::size_t n = 0;
  for (const auto& s : spans) n += s.size();
  return n;
}

Dense make_dense(Eigen::Index in, Eigen::Index out, Activation act, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  std::uniform_real_distribution<double> u(-a, a);
  Dense d;
  d.w.resize(out, in);
  // Fill row-major so the draw order matches the serialized layout.
  for (Eigen::Index r = 0; r < out; ++r) {
    for (Eigen::Index c = 0; c < in; ++c) d.w(r, c) = u(rng);
  }
  d.b = Eigen::VectorXd::Zero(out);
  d.act = act;
  return d;
}

Dense zeros_like(const Dense& d) {
  return Dense{Eigen::MatrixXd::Zero(d.w.rows(), d.w.cols()), Eigen::VectorXd::Zero(d.b.size()), d.act};
}

Mlp Mlp::make(const std::vector<int>& widths, const std::vector<Activation>& acts,
              std::uint64_t seed) {
  if (widths.size() < 2 || acts.size() != widths.size() - 1) {
    throw Error("mlp: need one activation per layer");
  }
  std::vector<Dense> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    layers.push_back(make_dense(widths[i], widths[i + 1], acts[i], seed + 0x9e37 * (i + 1)));
  }
  return Mlp(std::move(layers));
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape* tape) const {
  if (tape) {
    tape->inputs.clear();
    tape->pre.clear();
    tape->post.clear();
  }
  Eigen::MatrixXd h = x;
  for (const Dense& layer : layers_) {
    Eigen::MatrixXd z = layer.w * h;
    z.colwise() += layer.b;
    Eigen::MatrixXd a = activate(z, layer.act);
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->pre.push_back(std::move(z));
      tape->post.push_back(a);
    }
    h = std::move(a);
  }
  return h;
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& d_out, Mlp& grad) const {
  Eigen::MatrixXd d = d_out;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const Dense& layer = layers_[k];
    const Eigen::MatrixXd dz = activation_backward(tape.pre[k], tape.post[k], d, layer.act);
    grad.layers_[k].w.noalias() += dz * tape.inputs[k].transpose();
    grad.layers_[k].b += dz.rowwise().sum();
    d = layer.w.transpose() * dz;
  }
  return d;
}

Mlp Mlp::zeros_like() const {
  std::vector<Dense> z;
  z.reserve(layers_.size());
  for (const Dense& d : layers_) z.push_back(nn::zeros_like(d));
  return Mlp(std::move(z));
}

void Mlp::append_params(ParamSpans& out) {
  for (Dense& d : layers_) nn::append_params(d, out);
}

void Adam::step(const ParamSpans& params, const ParamSpans& grads, double lr) {
  const std::size_t n = total_size(params);
  if (total_size(grads) != n) throw Error("adam: parameter/gradient size mismatch");
  if (m_.size() != n) {
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
    t_ = 0;
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  std::size_t k = 0;
  for (std::size_t s = 0; s < params.size(); ++s) {
    for (std::size_t i = 0; i < params[s].size(); ++i, ++k) {
      const double g = grads[s][i];
      m_[k] = beta1_ * m_[k] + (1.0 - beta1_) * g;
      v_[k] = beta2_ * v_[k] + (1.0 - beta2_) * g * g;
      params[s][i] -= lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + eps_);
    }
  }
}

double step_decay(double base, double factor, int every, int epoch) {
  if (every <= 0) return base;
  return base * std::pow(factor, epoch / every);
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json data = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) throw Error("matrix json: size mismatch");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[static_cast<std::size_t>(r * cols + c)].get<double>();
  }
  return m;
}

nlohmann::json to_json(const Dense& d) {
  std::vector<double> bias(d.b.data(), d.b.data() + d.b.size());
  return {{"shape", {d.out(), d.in()}},
          {"activation", activation_name(d.act)},
          {"weights", matrix_to_json(d.w)["data"]},
          {"bias", bias}};
}

Dense dense_from_json(const nlohmann::json& j) {
  const auto out = j.at("shape").at(0).get<Eigen::Index>();
  const auto in = j.at("shape").at(1).get<Eigen::Index>();
  Dense d;
  d.w = matrix_from_json({{"rows", out}, {"cols", in}, {"data", j.at("weights")}});
  const auto bias = j.at("bias").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(bias.size()) != out) throw Error("dense json: bias size mismatch");
  d.b = Eigen::Map<const Eigen::VectorXd>(bias.data(), out);
  d.act = activation_from_name(j.at("activation").get<std::string>());
  return d;
}

nlohmann::json to_json(const Mlp& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (const Dense& d : m.layers()) layers.push_back(to_json(d));
  return layers;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  std::vector<Dense> layers;
  for (const auto& l : j) layers.push_back(dense_from_json(l));
  return Mlp(std::move(layers));
}

}  // namespace pcqa::nn
