#include "pcqa/ssvrn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "pcqa/seeding.hpp"

namespace pcqa {

namespace {

constexpr double kProbEps = 1e-12;

Eigen::MatrixXd standardized(const ScoreModel& m, std::span<const RankPair> pairs, bool side_a) {
  const Eigen::Index d = m.input_shift.size();
  Eigen::MatrixXd x(d, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Eigen::VectorXd& f = side_a ? pairs[k].a.values : pairs[k].b.values;
    if (f.size() != d) throw Error("feature dimension mismatch");
    x.col(static_cast<Eigen::Index>(k)) = (f - m.input_shift).cwiseProduct(m.input_scale);
  }
  return x;
}

}  // namespace

ScoreModel ScoreModel::initialize(std::uint64_t seed, int feature_dim) {
  using nn::Activation;
  ScoreModel m;
  m.seed = seed;
  m.input_shift = Eigen::VectorXd::Zero(feature_dim);
  m.input_scale = Eigen::VectorXd::Ones(feature_dim);
  m.mlp = nn::Mlp::make({feature_dim, 32, 16, 1}, {Activation::Relu, Activation::Relu, Activation::Sigmoid},
                        derive_seed(seed, "ssvrn.init"));
  return m;
}

ScoreModel ScoreModel::zeros(int feature_dim) {
  ScoreModel m = initialize(0, feature_dim);
  return m.zeros_like();
}

ScoreModel ScoreModel::zeros_like() const {
  ScoreModel z = *this;
  z.mlp = mlp.zeros_like();
  return z;
}

nn::ParamSpans ScoreModel::params() {
  nn::ParamSpans spans;
  mlp.append_params(spans);
  return spans;
}

double ScoreModel::score(const ImageFeatures& feats) const {
  if (feats.values.size() != input_shift.size()) throw Error("feature dimension mismatch");
  const Eigen::VectorXd x = (feats.values - input_shift).cwiseProduct(input_scale);
  return mlp.forward(x)(0, 0);
}

double rank_probability(double s_a, double s_b) { return nn::sigmoid(s_a - s_b); }

double pair_loss(double p_ab, double label) {
  const double p = std::clamp(p_ab, kProbEps, 1.0 - kProbEps);
  return -label * std::log(p) - (1.0 - label) * std::log(1.0 - p);
}

double pair_objective(const ScoreModel& model, std::span<const RankPair> pairs, ScoreModel* grad) {
  if (pairs.empty()) throw Error("pair objective needs at least one pair");
  const Eigen::MatrixXd xa = standardized(model, pairs, true);
  const Eigen::MatrixXd xb = standardized(model, pairs, false);
  nn::Mlp::Tape ta, tb;
  const Eigen::MatrixXd sa = model.mlp.forward(xa, grad ? &ta : nullptr);
  const Eigen::MatrixXd sb = model.mlp.forward(xb, grad ? &tb : nullptr);
  const double n = static_cast<double>(pairs.size());
  double loss = 0.0;
  Eigen::MatrixXd da(1, sa.cols()), db(1, sb.cols());
  for (Eigen::Index k = 0; k < sa.cols(); ++k) {
    const double p = rank_probability(sa(0, k), sb(0, k));
    const double y = pairs[static_cast<std::size_t>(k)].label;
    loss += pair_loss(p, y);
    // d loss / d (s_a - s_b) = P - label
    da(0, k) = (p - y) / n;
    db(0, k) = -(p - y) / n;
  }
  if (grad) {
    model.mlp.backward(ta, da, grad->mlp);
    model.mlp.backward(tb, db, grad->mlp);
  }
  return loss / n;
}

double ranking_accuracy(const ScoreModel& model, std::span<const RankPair> pairs) {
  if (pairs.empty()) throw Error("ranking accuracy needs at least one pair");
  const Eigen::MatrixXd sa = model.mlp.forward(standardized(model, pairs, true));
  const Eigen::MatrixXd sb = model.mlp.forward(standardized(model, pairs, false));
  std::size_t correct = 0;
  for (Eigen::Index k = 0; k < sa.cols(); ++k) {
    const bool a_better = sa(0, k) > sb(0, k);
    const bool b_better = sb(0, k) > sa(0, k);
    const double y = pairs[static_cast<std::size_t>(k)].label;
    if ((y == 1.0 && a_better) || (y == 0.0 && b_better)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

ScoreTraining train_ssvrn(std::span<const RankPair> pairs, const ScoreHyperparams& hp,
                          std::uint64_t seed) {
  if (pairs.size() < 2) throw Error("ssvrn training needs at least 2 pairs");
  if (!(hp.train_fraction > 0.0 && hp.train_fraction < 1.0)) {
    throw Error("train fraction must lie in (0, 1)");
  }
  if (hp.epochs < 1 || hp.batch_size < 1) throw Error("epochs and batch size must be positive");

  const std::size_t n = pairs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(derive_seed(seed, "ssvrn.split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(hp.train_fraction * static_cast<double>(n))), 1, n - 1);

  ScoreTraining out;
  out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.val_indices.begin(), out.val_indices.end());

  std::vector<RankPair> train, val;
  for (std::size_t i : out.train_indices) train.push_back(pairs[i]);
  for (std::size_t i : out.val_indices) val.push_back(pairs[i]);

  ScoreModel model = ScoreModel::initialize(seed, static_cast<int>(train.front().a.values.size()));
  model.hp = hp;

  // Standardize with statistics of every training image.
  const Eigen::Index d = model.input_shift.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d), sum2 = Eigen::VectorXd::Zero(d);
  for (const RankPair& p : train) {
    sum += p.a.values + p.b.values;
    sum2 += p.a.values.cwiseAbs2() + p.b.values.cwiseAbs2();
  }
  const double m = 2.0 * static_cast<double>(train.size());
  const Eigen::VectorXd mean = sum / m;
  const Eigen::VectorXd var = (sum2 / m - mean.cwiseAbs2()).cwiseMax(0.0);
  model.input_shift = mean;
  model.input_scale = var.unaryExpr([](double v) { return 1.0 / std::max(std::sqrt(v), 1e-6); });

  nn::Adam adam;
  std::mt19937_64 batch_rng(derive_seed(seed, "ssvrn.batches"));
  std::vector<std::size_t> batch_order(train.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  std::vector<RankPair> batch;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = nn::step_decay(hp.learning_rate, hp.decay, hp.decay_every, epoch);
    std::shuffle(batch_order.begin(), batch_order.end(), batch_rng);
    for (std::size_t start = 0; start < batch_order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(batch_order.size(), start + static_cast<std::size_t>(hp.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train[batch_order[k]]);
      ScoreModel grad = model.zeros_like();
      const double loss = pair_objective(model, batch, &grad);
      if (!std::isfinite(loss)) {
        std::ostringstream msg;
        msg << "ssvrn: non-finite loss at epoch " << epoch << ", batch starting at " << start;
        throw Error(msg.str());
      }
      adam.step(model.params(), grad.params(), lr);
    }
    EpochStats s;
    s.epoch = epoch;
    s.learning_rate = lr;
    s.train_loss = pair_objective(model, train, nullptr);
    s.val_loss = pair_objective(model, val, nullptr);
    s.train_accuracy = ranking_accuracy(model, train);
    s.val_accuracy = ranking_accuracy(model, val);
    if (!std::isfinite(s.train_loss)) throw Error("ssvrn: non-finite loss at epoch " + std::to_string(epoch));
    out.history.push_back(s);
  }
  out.model = std::move(model);
  return out;
}

nlohmann::json to_json(const ScoreModel& model) {
  std::vector<double> shift(model.input_shift.data(), model.input_shift.data() + model.input_shift.size());
  std::vector<double> scale(model.input_scale.data(), model.input_scale.data() + model.input_scale.size());
  return {{"type", "ssvrn_score_model"},
          {"seed", model.seed},
          {"hyperparameters",
           {{"learning_rate", model.hp.learning_rate},
            {"epochs", model.hp.epochs},
            {"decay_every", model.hp.decay_every},
            {"decay", model.hp.decay},
            {"batch_size", model.hp.batch_size},
            {"train_fraction", model.hp.train_fraction}}},
          {"input_shift", shift},
          {"input_scale", scale},
          {"layers", nn::to_json(model.mlp)}};
}

ScoreModel score_model_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "ssvrn_score_model") throw Error("not an ssvrn score model");
  ScoreModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& h = j.at("hyperparameters");
  m.hp.learning_rate = h.at("learning_rate").get<double>();
  m.hp.epochs = h.at("epochs").get<int>();
  m.hp.decay_every = h.at("decay_every").get<int>();
  m.hp.decay = h.at("decay").get<double>();
  m.hp.batch_size = h.at("batch_size").get<int>();
  m.hp.train_fraction = h.at("train_fraction").get<double>();
  const auto shift = j.at("input_shift").get<std::vector<double>>();
  const auto scale = j.at("input_scale").get<std::vector<double>>();
  m.input_shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(shift.size()));
  m.input_scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(scale.size()));
  m.mlp = nn::mlp_from_json(j.at("layers"));
  return m;
}

}  // namespace pcqa
