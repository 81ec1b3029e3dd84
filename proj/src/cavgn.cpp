#include "pcqa/cavgn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "pcqa/parallel.hpp"
#include "pcqa/seeding.hpp"

namespace pcqa {

using nn::Activation;

int stat_width(FeatureChannel channel) {
  return channel == FeatureChannel::Geometry ? kGeometryStats : kTextureStats;
}

std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, int k) {
  if (k < 1) throw Error("token count must be positive");
  if (static_cast<std::size_t>(k) > cloud.size()) {
    throw Error("token count " + std::to_string(k) + " exceeds point count " + std::to_string(cloud.size()));
  }
  std::vector<std::size_t> picked{0};
  std::vector<double> dist(cloud.size(), std::numeric_limits<double>::infinity());
  while (picked.size() < static_cast<std::size_t>(k)) {
    const Vec3& last = cloud.points[picked.back()];
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      dist[i] = std::min(dist[i], (cloud.points[i] - last).squaredNorm());
      if (dist[i] > best_d) {
        best_d = dist[i];
        best = i;
      }
    }
    picked.push_back(best);
  }
  return picked;
}

double stage_radius(const CloudSummary& summary, int stage) {
  return 0.02 * std::ldexp(1.0, stage - 1) * summary.diagonal;
}

namespace {

Eigen::VectorXd geometry_stats(const PointCloud& cloud, const std::vector<std::size_t>& nbrs, const Vec3& anchor,
                               double radius) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(kGeometryStats);
  if (nbrs.empty()) return s;
  const double n = static_cast<double>(nbrs.size());
  Vec3 mean = Vec3::Zero();
  for (std::size_t i : nbrs) mean += cloud.points[i] - anchor;
  mean /= n;
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i : nbrs) {
    const Vec3 d = cloud.points[i] - anchor - mean;
    cov.noalias() += d * d.transpose();
  }
  cov /= n;
  s[0] = std::log1p(n);
  s[1] = radius > 0.0 ? mean.norm() / radius : 0.0;
  const Eigen::Vector3d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(cov, Eigen::EigenvaluesOnly)
                                 .eigenvalues()
                                 .cwiseMax(0.0);
  const double total = ev.sum();
  if (total > 0.0) {
    s[2] = ev[2] / total;
    s[3] = ev[1] / total;
    s[4] = ev[0] / total;
  }
  return s;
}

double channel(const Rgb& c, int k) { return k == 0 ? c.r : k == 1 ? c.g : c.b; }

Eigen::VectorXd texture_stats(const PointCloud& cloud, const std::vector<std::size_t>& nbrs) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(kTextureStats);
  if (nbrs.empty()) return s;
  const double n = static_cast<double>(nbrs.size());
  for (int c = 0; c < 3; ++c) {
    const double x0 = channel(cloud.colors[nbrs.front()], c);
    double sum = 0.0;
    for (std::size_t i : nbrs) sum += channel(cloud.colors[i], c) - x0;
    const double shift = sum / n;
    double ss = 0.0;
    for (std::size_t i : nbrs) {
      const double d = channel(cloud.colors[i], c) - x0 - shift;
      ss += d * d;
    }
    s[c] = (x0 + shift) / 255.0;
    s[3 + c] = std::sqrt(ss / n) / 255.0;
  }
  return s;
}

}  // namespace

StageStats compute_stage_stats(const PointCloud& cloud, FeatureChannel channel, int tokens) {
  cloud.validate();
  StageStats out;
  out.channel = channel;
  out.tokens = farthest_point_sample(cloud, tokens);
  const CloudSummary summary = summarize(cloud);
  const int w = stat_width(channel);
  std::vector<std::size_t> nbrs;
  for (int stage = 1; stage <= kStageCount; ++stage) {
    const double r = stage_radius(summary, stage);
    Eigen::MatrixXd m(w, tokens);
    for (int t = 0; t < tokens; ++t) {
      const Vec3& anchor = cloud.points[out.tokens[t]];
      nbrs.clear();
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if ((cloud.points[i] - anchor).squaredNorm() <= r * r) nbrs.push_back(i);
      }
      m.col(t) = channel == FeatureChannel::Geometry ? geometry_stats(cloud, nbrs, anchor, r)
                                                     : texture_stats(cloud, nbrs);
    }
    out.stats[stage - 1] = std::move(m);
  }
  return out;
}

CloudFeatures compute_cloud_features(const PointCloud& cloud, int tokens) {
  return {compute_stage_stats(cloud, FeatureChannel::Geometry, tokens),
          compute_stage_stats(cloud, FeatureChannel::Texture, tokens)};
}

BranchParams BranchParams::make(FeatureChannel channel, std::uint64_t seed) {
  const int w = stat_width(channel);
  BranchParams p;
  p.stage2 = nn::Mlp::make({w, w}, {Activation::Identity}, derive_seed(seed, "stage2"));
  p.stage3 = nn::Mlp::make({w, w}, {Activation::Identity}, derive_seed(seed, "stage3"));
  p.embed = nn::Mlp::make({kViewEncoding, kEmbedWidth}, {Activation::Relu}, derive_seed(seed, "embed"));
  p.focus = nn::Mlp::make({6 * w + kEmbedWidth, kTokenWidth, kTokenWidth, kTokenWidth},
                          {Activation::LeakyRelu, Activation::LeakyRelu, Activation::LeakyRelu},
                          derive_seed(seed, "focus"));
  p.wq = nn::make_dense(kTokenWidth, kTokenWidth, Activation::Identity, derive_seed(seed, "wq")).w;
  p.wk = nn::make_dense(kTokenWidth, kTokenWidth, Activation::Identity, derive_seed(seed, "wk")).w;
  p.wv = nn::make_dense(kTokenWidth, kTokenWidth, Activation::Identity, derive_seed(seed, "wv")).w;
  return p;
}

BranchParams BranchParams::zeros_like() const {
  BranchParams z;
  z.stage2 = stage2.zeros_like();
  z.stage3 = stage3.zeros_like();
  z.embed = embed.zeros_like();
  z.focus = focus.zeros_like();
  z.wq = Eigen::MatrixXd::Zero(wq.rows(), wq.cols());
  z.wk = Eigen::MatrixXd::Zero(wk.rows(), wk.cols());
  z.wv = Eigen::MatrixXd::Zero(wv.rows(), wv.cols());
  return z;
}

void BranchParams::append_params(nn::ParamSpans& out) {
  stage2.append_params(out);
  stage3.append_params(out);
  embed.append_params(out);
  focus.append_params(out);
  nn::append_params(wq, out);
  nn::append_params(wk, out);
  nn::append_params(wv, out);
}

namespace {

struct ExpandTape {
  nn::Mlp::Tape t2, t3;
};

MultiScaleFeatures expand(const BranchParams& p, const StageStats& s, ExpandTape* tape) {
  const Eigen::MatrixXd& f1 = s.stats[0];
  const Eigen::MatrixXd f2 = s.stats[1] + p.stage2.forward(f1, tape ? &tape->t2 : nullptr);
  const Eigen::MatrixXd f3 = s.stats[2] + p.stage3.forward(f2, tape ? &tape->t3 : nullptr);
  const Eigen::Index w = f1.rows(), k = f1.cols();
  MultiScaleFeatures m;
  m.f_c.resize(3 * w, k);
  m.f_c << f1, f2, f3;
  m.f_p.resize(3 * w);
  m.argmax.resize(3 * w);
  for (Eigen::Index r = 0; r < 3 * w; ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index t = 1; t < k; ++t) {
      if (m.f_c(r, t) > m.f_c(r, best)) best = t;
    }
    m.f_p[r] = m.f_c(r, best);
    m.argmax[r] = best;
  }
  m.F.resize(6 * w, k);
  m.F << m.f_c, m.f_p.replicate(1, k);
  return m;
}

Eigen::MatrixXd attention_backward(const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                                   const AttentionTape& t, const Eigen::MatrixXd& dy, Eigen::MatrixXd& gwq,
                                   Eigen::MatrixXd& gwk, Eigen::MatrixXd& gwv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.rows()));
  Eigen::MatrixXd dh = dy;
  const Eigen::MatrixXd dv = dy * t.a;
  const Eigen::MatrixXd da = dy.transpose() * t.v;
  Eigen::MatrixXd ds = t.a.cwiseProduct(da);
  const Eigen::VectorXd row_dot = ds.rowwise().sum();
  ds -= t.a.cwiseProduct(row_dot.replicate(1, ds.cols()));
  ds *= scale;
  const Eigen::MatrixXd dq = t.k * ds.transpose();
  const Eigen::MatrixXd dk = t.q * ds;
  gwq.noalias() += dq * t.h.transpose();
  gwk.noalias() += dk * t.h.transpose();
  gwv.noalias() += dv * t.h.transpose();
  dh.noalias() += wq.transpose() * dq;
  dh.noalias() += wk.transpose() * dk;
  dh.noalias() += wv.transpose() * dv;
  return dh;
}

struct BranchTape {
  ExpandTape expand;
  MultiScaleFeatures ms;
  nn::Mlp::Tape embed, focus;
  AttentionTape attention;
};

Eigen::VectorXd branch_forward(const BranchParams& p, const StageStats& s, const ViewSetup& view, BranchTape* tape) {
  MultiScaleFeatures ms = expand(p, s, tape ? &tape->expand : nullptr);
  const Eigen::Index k = ms.F.cols();
  const Eigen::MatrixXd e = p.embed.forward(encode_view(view), tape ? &tape->embed : nullptr);
  Eigen::MatrixXd x(ms.F.rows() + e.rows(), k);
  x << ms.F, e.replicate(1, k);
  const Eigen::MatrixXd h = p.focus.forward(x, tape ? &tape->focus : nullptr);
  const Eigen::MatrixXd y = attention_forward(p.wq, p.wk, p.wv, h, tape ? &tape->attention : nullptr);
  if (tape) tape->ms = std::move(ms);
  return y.rowwise().mean();
}

void branch_backward(const BranchParams& p, const BranchTape& t, const Eigen::VectorXd& dg, BranchParams& grad) {
  const Eigen::Index k = t.ms.F.cols();
  const Eigen::MatrixXd dy = dg.replicate(1, k) / static_cast<double>(k);
  const Eigen::MatrixXd dh = attention_backward(p.wq, p.wk, p.wv, t.attention, dy, grad.wq, grad.wk, grad.wv);
  const Eigen::MatrixXd dx = p.focus.backward(t.focus, dh, grad.focus);
  const Eigen::Index fw = t.ms.F.rows();
  p.embed.backward(t.embed, dx.bottomRows(dx.rows() - fw).rowwise().sum(), grad.embed);
  const Eigen::Index cw = t.ms.f_c.rows();
  Eigen::MatrixXd dfc = dx.topRows(cw);
  const Eigen::VectorXd dfp = dx.middleRows(cw, cw).rowwise().sum();
  for (Eigen::Index r = 0; r < cw; ++r) dfc(r, t.ms.argmax[r]) += dfp[r];
  const Eigen::Index w = cw / 3;
  Eigen::MatrixXd df2 = dfc.middleRows(w, w);
  df2 += p.stage3.backward(t.expand.t3, dfc.bottomRows(w), grad.stage3);
  p.stage2.backward(t.expand.t2, df2, grad.stage2);
}

}  // namespace

MultiScaleFeatures expand_features(const BranchParams& p, const StageStats& s) { return expand(p, s, nullptr); }

Eigen::MatrixXd attention_forward(const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                                  const Eigen::MatrixXd& h, AttentionTape* tape) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.rows()));
  const Eigen::MatrixXd q = wq * h, k = wk * h, v = wv * h;
  Eigen::MatrixXd a = (q.transpose() * k) * scale;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    a.row(i) = (a.row(i).array() - m).exp();
    a.row(i) /= a.row(i).sum();
  }
  Eigen::MatrixXd y = h + v * a.transpose();
  if (tape) *tape = {h, q, k, v, a};
  return y;
}

Eigen::VectorXd encode_view(const ViewSetup& view) {
  const double h = view.region_half_extent > 0.0 ? view.region_half_extent : 1.0;
  const Vec3 off = view.viewpoint - view.center;
  Eigen::VectorXd e(kViewEncoding);
  e << view.direction, off.dot(view.frame_u) / h, off.dot(view.frame_v) / h, view.face_index / 5.0;
  return e;
}

CavgnModel CavgnModel::initialize(std::uint64_t seed, const CavgnHyperparams& hp) {
  CavgnModel m;
  m.seed = seed;
  m.hp = hp;
  m.geometry = BranchParams::make(FeatureChannel::Geometry, derive_seed(seed, "cavgn.geometry"));
  m.texture = BranchParams::make(FeatureChannel::Texture, derive_seed(seed, "cavgn.texture"));
  m.head = nn::Mlp::make({kFusedWidth, 32, 32, 16, 2},
                         {Activation::Relu, Activation::Relu, Activation::Relu, Activation::Identity},
                         derive_seed(seed, "cavgn.head"));
  nn::Dense& last = m.head.layers().back();
  last.w.setZero();
  last.b.setZero();
  return m;
}

CavgnModel CavgnModel::zeros_like() const {
  CavgnModel z = *this;
  z.geometry = geometry.zeros_like();
  z.texture = texture.zeros_like();
  z.head = head.zeros_like();
  return z;
}

nn::ParamSpans CavgnModel::params() {
  nn::ParamSpans spans;
  geometry.append_params(spans);
  texture.append_params(spans);
  head.append_params(spans);
  return spans;
}

Eigen::VectorXd constrain(const CavgnModel& model, const CloudFeatures& feats, const ViewSetup& view) {
  if (feats.geometry.token_count() != feats.texture.token_count()) throw Error("branch token counts differ");
  Eigen::VectorXd fused(kFusedWidth);
  fused << branch_forward(model.geometry, feats.geometry, view, nullptr),
      branch_forward(model.texture, feats.texture, view, nullptr);
  return fused;
}

Vec3 place_on_region(const ViewSetup& view, double u, double v) {
  const double h = view.region_half_extent;
  return lift(view, std::clamp(u, -h, h), std::clamp(v, -h, h));
}

Vec3 generate_viewpoint(const CavgnModel& model, const Eigen::VectorXd& fused, const ViewSetup& view) {
  const Eigen::MatrixXd raw = model.head.forward(fused);
  const double h = view.region_half_extent;
  return place_on_region(view, h * raw(0, 0), h * raw(1, 0));
}

Vec3 predict_viewpoint(const CavgnModel& model, const CloudFeatures& feats, const ViewSetup& view) {
  return generate_viewpoint(model, constrain(model, feats, view), view);
}

double angle_loss(const Vec3& v_o, const Vec3& v_hat, const Vec3& c) {
  const Vec3 a = v_o - c, b = v_hat - c;
  const double na = a.norm(), nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw Error("angle loss of a zero-length direction");
  return 1.0 - a.dot(b) / (na * nb);
}

double cavgn_objective(const CavgnModel& model, std::span<const CavgnSample> samples, CavgnModel* grad) {
  if (samples.empty()) throw Error("cavgn objective needs at least one sample");
  const double n = static_cast<double>(samples.size());
  double total = 0.0;
  for (const CavgnSample& s : samples) {
    BranchTape tg, tt;
    Eigen::VectorXd fused(kFusedWidth);
    fused << branch_forward(model.geometry, s.features->geometry, s.view, grad ? &tg : nullptr),
        branch_forward(model.texture, s.features->texture, s.view, grad ? &tt : nullptr);
    nn::Mlp::Tape th;
    const Eigen::MatrixXd raw = model.head.forward(fused, grad ? &th : nullptr);
    const double h = s.view.region_half_extent;
    const double u = h * raw(0, 0), v = h * raw(1, 0);
    const Vec3 v_hat = place_on_region(s.view, u, v);
    const double loss = angle_loss(s.target, v_hat, s.view.center);
    total += loss;
    if (!grad) continue;

    const Vec3 a = s.target - s.view.center, b = v_hat - s.view.center;
    const double na = a.norm(), nb = b.norm();
    const Vec3 d_b = -(a / (na * nb) - a.dot(b) * b / (na * nb * nb * nb)) / n;
    Eigen::MatrixXd d_raw(2, 1);
    d_raw(0, 0) = std::abs(u) > h ? 0.0 : h * d_b.dot(s.view.frame_u);
    d_raw(1, 0) = std::abs(v) > h ? 0.0 : h * d_b.dot(s.view.frame_v);
    const Eigen::MatrixXd d_fused = model.head.backward(th, d_raw, grad->head);
    branch_backward(model.geometry, tg, d_fused.topRows(kTokenWidth), grad->geometry);
    branch_backward(model.texture, tt, d_fused.bottomRows(kTokenWidth), grad->texture);
  }
  return total / n;
}

void CloudStore::add(const std::string& name, PointCloud cloud) { clouds_.insert_or_assign(name, std::move(cloud)); }

const PointCloud& CloudStore::get(const std::string& name) {
  auto it = clouds_.find(name);
  if (it != clouds_.end()) return it->second;
  if (dir_.empty()) throw Error("cloud '" + name + "' is not in the store");
  return clouds_.emplace(name, load_ply(dir_ / name)).first->second;
}

std::map<std::string, CloudFeatures> record_features(const std::vector<DovRecord>& records, CloudStore& store,
                                                     int tokens, unsigned threads) {
  std::vector<std::string> names;
  for (const DovRecord& r : records) names.push_back(r.cloud_file);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<const PointCloud*> clouds;
  for (const std::string& name : names) clouds.push_back(&store.get(name));
  std::vector<CloudFeatures> feats(names.size());
  parallel_for(names.size(), threads, [&](std::size_t i) { feats[i] = compute_cloud_features(*clouds[i], tokens); });
  std::map<std::string, CloudFeatures> out;
  for (std::size_t i = 0; i < names.size(); ++i) out.emplace(names[i], std::move(feats[i]));
  return out;
}

std::vector<CavgnSample> make_samples(const std::vector<DovRecord>& records,
                                      const std::map<std::string, CloudFeatures>& features) {
  std::vector<CavgnSample> samples;
  samples.reserve(records.size());
  for (const DovRecord& r : records) {
    auto it = features.find(r.cloud_file);
    if (it == features.end()) throw Error("no features for cloud '" + r.cloud_file + "'");
    samples.push_back({&it->second, r.view, r.optimized_viewpoint,
                       r.cloud_file + " rig " + std::to_string(r.rig) + " face " + std::to_string(r.face_index)});
  }
  return samples;
}

CavgnTraining train_cavgn(std::span<const CavgnSample> samples, const CavgnHyperparams& hp, std::uint64_t seed) {
  if (samples.size() < 2) throw Error("cavgn training needs at least 2 records");
  if (!(hp.train_fraction > 0.0 && hp.train_fraction < 1.0)) throw Error("train fraction must lie in (0, 1)");
  if (hp.epochs < 1 || hp.batch_size < 1) throw Error("epochs and batch size must be positive");

  const std::size_t n = samples.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 split_rng(derive_seed(seed, "cavgn.split"));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_train = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(hp.train_fraction * static_cast<double>(n))), 1, n - 1);

  CavgnTraining out;
  out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(out.train_indices.begin(), out.train_indices.end());
  std::sort(out.val_indices.begin(), out.val_indices.end());
  std::vector<CavgnSample> train, val;
  for (std::size_t i : out.train_indices) train.push_back(samples[i]);
  for (std::size_t i : out.val_indices) val.push_back(samples[i]);

  CavgnModel model = CavgnModel::initialize(seed, hp);
  out.untrained_val_loss = cavgn_objective(model, val, nullptr);

  nn::Adam adam;
  std::mt19937_64 batch_rng(derive_seed(seed, "cavgn.batches"));
  std::vector<std::size_t> batch_order(train.size());
  std::iota(batch_order.begin(), batch_order.end(), std::size_t{0});
  std::vector<CavgnSample> batch;
  for (int epoch = 0; epoch < hp.epochs; ++epoch) {
    const double lr = nn::step_decay(hp.learning_rate, hp.decay, hp.decay_every, epoch);
    std::shuffle(batch_order.begin(), batch_order.end(), batch_rng);
    for (std::size_t start = 0; start < batch_order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
      const std::size_t stop = std::min(batch_order.size(), start + static_cast<std::size_t>(hp.batch_size));
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) batch.push_back(train[batch_order[k]]);
      CavgnModel grad = model.zeros_like();
      const double loss = cavgn_objective(model, batch, &grad);
      if (!std::isfinite(loss)) {
        throw Error("cavgn: non-finite loss at epoch " + std::to_string(epoch) + " on record " + batch.front().id);
      }
      adam.step(model.params(), grad.params(), lr);
    }
    CavgnEpochStats s;
    s.epoch = epoch;
    s.learning_rate = lr;
    s.train_loss = cavgn_objective(model, train, nullptr);
    s.val_loss = cavgn_objective(model, val, nullptr);
    out.history.push_back(s);
  }
  out.model = std::move(model);
  return out;
}

namespace {

nlohmann::json branch_to_json(const BranchParams& p) {
  return {{"stage2", nn::to_json(p.stage2)}, {"stage3", nn::to_json(p.stage3)},
          {"embed", nn::to_json(p.embed)},   {"focus", nn::to_json(p.focus)},
          {"wq", nn::matrix_to_json(p.wq)},  {"wk", nn::matrix_to_json(p.wk)},
          {"wv", nn::matrix_to_json(p.wv)}};
}

BranchParams branch_from_json(const nlohmann::json& j) {
  BranchParams p;
  p.stage2 = nn::mlp_from_json(j.at("stage2"));
  p.stage3 = nn::mlp_from_json(j.at("stage3"));
  p.embed = nn::mlp_from_json(j.at("embed"));
  p.focus = nn::mlp_from_json(j.at("focus"));
  p.wq = nn::matrix_from_json(j.at("wq"));
  p.wk = nn::matrix_from_json(j.at("wk"));
  p.wv = nn::matrix_from_json(j.at("wv"));
  return p;
}

}  // namespace

nlohmann::json to_json(const CavgnModel& m) {
  return {{"type", "cavgn_model"},
          {"seed", m.seed},
          {"hyperparameters",
           {{"learning_rate", m.hp.learning_rate},
            {"epochs", m.hp.epochs},
            {"decay_every", m.hp.decay_every},
            {"decay", m.hp.decay},
            {"batch_size", m.hp.batch_size},
            {"train_fraction", m.hp.train_fraction},
            {"tokens", m.hp.tokens},
            {"pooling", "max"}}},
          {"geometry", branch_to_json(m.geometry)},
          {"texture", branch_to_json(m.texture)},
          {"head", nn::to_json(m.head)}};
}

CavgnModel cavgn_model_from_json(const nlohmann::json& j) {
  if (j.value("type", "") != "cavgn_model") throw Error("not a cavgn model");
  CavgnModel m;
  m.seed = j.at("seed").get<std::uint64_t>();
  const auto& h = j.at("hyperparameters");
  m.hp.learning_rate = h.at("learning_rate").get<double>();
  m.hp.epochs = h.at("epochs").get<int>();
  m.hp.decay_every = h.at("decay_every").get<int>();
  m.hp.decay = h.at("decay").get<double>();
  m.hp.batch_size = h.at("batch_size").get<int>();
  m.hp.train_fraction = h.at("train_fraction").get<double>();
  m.hp.tokens = h.at("tokens").get<int>();
  m.geometry = branch_from_json(j.at("geometry"));
  m.texture = branch_from_json(j.at("texture"));
  m.head = nn::mlp_from_json(j.at("head"));
  return m;
}

}  // namespace pcqa
