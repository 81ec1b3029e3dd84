#include <cmath>
#include <numeric>
#include <random>

#include "cavgn_fixtures.hpp"
#include "doctest.h"
#include "gradcheck.hpp"
#include "pcqa/cavgn.hpp"
#include "pcqa/synthetic.hpp"

using namespace pcqa;
using pcqa::testing::offset_dataset;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> byte(0, 255);
  PointCloud c;
  c.id = "rand";
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.colors.push_back({static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                        static_cast<std::uint8_t>(byte(rng))});
  }
  return c;
}

void randomize_head(CavgnModel& m, std::uint64_t seed) {
  nn::Dense& last = m.head.layers().back();
  last = nn::make_dense(last.in(), last.out(), last.act, seed);
  last.w *= 0.5;
}

}  // namespace

TEST_CASE("farthest point sampling") {
  const PointCloud c = random_cloud(200, 1);
  const auto idx = farthest_point_sample(c, 20);
  REQUIRE(idx.size() == 20);
  CHECK(idx[0] == 0);
  // Oracle: each pick maximizes the distance to the picks before it.
  for (std::size_t k = 1; k < idx.size(); ++k) {
    auto dist_to_set = [&](std::size_t i) {
      double d = 1e300;
      for (std::size_t j = 0; j < k; ++j) d = std::min(d, (c.points[i] - c.points[idx[j]]).squaredNorm());
      return d;
    };
    const double chosen = dist_to_set(idx[k]);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(dist_to_set(i) <= chosen);
  }
  CHECK_THROWS_AS(farthest_point_sample(c, 201), Error);
  CHECK_THROWS_AS(farthest_point_sample(c, 0), Error);
  CHECK(farthest_point_sample(c, 20) == idx);
}

TEST_CASE("a single token collapses pooling") {
  const PointCloud c = random_cloud(50, 2);
  const CavgnModel m = CavgnModel::initialize(1);
  for (FeatureChannel ch : {FeatureChannel::Geometry, FeatureChannel::Texture}) {
    const StageStats s = compute_stage_stats(c, ch, 1);
    const MultiScaleFeatures f = expand_features(ch == FeatureChannel::Geometry ? m.geometry : m.texture, s);
    CHECK(f.f_p == f.f_c.col(0));
    CHECK(f.F.rows() == 2 * f.f_c.rows());
    CHECK(f.F.topRows(f.f_c.rows()) == f.f_c);
    CHECK(f.F.bottomRows(f.f_c.rows()) == f.f_c);
  }
}

TEST_CASE("uniform colors give zero texture spread at every stage") {
  PointCloud c = random_cloud(300, 3);
  for (Rgb& col : c.colors) col = {17, 200, 99};
  const StageStats s = compute_stage_stats(c, FeatureChannel::Texture, 16);
  for (const Eigen::MatrixXd& m : s.stats) {
    CHECK(m.bottomRows(3).isZero(0.0));
    CHECK((m.row(0).array() == 17.0 / 255.0).all());
  }
}

TEST_CASE("geometry statistics of a flat patch") {
  PointCloud c;
  c.id = "flat";
  for (int i = 0; i < 40; ++i) {
    for (int j = 0; j < 40; ++j) {
      c.points.emplace_back(i / 39.0, j / 39.0, 0.0);
      c.colors.push_back({1, 2, 3});
    }
  }
  const StageStats s = compute_stage_stats(c, FeatureChannel::Geometry, 8);
  for (const Eigen::MatrixXd& m : s.stats) {
    for (Eigen::Index t = 0; t < m.cols(); ++t) {
      CHECK(m(0, t) >= std::log1p(1.0));
      CHECK(m(1, t) >= 0.0);
      CHECK(m(1, t) <= 1.0);
      CHECK(std::abs(m(4, t)) <= 1e-12);
      CHECK(m(2, t) + m(3, t) + m(4, t) == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("max pooling matches an independent recomputation") {
  const PointCloud c = random_cloud(500, 4);
  const CavgnModel m = CavgnModel::initialize(6);
  const StageStats s = compute_stage_stats(c, FeatureChannel::Geometry, 32);
  const MultiScaleFeatures f = expand_features(m.geometry, s);
  const auto& l2 = m.geometry.stage2.layers()[0];
  const auto& l3 = m.geometry.stage3.layers()[0];
  const int w = kGeometryStats;
  for (int t = 0; t < 32; ++t) {
    Eigen::VectorXd f1 = s.stats[0].col(t);
    Eigen::VectorXd f2 = s.stats[1].col(t) + l2.w * f1 + l2.b;
    Eigen::VectorXd f3 = s.stats[2].col(t) + l3.w * f2 + l3.b;
    for (int r = 0; r < w; ++r) {
      CHECK(std::abs(f.f_c(r, t) - f1[r]) <= 1e-12);
      CHECK(std::abs(f.f_c(w + r, t) - f2[r]) <= 1e-12);
      CHECK(std::abs(f.f_c(2 * w + r, t) - f3[r]) <= 1e-12);
    }
  }
  for (Eigen::Index r = 0; r < f.f_c.rows(); ++r) {
    double best = -1e300;
    for (Eigen::Index t = 0; t < f.f_c.cols(); ++t) best = std::max(best, f.f_c(r, t));
    CHECK(f.f_p[r] == best);
    for (Eigen::Index t = 0; t < f.F.cols(); ++t) CHECK(f.F(f.f_c.rows() + r, t) == best);
  }
}

TEST_CASE("attention on a three-token toy") {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(kTokenWidth, 3);
  h(0, 0) = 1.0;
  h(1, 1) = 2.0;
  h(0, 2) = 1.0;
  h(1, 2) = 1.0;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(kTokenWidth, kTokenWidth);
  AttentionTape tape;
  const Eigen::MatrixXd y = attention_forward(eye, eye, eye, h, &tape);
  // Hand-computed logits: dot products of the token columns over sqrt(32).
  const double g[3][3] = {{1, 0, 1}, {0, 4, 2}, {1, 2, 2}};
  for (int i = 0; i < 3; ++i) {
    double z = 0.0;
    for (int j = 0; j < 3; ++j) z += std::exp(g[i][j] / std::sqrt(32.0));
    double row = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double want = std::exp(g[i][j] / std::sqrt(32.0)) / z;
      CHECK(tape.a(i, j) == doctest::Approx(want).epsilon(1e-14));
      row += tape.a(i, j);
    }
    CHECK(row == doctest::Approx(1.0).epsilon(1e-15));
    const Eigen::VectorXd mix = tape.a(i, 0) * h.col(0) + tape.a(i, 1) * h.col(1) + tape.a(i, 2) * h.col(2);
    CHECK((y.col(i) - (h.col(i) + mix)).norm() <= 1e-14);
  }
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(kTokenWidth, kTokenWidth);
  CHECK(attention_forward(eye, eye, zero, h) == h);
}

TEST_CASE("fused features are invariant to token order") {
  const PointCloud c = random_cloud(300, 5);
  const CloudFeatures f = compute_cloud_features(c, 12);
  CloudFeatures shuffled = f;
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(7);
  std::shuffle(perm.begin(), perm.end(), rng);
  for (StageStats* s : {&shuffled.geometry, &shuffled.texture}) {
    const StageStats orig = *s;
    for (int t = 0; t < 12; ++t) {
      s->tokens[t] = orig.tokens[perm[t]];
      for (int k = 0; k < kStageCount; ++k) s->stats[k].col(t) = orig.stats[k].col(perm[t]);
    }
  }
  const CavgnModel m = CavgnModel::initialize(8);
  const ViewSetup view = default_viewpoints(summarize(c), 1.25)[2];
  CHECK((constrain(m, f, view) - constrain(m, shuffled, view)).norm() <= 1e-12);
}

TEST_CASE("untrained head returns the default viewpoint, clamping keeps the region") {
  const PointCloud c = random_cloud(200, 9);
  const CloudFeatures f = compute_cloud_features(c, 8);
  CavgnModel m = CavgnModel::initialize(3);
  for (const ViewSetup& view : default_viewpoints(summarize(c), 1.25)) {
    CHECK(predict_viewpoint(m, f, view) == view.viewpoint);
    const double h = view.region_half_extent;
    CHECK((place_on_region(view, h + 5.0, 0.0) - lift(view, h, 0.0)).norm() == 0.0);
    CHECK((place_on_region(view, 0.0, -h - 1.0) - lift(view, 0.0, -h)).norm() == 0.0);
  }
  m.head.layers().back().b << 10.0, -10.0;
  const ViewSetup view = default_viewpoints(summarize(c), 1.25)[0];
  const double h = view.region_half_extent;
  CHECK((predict_viewpoint(m, f, view) - lift(view, h, -h)).norm() == 0.0);
}

TEST_CASE("generated viewpoints always lie on the region plane") {
  std::mt19937_64 rng(10);
  const PointCloud c = make_synthetic_cloud(5, 400, 1);
  const CloudFeatures f = compute_cloud_features(c, 8);
  const auto base = default_viewpoints(summarize(c), 1.25);
  for (int trial = 0; trial < 300; ++trial) {
    CavgnModel m = CavgnModel::initialize(trial);
    randomize_head(m, 1000 + trial);
    m.head.layers().back().w *= 20.0;
    const auto rig = rotate_rig(base, random_rotation(trial));
    const ViewSetup& view = rig[trial % 6];
    const Vec3 v = predict_viewpoint(m, f, view);
    CHECK(std::abs((v - view.viewpoint).dot(view.direction)) <= 1e-9 * view.region_half_extent);
    const auto [u, w] = plane_coords(view, v);
    CHECK(std::abs(u) <= view.region_half_extent * (1 + 1e-12));
    CHECK(std::abs(w) <= view.region_half_extent * (1 + 1e-12));
  }
}

TEST_CASE("angle loss") {
  const Vec3 c(1, 2, 3);
  const Vec3 a = c + Vec3(1, 0, 0);
  CHECK(angle_loss(a, a, c) == 0.0);
  CHECK(angle_loss(a, c - Vec3(3, 0, 0), c) == doctest::Approx(2.0));
  CHECK(angle_loss(a, c + Vec3(0, 0, 5), c) == doctest::Approx(1.0));
  CHECK_THROWS_AS(angle_loss(c, a, c), Error);
  CHECK_THROWS_AS(angle_loss(a, c, c), Error);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> s(0.1, 10);
  for (int i = 0; i < 200; ++i) {
    const Vec3 x(n(rng), n(rng), n(rng)), y(n(rng), n(rng), n(rng));
    const double l = angle_loss(c + x, c + y, c);
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
    CHECK(angle_loss(c + s(rng) * x, c + s(rng) * y, c) == doctest::Approx(l).epsilon(1e-12));
  }
}

TEST_CASE("objective gradient matches finite differences on a two-record toy set") {
  auto data = offset_dataset(1, 300, 6, 0.3, -0.2, 3);
  std::vector<CavgnSample> toy{data.samples[0], data.samples[3]};
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    CavgnModel m = CavgnModel::initialize(seed);
    randomize_head(m, 50 + seed);
    CavgnModel grad = m.zeros_like();
    cavgn_objective(m, toy, &grad);
    const auto r = pcqa::testing::check_gradient(m.params(), grad.params(),
                                                 [&] { return cavgn_objective(m, toy, nullptr); }, 80, rng);
    CAPTURE(r.worst_relative);
    CHECK(r.failures == 0);
  }
}

TEST_CASE("a fixed-point dataset stays at zero loss") {
  auto data = offset_dataset(2, 300, 8, 0.0, 0.0, 4);
  CavgnHyperparams hp;
  hp.epochs = 3;
  hp.tokens = 8;
  const CavgnTraining t = train_cavgn(data.samples, hp, 1);
  CHECK(t.untrained_val_loss == 0.0);
  for (const auto& e : t.history) {
    CHECK(e.train_loss <= 1e-12);
    CHECK(e.val_loss <= 1e-12);
  }
}

TEST_CASE("a constant in-plane offset is learned") {
  auto data = offset_dataset(4, 400, 16, 1.0 / 3.0, 0.0, 5);
  CavgnHyperparams hp;
  hp.learning_rate = 1e-3;
  hp.decay = 0.9;
  hp.decay_every = 5;
  hp.epochs = 15;
  hp.tokens = 16;
  const CavgnTraining t = train_cavgn(data.samples, hp, 2);
  CAPTURE(t.untrained_val_loss);
  CAPTURE(t.history.back().val_loss);
  CHECK(t.untrained_val_loss == doctest::Approx(1.0 - 3.0 / std::sqrt(10.0)));
  CHECK(t.history.back().val_loss <= 0.5 * t.untrained_val_loss);
}

TEST_CASE("training is deterministic and serializes losslessly") {
  auto data = offset_dataset(2, 300, 8, 0.2, 0.1, 6);
  CavgnHyperparams hp;
  hp.learning_rate = 1e-3;
  hp.epochs = 2;
  hp.tokens = 8;
  const auto a = train_cavgn(data.samples, hp, 9);
  const auto b = train_cavgn(data.samples, hp, 9);
  const std::string text = to_json(a.model).dump();
  CHECK(text == to_json(b.model).dump());
  const CavgnModel back = cavgn_model_from_json(nlohmann::json::parse(text));
  CHECK(to_json(back).dump() == text);
  const auto& s = data.samples[1];
  CHECK(predict_viewpoint(back, *s.features, s.view) == predict_viewpoint(a.model, *s.features, s.view));
  CHECK_THROWS_AS(cavgn_model_from_json(nlohmann::json{{"type", "ssvrn_score_model"}}), Error);
  CHECK_THROWS_AS(train_cavgn(std::span(data.samples).first(1), hp, 0), Error);
}

TEST_CASE("record features come from the cloud store") {
  const PointCloud c = make_synthetic_cloud(2, 300, 7);
  CloudStore store;
  store.add("x.ply", c);
  DovRecord r;
  r.cloud_file = "x.ply";
  r.view = default_viewpoints(summarize(c), 1.25)[1];
  r.optimized_viewpoint = lift(r.view, 0.1, 0.0);
  const auto feats = record_features({r, r}, store, 8);
  CHECK(feats.size() == 1);
  const auto samples = make_samples({r}, feats);
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].features == &feats.at("x.ply"));
  CHECK_THROWS_AS(store.get("missing.ply"), Error);
}
