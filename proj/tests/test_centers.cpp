/*
 * Copyright 2026 The partdet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <doctest.h>

#include <cmath>

#include "partdet/centers.hpp"
#include "partdet/error.hpp"
#include "partdet/random.hpp"

using namespace partdet;

namespace {

GradientMap blank(std::size_t h, std::size_t w) {
  GradientMap m;
  m.height = h;
  m.width = w;
  m.values.assign(h * w, 0.0);
  return m;
}

void add_blob(GradientMap& m, double cx, double cy, double mass, double sigma) {
  double total = 0.0;
  std::vector<double> g(m.values.size());
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      total += g[y * m.width + x] = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
    }
  for (std::size_t i = 0; i < g.size(); ++i) m.values[i] += mass * g[i] / total;
}

struct WeightedPoints {
  std::vector<Point2> points;
  std::vector<double> weights;
};

WeightedPoints random_points(Rng& rng, std::size_t n) {
  WeightedPoints wp;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cluster = rng.uniform() < 0.5 ? 10.0 : 30.0;
    wp.points.push_back({cluster + 4 * rng.normal(), cluster + 3 * rng.normal()});
    wp.weights.push_back(rng.uniform());
    total += wp.weights.back();
  }
  for (auto& w : wp.weights) w /= total;
  return wp;
}

GmmState init_state(Rng& rng, std::size_t k) {
  GmmState s;
  for (std::size_t j = 0; j < k; ++j)
    s.components.push_back({1.0 / static_cast<double>(k), {rng.uniform(0, 40), rng.uniform(0, 40)}, 25, 0, 25});
  return s;
}

} // namespace

TEST_SUITE("centers") {

TEST_CASE("single nonzero pixel is recovered exactly") {
  GradientMap m = blank(32, 32);
  m.at(20, 10) = 0.3;
  const ActivationCenter c = fit_activation_center(m);
  CHECK_FALSE(c.occluded);
  CHECK(c.position == Point2{10.0, 20.0});
  CHECK(c.cluster_weight > 0.0);
  CHECK(c.cluster_weight <= 1.0);
}

TEST_CASE("all-zero map is occluded") {
  CHECK(fit_activation_center(blank(8, 8)).occluded);
  CHECK(max_position_center(blank(8, 8)).occluded);
}

TEST_CASE("heavier blob wins") {
  GradientMap m = blank(64, 64);
  add_blob(m, 15, 15, 0.7, 2.0);
  add_blob(m, 45, 45, 0.3, 2.0);
  const ActivationCenter c = fit_activation_center(m);
  CHECK(std::hypot(c.position.x - 15, c.position.y - 15) < 1.0);
  CHECK(c.cluster_weight == doctest::Approx(0.7).epsilon(0.02));
}

TEST_CASE("max position") {
  GradientMap m = blank(10, 10);
  m.at(7, 3) = 2.0;
  m.at(1, 1) = 1.0;
  CHECK(max_position_center(m).position == Point2{3, 7});
  GradientMap tie = blank(2, 5);
  tie.values[5] = 1.0;
  tie.values[9] = 1.0;
  CHECK(max_position_center(tie).position == Point2{0, 1});
}

TEST_CASE("K=1 step lands on the weighted centroid") {
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto wp = random_points(rng, 50);
    Point2 centroid;
    for (std::size_t i = 0; i < wp.points.size(); ++i) {
      centroid.x += wp.weights[i] * wp.points[i].x;
      centroid.y += wp.weights[i] * wp.points[i].y;
    }
    const EmStep s = em_step(wp.points, wp.weights, init_state(rng, 1));
    CHECK(std::abs(s.state.components[0].mean.x - centroid.x) <= 1e-9);
    CHECK(std::abs(s.state.components[0].mean.y - centroid.y) <= 1e-9);
    CHECK(s.state.components[0].weight == doctest::Approx(1.0));
  }
}

TEST_CASE("K=1 fit equals the weighted pixel centroid") {
  Rng rng(2);
  GradientMap m = blank(24, 20);
  for (auto& v : m.values) v = rng.uniform() < 0.3 ? rng.uniform() : 0.0;
  double total = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t y = 0; y < m.height; ++y)
    for (std::size_t x = 0; x < m.width; ++x) {
      total += m.at(y, x);
      cx += m.at(y, x) * static_cast<double>(x);
      cy += m.at(y, x) * static_cast<double>(y);
    }
  GmmConfig cfg;
  cfg.components = 1;
  const auto c = fit_activation_center(m, cfg);
  CHECK(std::abs(c.position.x - cx / total) <= 1e-9);
  CHECK(std::abs(c.position.y - cy / total) <= 1e-9);
}

TEST_CASE("EM never decreases the weighted log-likelihood") {
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto wp = random_points(rng, 80);
    GmmState s = init_state(rng, 1 + rng.index(3));
    double prev = -INFINITY;
    for (int it = 0; it < 100; ++it) {
      const EmStep step = em_step(wp.points, wp.weights, s);
      CHECK(step.log_likelihood >= prev - 1e-9);
      CHECK(step.log_likelihood == doctest::Approx(weighted_log_likelihood(wp.points, wp.weights, s)));
      prev = step.log_likelihood;
      s = step.state;
    }
  }
}

TEST_CASE("mirror-symmetric data keeps symmetric means") {
  std::vector<Point2> pts;
  std::vector<double> w;
  Rng rng(4);
  for (int i = 0; i < 30; ++i) {
    const double dx = rng.uniform(-3, 3), dy = rng.uniform(-3, 3), wi = rng.uniform();
    pts.push_back({10 + dx, 20 + dy});
    pts.push_back({30 - dx, 20 - dy});
    w.push_back(wi);
    w.push_back(wi);
  }
  double total = 0;
  for (double v : w) total += v;
  for (double& v : w) v /= total;
  GmmState s;
  s.components = {{0.5, {12, 19}, 9, 0, 9}, {0.5, {28, 21}, 9, 0, 9}};
  for (int it = 0; it < 30; ++it) s = em_step(pts, w, s).state;
  const auto& a = s.components[0].mean;
  const auto& b = s.components[1].mean;
  CHECK(a.x + b.x == doctest::Approx(40.0).epsilon(1e-9));
  CHECK(a.y + b.y == doctest::Approx(40.0).epsilon(1e-9));
}

TEST_CASE("collapsed components are clamped to the floor") {
  std::vector<Point2> pts{{1, 1}, {1, 1}, {5, 5}};
  std::vector<double> w{0.4, 0.4, 0.2};
  GmmState s;
  s.components = {{0.5, {1, 1}, 1, 0, 1}, {0.5, {5, 5}, 1, 0, 1}};
  const auto out = em_step(pts, w, s, 1e-4).state;
  for (const auto& g : out.components) {
    CHECK(g.xx >= 1e-4 - 1e-18);
    CHECK(g.yy >= 1e-4 - 1e-18);
    CHECK(g.xx * g.yy - g.xy * g.xy > 0.0);
  }
  Gaussian2 g{1.0, {}, 1.0, 1.0, 1.0}; // singular
  clamp_covariance(g, 0.5);
  CHECK(g.xx * g.yy - g.xy * g.xy >= 0.5 * 0.5 * (1 - 1e-12));
}

TEST_CASE("best restart dominates") {
  Rng rng(5);
  GradientMap m = blank(40, 40);
  add_blob(m, 10, 12, 0.5, 3.0);
  add_blob(m, 28, 30, 0.3, 2.0);
  add_blob(m, 30, 8, 0.2, 4.0);
  GmmConfig cfg;
  cfg.components = 3;
  cfg.restarts = 4;
  std::vector<Point2> pts;
  std::vector<double> w;
  const auto norm = *normalize_map(m);
  for (std::size_t y = 0; y < 40; ++y)
    for (std::size_t x = 0; x < 40; ++x)
      if (norm.at(y, x) > 0) {
        pts.push_back({double(x), double(y)});
        w.push_back(norm.at(y, x));
      }
  double best = -INFINITY;
  GmmState best_state;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    const GmmFit f = fit_gmm(pts, w, cfg, r, std::hypot(40.0, 40.0));
    if (f.log_likelihood > best) {
      best = f.log_likelihood;
      best_state = f.state;
    }
  }
  const auto c = fit_activation_center(m, cfg);
  double heaviest = 0.0;
  for (const auto& g : best_state.components) heaviest = std::max(heaviest, g.weight);
  CHECK(c.cluster_weight == heaviest);
}

TEST_CASE("translation equivariance") {
  GradientMap a = blank(48, 48), b = blank(48, 48);
  add_blob(a, 15, 18, 0.6, 2.5);
  add_blob(a, 25, 22, 0.4, 3.0);
  // shift by (7, 5) with zero fill; the dropped tail mass is negligible
  for (std::size_t y = 5; y < 48; ++y)
    for (std::size_t x = 7; x < 48; ++x) b.at(y, x) = a.at(y - 5, x - 7);
  const auto ca = fit_activation_center(a), cb = fit_activation_center(b);
  CHECK(std::abs(cb.position.x - ca.position.x - 7) <= 0.5);
  CHECK(std::abs(cb.position.y - ca.position.y - 5) <= 0.5);
}

TEST_CASE("fit is deterministic and validates its config") {
  GradientMap m = blank(16, 16);
  Rng rng(6);
  for (auto& v : m.values) v = rng.uniform();
  CHECK(fit_activation_center(m) == fit_activation_center(m));
  GmmConfig bad;
  bad.components = 0;
  CHECK_THROWS_AS(fit_activation_center(m, bad), InvalidInput);
  bad = {};
  bad.restarts = 0;
  CHECK_THROWS_AS(fit_activation_center(m, bad), InvalidInput);
  bad = {};
  bad.max_iterations = 0;
  CHECK_THROWS_AS(fit_activation_center(m, bad), InvalidInput);
}

}
