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

#include "partdet/centers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "partdet/error.hpp"
#include "partdet/random.hpp"

namespace partdet {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Precomputed log-density terms of one component.
struct Density {
  double log_norm; // log pi - log(2 pi) - 0.5 log det
  double ixx, ixy, iyy; // inverse covariance
  double mx, my;
  bool active;
};

std::vector<Density> densities(const GmmState& state) {
  std::vector<Density> out;
  out.reserve(state.components.size());
  for (const auto& g : state.components) {
    const double det = g.xx * g.yy - g.xy * g.xy;
    Density d{};
    d.active = g.weight > 0.0 && det > 0.0;
    if (d.active) {
      d.log_norm = std::log(g.weight) - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
      d.ixx = g.yy / det;
      d.iyy = g.xx / det;
      d.ixy = -g.xy / det;
      d.mx = g.mean.x;
      d.my = g.mean.y;
    }
    out.push_back(d);
  }
  return out;
}

inline double log_density(const Density& d, const Point2& p) {
  const double dx = p.x - d.mx, dy = p.y - d.my;
  return d.log_norm - 0.5 * (d.ixx * dx * dx + 2.0 * d.ixy * dx * dy + d.iyy * dy * dy);
}

// Fills log joint densities for one point; returns log-sum-exp.
inline double point_terms(const std::vector<Density>& dens, const Point2& p, double* terms) {
  double m = kNegInf;
  for (std::size_t k = 0; k < dens.size(); ++k) {
    terms[k] = dens[k].active ? log_density(dens[k], p) : kNegInf;
    m = std::max(m, terms[k]);
  }
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t k = 0; k < dens.size(); ++k)
    if (terms[k] != kNegInf) s += std::exp(terms[k] - m);
  return m + std::log(s);
}

void check_points(std::span<const Point2> points, std::span<const double> weights) {
  if (points.size() != weights.size()) throw InvalidInput("points and weights differ in length");
  for (double w : weights)
    if (!(w >= 0.0)) throw InvalidInput("weights must be non-negative");
}

} // namespace

void GmmConfig::validate() const {
  if (components < 1) throw InvalidInput("GMM needs at least one component");
  if (restarts < 1) throw InvalidInput("GMM needs at least one restart");
  if (max_iterations < 1) throw InvalidInput("GMM needs at least one EM iteration");
  if (!(covariance_floor > 0.0)) throw InvalidInput("covariance floor must be positive");
  if (!(convergence_tol >= 0.0)) throw InvalidInput("convergence tolerance must be non-negative");
}

void clamp_covariance(Gaussian2& g, double floor) {
  const double half_tr = 0.5 * (g.xx + g.yy);
  const double half_diff = 0.5 * (g.xx - g.yy);
  const double r = std::sqrt(half_diff * half_diff + g.xy * g.xy);
  const double lo = half_tr - r, hi = half_tr + r;
  if (lo >= floor) return;
  const double l1 = std::max(hi, floor), l2 = std::max(lo, floor);
  if (r == 0.0) {
    g.xx = g.yy = l1;
    g.xy = 0.0;
    return;
  }
  // unit eigenvector of the larger eigenvalue
  double vx = g.xy, vy = hi - g.xx;
  if (std::abs(vx) + std::abs(vy) < 1e-300) {
    vx = hi - g.yy;
    vy = g.xy;
  }
  const double n = std::hypot(vx, vy);
  vx /= n;
  vy /= n;
  g.xx = l1 * vx * vx + l2 * vy * vy;
  g.yy = l1 * vy * vy + l2 * vx * vx;
  g.xy = (l1 - l2) * vx * vy;
}

double weighted_log_likelihood(std::span<const Point2> points, std::span<const double> weights,
                               const GmmState& state) {
  check_points(points, weights);
  const auto dens = densities(state);
  std::vector<double> terms(dens.size());
  double ll = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (weights[i] == 0.0) continue;
    ll += weights[i] * point_terms(dens, points[i], terms.data());
  }
  return ll;
}

EmStep em_step(std::span<const Point2> points, std::span<const double> weights,
               const GmmState& state, double covariance_floor) {
  check_points(points, weights);
  const std::size_t K = state.components.size();
  if (K == 0) throw InvalidInput("GMM state has no components");
  const auto dens = densities(state);
  const std::size_t n = points.size();

  // E-step: resp[k * n + i] = w_i * r_ik
  std::vector<double> resp(n * K, 0.0);
  std::vector<double> mass(K, 0.0);
  std::vector<double> terms(K);
  double ll = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights[i];
    if (w == 0.0) continue;
    double m = kNegInf;
    for (std::size_t k = 0; k < K; ++k) {
      terms[k] = dens[k].active ? log_density(dens[k], points[i]) : kNegInf;
      m = std::max(m, terms[k]);
    }
    if (m == kNegInf) {
      ll = kNegInf;
      continue;
    }
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      terms[k] = terms[k] == kNegInf ? 0.0 : std::exp(terms[k] - m);
      total += terms[k];
    }
    ll += w * (m + std::log(total));
    for (std::size_t k = 0; k < K; ++k) {
      const double rw = w * (terms[k] / total);
      resp[k * n + i] = rw;
      mass[k] += rw;
    }
  }

  double total_mass = 0.0;
  for (double m : mass) total_mass += m;
  EmStep out{state, ll};
  for (std::size_t k = 0; k < K; ++k) {
    Gaussian2& g = out.state.components[k];
    if (!(mass[k] > 0.0)) {
      g.weight = 0.0;
      continue;
    }
    const double* rk = resp.data() + k * n;
    // coefficients are normalized first so a single point maps to itself exactly
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rk[i] / mass[k];
      mx += c * points[i].x;
      my += c * points[i].y;
    }
    double cxx = 0.0, cxy = 0.0, cyy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double c = rk[i] / mass[k];
      const double dx = points[i].x - mx, dy = points[i].y - my;
      cxx += c * dx * dx;
      cxy += c * dx * dy;
      cyy += c * dy * dy;
    }
    g.weight = mass[k] / total_mass;
    g.mean = {mx, my};
    g.xx = cxx;
    g.xy = cxy;
    g.yy = cyy;
    clamp_covariance(g, covariance_floor);
  }
  return out;
}

GmmFit fit_gmm(std::span<const Point2> points, std::span<const double> weights,
               const GmmConfig& cfg, std::size_t restart, double diagonal) {
  cfg.validate();
  check_points(points, weights);
  if (points.empty()) throw InvalidInput("GMM fit needs at least one point");
  Rng rng(cfg.rng_seed, restart);

  std::vector<double> cumulative(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) cumulative[i] = (acc += weights[i]);
  auto draw = [&]() {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    idx = std::min(idx, points.size() - 1);
    while (weights[idx] == 0.0 && idx > 0) --idx;
    return idx;
  };
  const std::size_t support = static_cast<std::size_t>(
      std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));

  const double spread = std::max(diagonal / 8.0, 1.0);
  GmmState state;
  std::vector<std::size_t> picked;
  for (std::size_t k = 0; k < cfg.components; ++k) {
    std::size_t idx = draw();
    // distinct starting means when the support allows it
    for (int tries = 0; tries < 16 && support > picked.size() &&
                        std::find(picked.begin(), picked.end(), idx) != picked.end();
         ++tries)
      idx = draw();
    picked.push_back(idx);
    Gaussian2 g;
    g.weight = 1.0 / static_cast<double>(cfg.components);
    g.mean = points[idx];
    g.xx = g.yy = spread * spread;
    g.xy = 0.0;
    state.components.push_back(g);
  }

  GmmFit fit;
  double prev = kNegInf;
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    EmStep step = em_step(points, weights, state, cfg.covariance_floor);
    fit.trace.push_back(step.log_likelihood);
    state = std::move(step.state);
    fit.iterations = it + 1;
    if (it > 0 && std::abs(step.log_likelihood - prev) < cfg.convergence_tol) break;
    prev = step.log_likelihood;
  }
  fit.state = std::move(state);
  fit.log_likelihood = weighted_log_likelihood(points, weights, fit.state);
  fit.trace.push_back(fit.log_likelihood);
  return fit;
}

ActivationCenter fit_activation_center(const GradientMap& map, const GmmConfig& cfg) {
  cfg.validate();
  if (map.values.empty() || map.values.size() != map.height * map.width)
    throw InvalidInput("gradient map is empty or inconsistent");
  const auto normalized = normalize_map(map);
  if (!normalized) return ActivationCenter::hidden();

  std::vector<Point2> points;
  std::vector<double> weights;
  for (std::size_t y = 0; y < map.height; ++y)
    for (std::size_t x = 0; x < map.width; ++x) {
      const double w = normalized->values[y * map.width + x];
      if (w <= 0.0) continue;
      points.push_back({static_cast<double>(x), static_cast<double>(y)});
      weights.push_back(w);
    }

  const double diagonal = std::hypot(static_cast<double>(map.width), static_cast<double>(map.height));
  GmmFit best;
  bool have = false;
  for (std::size_t r = 0; r < cfg.restarts; ++r) {
    GmmFit fit = fit_gmm(points, weights, cfg, r, diagonal);
    if (!have || fit.log_likelihood > best.log_likelihood) {
      best = std::move(fit);
      have = true;
    }
  }

  auto comps = best.state.components;
  std::stable_sort(comps.begin(), comps.end(), [](const Gaussian2& a, const Gaussian2& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.mean.x != b.mean.x) return a.mean.x < b.mean.x;
    return a.mean.y < b.mean.y;
  });
  const Gaussian2& top = comps.front();
  ActivationCenter c;
  c.occluded = false;
  c.cluster_weight = top.weight;
  c.position = {std::clamp(top.mean.x, 0.0, static_cast<double>(map.width - 1)),
                std::clamp(top.mean.y, 0.0, static_cast<double>(map.height - 1))};
  return c;
}

ActivationCenter max_position_center(const GradientMap& map) {
  if (map.values.empty() || map.values.size() != map.height * map.width)
    throw InvalidInput("gradient map is empty or inconsistent");
  if (map.is_zero()) return ActivationCenter::hidden();
  std::size_t best = 0;
  for (std::size_t i = 1; i < map.values.size(); ++i)
    if (map.values[i] > map.values[best]) best = i;
  ActivationCenter c;
  c.occluded = false;
  c.cluster_weight = 1.0;
  c.position = {static_cast<double>(best % map.width), static_cast<double>(best / map.width)};
  return c;
}

} // namespace partdet
