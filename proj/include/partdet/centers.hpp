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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "partdet/gradmap.hpp"

namespace partdet {

struct GmmConfig {
  std::size_t components = 2;
  std::size_t max_iterations = 100;
  std::size_t restarts = 3;
  std::uint64_t rng_seed = 0;
  double convergence_tol = 1e-6; // on the weighted log-likelihood
  double covariance_floor = 1e-4; // px^2, lower bound on eigenvalues

  void validate() const;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Predicted part location. Position is meaningless when occluded.
struct ActivationCenter {
  Point2 position;
  double cluster_weight = 0.0;
  bool occluded = true;

  static ActivationCenter hidden() { return {}; }
  friend bool operator==(const ActivationCenter&, const ActivationCenter&) = default;
};

/// One 2-D Gaussian component with full covariance [[xx, xy], [xy, yy]].
struct Gaussian2 {
  double weight = 0.0;
  Point2 mean;
  double xx = 1.0, xy = 0.0, yy = 1.0;
};

struct GmmState {
  std::vector<Gaussian2> components;
};

struct EmStep {
  GmmState state;
  double log_likelihood = 0.0; // of the state passed in, from the E-step
};

/// sum_i w_i log sum_k pi_k N(p_i | mu_k, Sigma_k)
double weighted_log_likelihood(std::span<const Point2> points, std::span<const double> weights,
                               const GmmState& state);

/// One E-step and M-step on weighted points (weights are fractional
/// multiplicities summing to 1). Covariance eigenvalues are clamped to
/// `covariance_floor`; a component with no responsibility keeps its
/// parameters and gets weight 0.
EmStep em_step(std::span<const Point2> points, std::span<const double> weights,
               const GmmState& state, double covariance_floor = 1e-4);

/// Clamps the eigenvalues of the component covariance to at least `floor`.
void clamp_covariance(Gaussian2& g, double floor);

struct GmmFit {
  GmmState state;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  /// Log-likelihood before every EM step, then of the final state.
  std::vector<double> trace;
};

/// Weighted EM from one random start drawn with stream `restart` of
/// cfg.rng_seed. `diagonal` sets the initial isotropic spread (diag / 8).
GmmFit fit_gmm(std::span<const Point2> points, std::span<const double> weights,
               const GmmConfig& cfg, std::size_t restart, double diagonal);

/// Mean of the heaviest component of the best of cfg.restarts weighted EM
/// fits to the pixel positions; occluded for an all-zero map.
ActivationCenter fit_activation_center(const GradientMap& map, const GmmConfig& cfg = {});

/// Position of the maximum value, lowest flat index on ties.
ActivationCenter max_position_center(const GradientMap& map);

} // namespace partdet
