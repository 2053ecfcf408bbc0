/*
 Copyright 2026 The stagetune Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace stagetune {

/// ARD squared-exponential kernel hyperparameters plus observation noise.
struct GpHyperparameters {
  std::vector<double> lengthscales;
  double signal_variance = 1.0;
  double noise_variance = 1e-6;

  void validate(int dim) const;
};

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact GP regression with a zero-mean prior on centred targets.
///
/// Inputs are stored column-wise (d x n). The factorization of K + s^2 I is
/// computed once at construction; when it fails, diagonal jitter is escalated
/// from 1e-10 by factors of 10 up to 1e-4 before giving up with GpError.
class GpModel {
 public:
  static constexpr double kJitterStart = 1e-10;
  static constexpr double kJitterMax = 1e-4;

  /// Prior-only model: mean = prior_mean, variance = signal variance.
  GpModel(int dim, GpHyperparameters hp, double prior_mean = 0.0);
  GpModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets, GpHyperparameters hp);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(targets_.size()); }
  const GpHyperparameters& hyperparameters() const { return hp_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  double center() const { return center_; }
  double jitter() const { return jitter_; }

  double kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

  GpPrediction predict(const Eigen::VectorXd& x) const;

  /// Batched prediction for the columns of `points` (d x m).
  void predict(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

  /// -1/2 y'a - sum log L_ii - n/2 log 2 pi on centred targets.
  double log_marginal_likelihood() const;

 private:
  void factorize();

  int dim_;
  GpHyperparameters hp_;
  Eigen::MatrixXd inputs_;
  Eigen::VectorXd targets_;
  double center_ = 0.0;
  Eigen::VectorXd inv_lengthscales_;
  Eigen::MatrixXd scaled_;  // inputs divided by lengthscales
  Eigen::MatrixXd chol_;    // lower factor L
  Eigen::VectorXd alpha_;   // (K + s^2 I)^-1 (y - center)
  double jitter_ = 0.0;
};

/// Box for the hyperparameter search. Signal and noise bounds are relative to
/// the sample variance of the targets (floored at 1e-6).
struct HyperparameterBounds {
  double lengthscale_min = 0.01;
  double lengthscale_max = 20.0;
  double signal_min_ratio = 1e-3;
  double signal_max_ratio = 1e2;
  double noise_min = 1e-8;
  double noise_max_ratio = 0.5;
};

struct GpFitOptions {
  HyperparameterBounds bounds;
  int starts = 8;
  int initial_sweeps = 1;  // coordinate sweeps per start
  int refine_sweeps = 2;   // extra sweeps on the best start
  int line_evaluations = 10;
  std::uint64_t seed = 0;
  std::optional<GpHyperparameters> warm_start;
};

/// Type-II maximum likelihood by multistart coordinate descent in log space.
/// Starts come from a randomly shifted Halton set (the warm start, if given,
/// replaces the first). Each coordinate is optimized by golden-section search.
/// Requires n >= 2. Throws GpError if every start fails to factorize.
GpModel fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                            const GpFitOptions& options = {});

}  // namespace stagetune
