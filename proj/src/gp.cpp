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

#include "stagetune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "stagetune/errors.hpp"
#include "stagetune/rng.hpp"

namespace stagetune {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kGolden = 0.6180339887498948482;
constexpr int kBatch = 4096;

// Cholesky of `k` with escalating diagonal jitter. Returns the jitter used, or
// nullopt if even kJitterMax fails.
std::optional<double> jittered_cholesky(const Eigen::MatrixXd& k, Eigen::MatrixXd& lower) {
  double jitter = 0.0;
  while (true) {
    Eigen::MatrixXd a = k;
    if (jitter > 0.0) a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) {
      lower = llt.matrixL();
      if (lower.diagonal().minCoeff() > 0.0 && lower.allFinite()) return jitter;
    }
    if (jitter >= GpModel::kJitterMax) return std::nullopt;
    jitter = jitter == 0.0 ? GpModel::kJitterStart : jitter * 10.0;
  }
}

double sample_variance(const Eigen::VectorXd& y) {
  if (y.size() < 2) return 0.0;
  const double m = y.mean();
  return (y.array() - m).square().sum() / static_cast<double>(y.size() - 1);
}

}  // namespace

void GpHyperparameters::validate(int dim) const {
  if (static_cast<int>(lengthscales.size()) != dim) {
    throw std::invalid_argument(fmt::format("GP: expected {} lengthscales, got {}", dim, lengthscales.size()));
  }
  for (double l : lengthscales) {
    if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("GP: lengthscales must be positive");
  }
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw std::invalid_argument("GP: signal variance must be positive");
  }
  if (!(noise_variance > 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("GP: noise variance must be positive");
  }
}

GpModel::GpModel(int dim, GpHyperparameters hp, double prior_mean)
    : GpModel(Eigen::MatrixXd(dim, 0), Eigen::VectorXd(0), std::move(hp)) {
  center_ = prior_mean;
}

GpModel::GpModel(Eigen::MatrixXd inputs, Eigen::VectorXd targets, GpHyperparameters hp)
    : dim_(static_cast<int>(inputs.rows())),
      hp_(std::move(hp)),
      inputs_(std::move(inputs)),
      targets_(std::move(targets)) {
  if (dim_ < 1) throw std::invalid_argument("GP: dimension must be >= 1");
  if (inputs_.cols() != targets_.size()) throw std::invalid_argument("GP: inputs/targets size mismatch");
  if (!inputs_.allFinite() || !targets_.allFinite()) throw std::invalid_argument("GP: non-finite data");
  hp_.validate(dim_);
  inv_lengthscales_.resize(dim_);
  for (int j = 0; j < dim_; ++j) inv_lengthscales_[j] = 1.0 / hp_.lengthscales[static_cast<std::size_t>(j)];
  scaled_ = inv_lengthscales_.asDiagonal() * inputs_;
  center_ = targets_.size() > 0 ? targets_.mean() : 0.0;
  factorize();
}

void GpModel::factorize() {
  const int n = size();
  if (n == 0) {
    chol_.resize(0, 0);
    alpha_.resize(0);
    return;
  }
  Eigen::MatrixXd k(n, n);
  for (int i = 0; i < n; ++i) {
    k(i, i) = hp_.signal_variance + hp_.noise_variance;
    for (int j = 0; j < i; ++j) {
      const double d2 = (scaled_.col(i) - scaled_.col(j)).squaredNorm();
      k(i, j) = k(j, i) = hp_.signal_variance * std::exp(-0.5 * d2);
    }
  }
  auto jitter = jittered_cholesky(k, chol_);
  if (!jitter) throw GpError(fmt::format("GP: Cholesky failed for n = {} even with jitter {}", n, kJitterMax));
  jitter_ = *jitter;
  alpha_ = targets_.array() - center_;
  chol_.triangularView<Eigen::Lower>().solveInPlace(alpha_);
  chol_.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha_);
}

double GpModel::kernel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  const double d2 = (inv_lengthscales_.asDiagonal() * (a - b)).squaredNorm();
  return hp_.signal_variance * std::exp(-0.5 * d2);
}

GpPrediction GpModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != dim_) throw std::invalid_argument("GP::predict: dimension mismatch");
  const int n = size();
  if (n == 0) return {center_, hp_.signal_variance};
  const Eigen::VectorXd xs = inv_lengthscales_.asDiagonal() * x;
  Eigen::VectorXd kx(n);
  for (int i = 0; i < n; ++i) kx[i] = hp_.signal_variance * std::exp(-0.5 * (scaled_.col(i) - xs).squaredNorm());
  const double mean = center_ + kx.dot(alpha_);
  chol_.triangularView<Eigen::Lower>().solveInPlace(kx);
  const double var = hp_.signal_variance - kx.squaredNorm();
  return {mean, std::clamp(var, 0.0, hp_.signal_variance)};
}

void GpModel::predict(const Eigen::MatrixXd& points, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
  if (points.rows() != dim_) throw std::invalid_argument("GP::predict: dimension mismatch");
  const int m = static_cast<int>(points.cols());
  const int n = size();
  mean.resize(m);
  variance.resize(m);
  if (n == 0) {
    mean.setConstant(center_);
    variance.setConstant(hp_.signal_variance);
    return;
  }
  const Eigen::VectorXd train_sq = scaled_.colwise().squaredNorm().transpose();
  for (int start = 0; start < m; start += kBatch) {
    const int cols = std::min(kBatch, m - start);
    const Eigen::MatrixXd xs = inv_lengthscales_.asDiagonal() * points.middleCols(start, cols);
    const Eigen::RowVectorXd query_sq = xs.colwise().squaredNorm();
    Eigen::MatrixXd kx = scaled_.transpose() * xs;  // n x cols
    for (int c = 0; c < cols; ++c) {
      for (int i = 0; i < n; ++i) {
        const double d2 = std::max(0.0, train_sq[i] + query_sq[c] - 2.0 * kx(i, c));
        kx(i, c) = hp_.signal_variance * std::exp(-0.5 * d2);
      }
    }
    mean.segment(start, cols) = (kx.transpose() * alpha_).array() + center_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(kx);
    const Eigen::ArrayXd reduction = kx.colwise().squaredNorm().transpose().array();
    variance.segment(start, cols) = (hp_.signal_variance - reduction).max(0.0).min(hp_.signal_variance);
  }
}

double GpModel::log_marginal_likelihood() const {
  const int n = size();
  if (n == 0) throw std::invalid_argument("GP: log marginal likelihood needs data");
  const Eigen::VectorXd centered = targets_.array() - center_;
  return -0.5 * centered.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * n * kLog2Pi;
}

namespace {

// Correlations below e^-40 are set to zero during the fit; left in, their
// subnormal products dominate the run time.
constexpr double kNegligibleExponent = -40.0;

Eigen::MatrixXd correlation(const Eigen::MatrixXd& exponent) {
  return (exponent.array() < kNegligibleExponent).select(0.0, exponent.array().exp()).matrix();
}

// Log marginal likelihood as a function of log hyperparameters
// [log l_1..log l_d, log s_f^2, log s^2], with pairwise squared differences
// cached per dimension. Not thread-safe: evaluations share a work matrix.
class LikelihoodSurface {
 public:
  LikelihoodSurface(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets)
      : dim_(static_cast<int>(inputs.rows())), n_(static_cast<int>(inputs.cols())) {
    centered_ = targets.array() - targets.mean();
    sqdiff_.resize(static_cast<std::size_t>(dim_));
    for (int j = 0; j < dim_; ++j) {
      auto& d = sqdiff_[static_cast<std::size_t>(j)];
      d.resize(n_, n_);
      for (int a = 0; a < n_; ++a) {
        for (int b = 0; b < n_; ++b) {
          const double diff = inputs(j, a) - inputs(j, b);
          d(a, b) = diff * diff;
        }
      }
    }
  }

  int dim() const { return dim_; }

  /// Sum over dimensions other than `skip` of -d_j^2 / (2 l_j^2).
  Eigen::MatrixXd exponent(const std::vector<double>& theta, int skip = -1) const {
    Eigen::MatrixXd expo = Eigen::MatrixXd::Zero(n_, n_);
    for (int j = 0; j < dim_; ++j) {
      if (j != skip) expo.noalias() += weight(theta, j) * sqdiff_[static_cast<std::size_t>(j)];
    }
    return expo;
  }

  double weight(const std::vector<double>& theta, int j) const {
    return -0.5 * std::exp(-2.0 * theta[static_cast<std::size_t>(j)]);
  }

  const Eigen::MatrixXd& sqdiff(int j) const { return sqdiff_[static_cast<std::size_t>(j)]; }

  double operator()(const std::vector<double>& theta) const {
    return from_correlation(correlation(exponent(theta)), theta);
  }

  /// Value for the kernel sf2 * corr + sn2 I with sf2, sn2 taken from theta.
  double from_correlation(const Eigen::MatrixXd& corr, const std::vector<double>& theta) const {
    const double sf2 = std::exp(theta[static_cast<std::size_t>(dim_)]);
    const double sn2 = std::exp(theta[static_cast<std::size_t>(dim_ + 1)]);
    double jitter = 0.0;
    while (true) {
      work_ = sf2 * corr;
      work_.diagonal().array() += sn2 + jitter;
      Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(work_);
      if (llt.info() == Eigen::Success) {
        const auto diag = work_.diagonal();
        if (diag.minCoeff() > 0.0 && diag.allFinite()) {
          Eigen::VectorXd alpha = centered_;
          llt.matrixL().solveInPlace(alpha);
          const double value = -0.5 * alpha.squaredNorm() - diag.array().log().sum() - 0.5 * n_ * kLog2Pi;
          return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
        }
      }
      if (jitter >= GpModel::kJitterMax) return -std::numeric_limits<double>::infinity();
      jitter = jitter == 0.0 ? GpModel::kJitterStart : jitter * 10.0;
    }
  }

 private:
  int dim_;
  int n_;
  Eigen::VectorXd centered_;
  std::vector<Eigen::MatrixXd> sqdiff_;
  mutable Eigen::MatrixXd work_;
};

struct SearchPoint {
  std::vector<double> theta;
  double value = -std::numeric_limits<double>::infinity();
};

// Golden-section maximization along coordinate j within [lo, hi]; keeps the
// incumbent unless a strictly better point is found. Terms of the kernel that
// do not depend on coordinate j are computed once per line.
void line_search(const LikelihoodSurface& f, SearchPoint& p, std::size_t j, double lo, double hi, int evals) {
  if (!(hi > lo)) return;
  std::vector<double> trial = p.theta;
  const int jj = static_cast<int>(j);
  const bool lengthscale = jj < f.dim();
  const Eigen::MatrixXd base = lengthscale ? f.exponent(p.theta, jj) : correlation(f.exponent(p.theta));
  auto eval = [&](double v) {
    trial[j] = v;
    const double r = lengthscale
                         ? f.from_correlation(correlation(base + f.weight(trial, jj) * f.sqdiff(jj)), trial)
                         : f.from_correlation(base, trial);
    if (r > p.value) {
      p.value = r;
      p.theta[j] = v;
    }
    return r;
  };
  double a = lo, b = hi;
  double c = b - kGolden * (b - a);
  double d = a + kGolden * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  for (int i = 2; i < evals; ++i) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = eval(d);
    }
  }
}

void coordinate_sweeps(const LikelihoodSurface& f, SearchPoint& p, const std::vector<double>& lo,
                       const std::vector<double>& hi, int sweeps, int evals, bool wide_first) {
  for (int s = 0; s < sweeps; ++s) {
    const double fraction = (s == 0 && wide_first) ? 0.5 : 1.0 / 6.0;
    for (std::size_t j = 0; j < p.theta.size(); ++j) {
      const double w = fraction * (hi[j] - lo[j]);
      line_search(f, p, j, std::max(lo[j], p.theta[j] - w), std::min(hi[j], p.theta[j] + w), evals);
    }
  }
}

}  // namespace

GpModel fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& targets,
                            const GpFitOptions& options) {
  const int dim = static_cast<int>(inputs.rows());
  const int n = static_cast<int>(inputs.cols());
  if (n < 2) throw std::invalid_argument("fit_hyperparameters: need at least 2 observations");
  if (targets.size() != n) throw std::invalid_argument("fit_hyperparameters: size mismatch");
  if (options.starts < 1) throw std::invalid_argument("fit_hyperparameters: need at least one start");

  const auto& b = options.bounds;
  const double scale = std::max(sample_variance(targets), 1e-6);
  const auto p = static_cast<std::size_t>(dim + 2);
  std::vector<double> lo(p), hi(p);
  for (int j = 0; j < dim; ++j) {
    lo[static_cast<std::size_t>(j)] = std::log(b.lengthscale_min);
    hi[static_cast<std::size_t>(j)] = std::log(b.lengthscale_max);
  }
  lo[p - 2] = std::log(b.signal_min_ratio * scale);
  hi[p - 2] = std::log(b.signal_max_ratio * scale);
  lo[p - 1] = std::log(b.noise_min);
  hi[p - 1] = std::log(std::max(b.noise_max_ratio * scale, b.noise_min * 10.0));

  const LikelihoodSurface surface(inputs, targets);
  Rng rng = Rng::stream(options.seed, "gp/hyperparameter-starts");
  std::vector<double> shift(p);
  for (auto& s : shift) s = rng.uniform();

  std::vector<SearchPoint> results;
  for (int s = 0; s < options.starts; ++s) {
    SearchPoint point;
    if (s == 0 && options.warm_start) {
      const auto& w = *options.warm_start;
      w.validate(dim);
      point.theta.resize(p);
      for (int j = 0; j < dim; ++j) {
        point.theta[static_cast<std::size_t>(j)] = std::log(w.lengthscales[static_cast<std::size_t>(j)]);
      }
      point.theta[p - 2] = std::log(w.signal_variance);
      point.theta[p - 1] = std::log(w.noise_variance);
      for (std::size_t j = 0; j < p; ++j) point.theta[j] = std::clamp(point.theta[j], lo[j], hi[j]);
    } else {
      const auto u = shifted_halton(static_cast<std::size_t>(s), shift);
      point.theta.resize(p);
      for (std::size_t j = 0; j < p; ++j) point.theta[j] = lo[j] + u[j] * (hi[j] - lo[j]);
    }
    point.value = surface(point.theta);
    coordinate_sweeps(surface, point, lo, hi, options.initial_sweeps, options.line_evaluations, true);
    results.push_back(std::move(point));
  }

  auto best = std::max_element(results.begin(), results.end(),
                               [](const SearchPoint& a, const SearchPoint& c) { return a.value < c.value; });
  if (!std::isfinite(best->value)) throw GpError("fit_hyperparameters: every start failed to factorize");
  coordinate_sweeps(surface, *best, lo, hi, options.refine_sweeps, options.line_evaluations, false);

  GpHyperparameters hp;
  hp.lengthscales.resize(static_cast<std::size_t>(dim));
  for (int j = 0; j < dim; ++j) {
    hp.lengthscales[static_cast<std::size_t>(j)] = std::exp(best->theta[static_cast<std::size_t>(j)]);
  }
  hp.signal_variance = std::exp(best->theta[p - 2]);
  hp.noise_variance = std::max(std::exp(best->theta[p - 1]), b.noise_min);
  return GpModel(inputs, targets, hp);
}

}  // namespace stagetune
