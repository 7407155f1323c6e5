#pragma once

// Test-only signal generators and independent oracles.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "spectrokal/statespace.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal::testing {

inline double gaussian_bump(double t, double centre, double width) {
  const double z = (t - centre) / width;
  return std::exp(-0.5 * z * z);
}

/// Unit Gaussian spikes (10 ms width) at the given times.
inline std::vector<double> spike_train(const std::vector<double>& peak_times, double fs, double duration) {
  const auto n = static_cast<std::size_t>(std::lround(duration * fs));
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / fs;
    for (double c : peak_times) y[k] += gaussian_bump(t, c, 0.010);
  }
  return y;
}

inline std::vector<double> regular_times(double first, double period, std::size_t count) {
  std::vector<double> t(count);
  for (std::size_t i = 0; i < count; ++i) t[i] = first + period * static_cast<double>(i);
  return t;
}

/// Beat times with RR intervals mean_rr * (1 + U(-jitter, jitter)).
inline std::vector<double> jittered_times(double first, double mean_rr, double jitter, double duration,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  std::vector<double> t;
  for (double c = first; c < duration; c += mean_rr * (1.0 + u(rng))) t.push_back(c);
  return t;
}

/// P-QRS-T template per beat plus white noise.
inline std::vector<double> synthetic_ecg(const std::vector<double>& beats, double fs, double duration,
                                         double noise_sd = 0.01, std::uint64_t seed = 7) {
  const auto n = static_cast<std::size_t>(std::lround(duration * fs));
  std::vector<double> y(n, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / fs;
    double v = 0.0;
    for (double c : beats) {
      if (std::abs(t - c) > 0.6) continue;
      v += 0.15 * gaussian_bump(t, c - 0.20, 0.025);
      v -= 0.10 * gaussian_bump(t, c - 0.03, 0.010);
      v += 1.00 * gaussian_bump(t, c, 0.012);
      v -= 0.20 * gaussian_bump(t, c + 0.03, 0.010);
      v += 0.30 * gaussian_bump(t, c + 0.30, 0.050);
    }
    y[k] = v + noise(rng);
  }
  return y;
}

/// High-amplitude oscillatory burst (25 Hz carrier, 20 ms envelope).
inline void add_burst(std::vector<double>& y, double fs, double centre, double amplitude) {
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = static_cast<double>(k) / fs;
    y[k] += amplitude * gaussian_bump(t, centre, 0.020) * std::cos(2.0 * std::numbers::pi * 25.0 * (t - centre));
  }
}

inline std::size_t count_recovered(const std::vector<std::size_t>& found, const std::vector<double>& truth_times,
                                   double fs, std::size_t tolerance) {
  std::size_t hits = 0;
  for (double t : truth_times) {
    const double idx = t * fs;
    for (std::size_t p : found) {
      if (std::abs(static_cast<double>(p) - idx) <= static_cast<double>(tolerance)) {
        ++hits;
        break;
      }
    }
  }
  return hits;
}

inline double pearson(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::ArrayXd x = Eigen::Map<const Eigen::ArrayXd>(a.data(), a.size());
  Eigen::ArrayXd y = Eigen::Map<const Eigen::ArrayXd>(b.data(), b.size());
  x -= x.mean();
  y -= y.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

/// Exact posterior of x_1..x_N given y_{1:N} (or y_{1:upto}) by stacking the
/// joint Gaussian and conditioning directly.
struct BatchPosterior {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
};

inline BatchPosterior batch_posterior(const std::vector<StepModel>& models, const std::vector<double>& y,
                                      const GaussianState& prior, std::size_t upto) {
  const std::size_t steps = models.size();
  const Eigen::Index n = prior.mean.size();
  const Eigen::Index dim = n * static_cast<Eigen::Index>(steps);

  // Prior moments of the stacked state: x_k = A_k x_{k-1} + w_k.
  Eigen::VectorXd mu(dim);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd m = prior.mean;
  Eigen::MatrixXd p = prior.cov;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    const auto& a = models[k].transition;
    m = a * m;
    p = a * p * a.transpose() + models[k].process_noise;
    mu.segment(ki * n, n) = m;
    cov.block(ki * n, ki * n, n, n) = p;
    for (std::size_t l = 0; l < k; ++l) {
      const auto li = static_cast<Eigen::Index>(l);
      const Eigen::MatrixXd c = a * cov.block((ki - 1) * n, li * n, n, n);
      cov.block(ki * n, li * n, n, n) = c;
      cov.block(li * n, ki * n, n, n) = c.transpose();
    }
  }

  const auto obs = static_cast<Eigen::Index>(upto);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(obs, dim);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(obs, obs);
  Eigen::VectorXd yy(obs);
  for (Eigen::Index k = 0; k < obs; ++k) {
    h.block(k, k * n, 1, n) = models[static_cast<std::size_t>(k)].measurement_row;
    r(k, k) = models[static_cast<std::size_t>(k)].measurement_noise;
    yy[k] = y[static_cast<std::size_t>(k)];
  }
  const Eigen::MatrixXd s = h * cov * h.transpose() + r;
  const Eigen::MatrixXd gain = cov * h.transpose() * s.fullPivLu().inverse();
  const Eigen::VectorXd post_mean = mu + gain * (yy - h * mu);
  const Eigen::MatrixXd post_cov = cov - gain * h * cov;

  BatchPosterior out;
  for (std::size_t k = 0; k < steps; ++k) {
    const auto ki = static_cast<Eigen::Index>(k);
    out.means.push_back(post_mean.segment(ki * n, n));
    out.covs.push_back(post_cov.block(ki * n, ki * n, n, n));
  }
  return out;
}

/// Random model with n states: transition entries N(0, 0.6^2), PD process
/// noise, Gaussian measurement row, measurement noise in [0.1, 1].
inline StepModel random_step_model(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  StepModel m;
  m.transition = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return 0.6 * g(rng); });
  const Eigen::MatrixXd b = Eigen::MatrixXd::NullaryExpr(n, n, [&] { return 0.5 * g(rng); });
  m.process_noise = b * b.transpose() + 0.05 * Eigen::MatrixXd::Identity(n, n);
  m.measurement_row = Eigen::RowVectorXd::NullaryExpr(n, [&] { return g(rng); });
  m.measurement_noise = u(rng);
  return m;
}

inline double relative_error(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / std::max(1e-12, want.norm());
}

}  // namespace spectrokal::testing
