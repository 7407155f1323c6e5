#pragma once

// Time-varying Fourier coefficients with Ornstein-Uhlenbeck priors
// ("FourierKS"). The state is [a0, a1..aM, b1..bM]; every coefficient,
// including a0, follows da = -lambda a dt + dW with diffusion q.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spectrokal/errors.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/statespace.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal {

struct FourierBasisSpec {
  double f0 = 0.1;
  std::size_t num_harmonics = 400;
  double lambda = 10.0;
  double q = 1.0;
  double r = 1.0;
  std::optional<double> prior_var;  // defaults to q

  // Optional per-harmonic overrides (length num_harmonics, index j-1).
  std::vector<double> lambda_per_freq;
  std::vector<double> q_per_freq;

  std::size_t state_dim() const { return 2 * num_harmonics + 1; }
  double prior_variance() const { return prior_var.value_or(q); }

  double lambda_for(std::size_t j) const {
    return (j == 0 || lambda_per_freq.empty()) ? lambda : lambda_per_freq[j - 1];
  }
  double q_for(std::size_t j) const {
    return (j == 0 || q_per_freq.empty()) ? q : q_per_freq[j - 1];
  }

  void validate() const {
    if (!(f0 > 0.0)) throw ConfigurationError("f0 must be positive");
    if (num_harmonics < 1) throw ConfigurationError("need at least one harmonic");
    if (!(lambda > 0.0)) throw ConfigurationError("lambda must be positive");
    if (!(q > 0.0)) throw ConfigurationError("q must be positive");
    if (!(r > 0.0)) throw ConfigurationError("r must be positive");
    if (!(prior_variance() > 0.0)) throw ConfigurationError("prior variance must be positive");
    auto check_override = [&](const std::vector<double>& v, const char* name) {
      if (v.empty()) return;
      if (v.size() != num_harmonics) {
        throw ConfigurationError(std::string(name) + " override needs one value per harmonic");
      }
      for (double x : v) {
        if (!(x > 0.0)) throw ConfigurationError(std::string(name) + " override must be positive");
      }
    };
    check_override(lambda_per_freq, "lambda");
    check_override(q_per_freq, "q");
  }

  /// Highest modelled frequency must not exceed Nyquist.
  void validate_for(const TimedSignal& signal) const {
    validate();
    if (signal.is_uniform()) {
      const double nyquist = 0.5 / signal.dt();
      const double top = static_cast<double>(num_harmonics) * f0;
      if (top > nyquist * (1.0 + 1e-12)) {
        throw ConfigurationError("M*f0 = " + std::to_string(top) + " Hz exceeds the Nyquist frequency " +
                                 std::to_string(nyquist) + " Hz");
      }
    }
  }
};

/// Measurement row [1, cos(2 pi f0 t), ..., cos(2 pi M f0 t), sin(...), ...].
inline RowVectorXd fourier_measurement_row(const FourierBasisSpec& spec, double t) {
  const auto m = static_cast<Eigen::Index>(spec.num_harmonics);
  RowVectorXd h(2 * m + 1);
  h[0] = 1.0;
  for (Eigen::Index j = 1; j <= m; ++j) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) * spec.f0 * t;
    h[j] = std::cos(phase);
    h[m + j] = std::sin(phase);
  }
  return h;
}

/// Transition psi = exp(-lambda dt) and noise q (1 - exp(-2 lambda dt)) per
/// coefficient, for a step of length dt >= 0.
inline void fourier_dynamics(const FourierBasisSpec& spec, double dt, VectorXd& psi, VectorXd& sigma) {
  const auto m = spec.num_harmonics;
  psi.resize(static_cast<Eigen::Index>(2 * m + 1));
  sigma.resize(psi.size());
  for (std::size_t j = 0; j <= m; ++j) {
    const double lam = spec.lambda_for(j);
    const double decay = std::exp(-lam * dt);
    const double var = spec.q_for(j) * -std::expm1(-2.0 * lam * dt);
    psi[static_cast<Eigen::Index>(j)] = decay;
    sigma[static_cast<Eigen::Index>(j)] = var;
    if (j > 0) {
      psi[static_cast<Eigen::Index>(m + j)] = decay;
      sigma[static_cast<Eigen::Index>(m + j)] = var;
    }
  }
}

inline DiagonalStepModel build_diagonal_step_model(const FourierBasisSpec& spec, double t_prev,
                                                   double t_cur) {
  if (!(t_cur > t_prev)) throw PreconditionError("step must have t_cur > t_prev");
  DiagonalStepModel model;
  fourier_dynamics(spec, t_cur - t_prev, model.transition, model.process_noise);
  model.measurement_row = fourier_measurement_row(spec, t_cur);
  model.measurement_noise = spec.r;
  return model;
}

inline StepModel build_step_model(const FourierBasisSpec& spec, double t_prev, double t_cur) {
  return build_diagonal_step_model(spec, t_prev, t_cur).to_dense();
}

/// Per-step models over a signal's sample times. The prior sits at the first
/// sample time, so step 0 has identity dynamics and no process noise.
class FourierStepProvider {
 public:
  FourierStepProvider(const FourierBasisSpec& spec, const TimedSignal& signal)
      : spec_(spec), signal_(signal) {
    if (signal.is_uniform()) fourier_dynamics(spec, signal.dt(), psi_, sigma_);
  }

  DiagonalStepModel operator()(std::size_t k) const {
    DiagonalStepModel model;
    if (k == 0) {
      fourier_dynamics(spec_, 0.0, model.transition, model.process_noise);
    } else if (signal_.is_uniform()) {
      model.transition = psi_;
      model.process_noise = sigma_;
    } else {
      fourier_dynamics(spec_, signal_.time(k) - signal_.time(k - 1), model.transition,
                       model.process_noise);
    }
    model.measurement_row = fourier_measurement_row(spec_, signal_.time(k));
    model.measurement_noise = spec_.r;
    return model;
  }

  /// Same models in dense form, for the generic filter and smoother.
  auto dense() const {
    return [this](std::size_t k) { return (*this)(k).to_dense(); };
  }

  GaussianState prior() const {
    const auto n = static_cast<Eigen::Index>(spec_.state_dim());
    return {VectorXd::Zero(n), spec_.prior_variance() * MatrixXd::Identity(n, n)};
  }

 private:
  const FourierBasisSpec& spec_;
  const TimedSignal& signal_;
  VectorXd psi_;
  VectorXd sigma_;
};

inline std::vector<double> harmonic_frequencies(double f0, std::size_t harmonics) {
  std::vector<double> f(harmonics);
  for (std::size_t j = 0; j < harmonics; ++j) f[j] = static_cast<double>(j + 1) * f0;
  return f;
}

/// Kalman filter + RTS smoother over the Fourier-coefficient state, reduced
/// to the magnitude of each harmonic. Output is M x N.
inline SpectroTemporalMatrix estimate_fourierks(const TimedSignal& signal, const FourierBasisSpec& spec) {
  spec.validate_for(signal);
  const FourierStepProvider models(spec, signal);
  const auto means = diagonal_mean_smoother(models, signal.samples(), models.prior());
  SpectroTemporalMatrix s =
      magnitude_from_coefficients(means, CoefficientLayout::fourier(spec.num_harmonics));
  s.freqs = harmonic_frequencies(spec.f0, spec.num_harmonics);
  s.times = signal.times();
  s.dt = signal.mean_dt();
  s.burn_in_cols = 0;
  return s;
}

}  // namespace spectrokal
