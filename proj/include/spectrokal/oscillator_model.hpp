#pragma once

// Stochastic-oscillator model ("OscKS"): a Brownian bias state followed by
// one damped 2-D oscillator per frequency. The model is time invariant, so
// filtering and smoothing run with the stationary gains of the discrete
// algebraic Riccati equation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/LU>

#include "spectrokal/errors.hpp"
#include "spectrokal/fourier_model.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/statespace.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal {

struct OscillatorBankSpec {
  std::vector<double> frequencies;
  double lambda = 10.0;
  double q = 1.0;
  double q_b = 1e-7;
  double r = 1.0;
  double dt = 1.0 / 300.0;

  static OscillatorBankSpec harmonic(double f0, std::size_t count, double dt) {
    OscillatorBankSpec s;
    s.frequencies = harmonic_frequencies(f0, count);
    s.dt = dt;
    return s;
  }

  std::size_t state_dim() const { return 2 * frequencies.size() + 1; }

  void validate() const {
    if (frequencies.empty()) throw ConfigurationError("oscillator bank has no frequencies");
    if (!(lambda > 0.0)) throw ConfigurationError("lambda must be positive");
    if (!(q > 0.0)) throw ConfigurationError("q must be positive");
    if (!(q_b >= 0.0)) throw ConfigurationError("q_b must be nonnegative");
    if (!(r > 0.0)) throw ConfigurationError("r must be positive");
    if (!(dt > 0.0)) throw ConfigurationError("dt must be positive");
    std::vector<double> sorted = frequencies;
    std::sort(sorted.begin(), sorted.end());
    if (!(sorted.front() > 0.0)) throw ConfigurationError("frequencies must be positive");
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConfigurationError("frequencies must be distinct");
    }
    const double nyquist = 0.5 / dt;
    if (!(sorted.back() < nyquist)) {
      throw ConfigurationError("frequency " + std::to_string(sorted.back()) +
                               " Hz is at or above the Nyquist frequency " + std::to_string(nyquist) +
                               " Hz");
    }
  }
};

/// Damped rotation exp(F dt) of one oscillator: decay * [[c, -s], [s, c]].
struct OscillatorBlock {
  double decay;
  double c;
  double s;
  double noise;  // diagonal of Q^j
};

/// LTI model with its block structure kept alongside the dense matrices so
/// the stationary recursions can apply A in O(n).
struct OscillatorLtiModel {
  StepModel dense;
  std::vector<OscillatorBlock> blocks;

  Eigen::Index dim() const { return dense.dim(); }

  /// A * x using the block structure.
  VectorXd apply_transition(const VectorXd& x) const {
    VectorXd out(x.size());
    out[0] = x[0];
    for (std::size_t j = 0; j < blocks.size(); ++j) {
      const auto i = static_cast<Eigen::Index>(1 + 2 * j);
      const auto& b = blocks[j];
      out[i] = b.decay * (b.c * x[i] - b.s * x[i + 1]);
      out[i + 1] = b.decay * (b.s * x[i] + b.c * x[i + 1]);
    }
    return out;
  }
};

inline OscillatorLtiModel build_lti_model(const OscillatorBankSpec& spec) {
  spec.validate();
  const auto m = spec.frequencies.size();
  const auto n = static_cast<Eigen::Index>(2 * m + 1);
  OscillatorLtiModel model;
  model.dense.transition = MatrixXd::Zero(n, n);
  model.dense.process_noise = MatrixXd::Zero(n, n);
  model.dense.measurement_row = RowVectorXd::Zero(n);
  model.dense.measurement_noise = spec.r;

  model.dense.transition(0, 0) = 1.0;
  model.dense.process_noise(0, 0) = spec.q_b * spec.dt;
  model.dense.measurement_row[0] = 1.0;

  // F = -lambda I + omega J; the two parts commute, so exp(F dt) is a decayed
  // rotation and the noise integral collapses to (q / 2 lambda)(1 - e^{-2 lambda dt}) I.
  const double decay = std::exp(-spec.lambda * spec.dt);
  const double noise = spec.q / (2.0 * spec.lambda) * -std::expm1(-2.0 * spec.lambda * spec.dt);
  model.blocks.reserve(m);
  for (std::size_t j = 0; j < m; ++j) {
    const double angle = 2.0 * std::numbers::pi * spec.frequencies[j] * spec.dt;
    const OscillatorBlock b{decay, std::cos(angle), std::sin(angle), noise};
    model.blocks.push_back(b);
    const auto i = static_cast<Eigen::Index>(1 + 2 * j);
    model.dense.transition(i, i) = b.decay * b.c;
    model.dense.transition(i, i + 1) = -b.decay * b.s;
    model.dense.transition(i + 1, i) = b.decay * b.s;
    model.dense.transition(i + 1, i + 1) = b.decay * b.c;
    model.dense.process_noise(i, i) = noise;
    model.dense.process_noise(i + 1, i + 1) = noise;
    model.dense.measurement_row[i] = 1.0;
  }
  return model;
}

/// Right-hand side of the Riccati equation:
///   A P A' + Q - A P H' (H P H' + R)^{-1} H P A'.
inline MatrixXd dare_rhs(const StepModel& model, const MatrixXd& p) {
  const MatrixXd ap = model.transition * p;
  const VectorXd aph = ap * model.measurement_row.transpose();
  const double s = model.measurement_row.dot(p * model.measurement_row.transpose()) + model.measurement_noise;
  MatrixXd out = ap * model.transition.transpose() + model.process_noise - aph * aph.transpose() / s;
  symmetrize(out);
  return out;
}

inline double dare_residual(const StepModel& model, const MatrixXd& p) {
  return (p - dare_rhs(model, p)).cwiseAbs().maxCoeff();
}

enum class DareMethod {
  Doubling,    // structure-preserving doubling, quadratic convergence
  FixedPoint,  // iterate the Riccati recursion from P = Q
};

struct DareOptions {
  double tol = 1e-9;
  std::size_t max_iter = 100000;
  DareMethod method = DareMethod::Doubling;
};

struct StationaryGains {
  MatrixXd p_pred;   // stationary predicted covariance
  VectorXd k;        // filter gain
  MatrixXd g;        // smoother gain
  MatrixXd p_filt;   // stationary filtered covariance
  double residual = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline MatrixXd dare_fixed_point(const StepModel& model, MatrixXd p, const DareOptions& opt,
                                 std::size_t& iterations, double& residual) {
  for (; iterations < opt.max_iter; ++iterations) {
    MatrixXd next = dare_rhs(model, p);
    residual = (next - p).cwiseAbs().maxCoeff();
    p = std::move(next);
    if (residual < opt.tol) break;
  }
  return p;
}

// Doubling for X = At' X (I + G X)^{-1} At + Q with At = A', G = H'H / R.
// After k rounds X_k equals the Riccati recursion advanced 2^k steps.
inline MatrixXd dare_doubling(const StepModel& model, const DareOptions& opt, std::size_t& iterations) {
  const auto n = model.dim();
  MatrixXd a = model.transition.transpose();
  MatrixXd g = model.measurement_row.transpose() * model.measurement_row / model.measurement_noise;
  MatrixXd x = model.process_noise;
  const MatrixXd eye = MatrixXd::Identity(n, n);
  for (; iterations < opt.max_iter; ++iterations) {
    Eigen::PartialPivLU<MatrixXd> w(eye + g * x);
    const MatrixXd wa = w.solve(a);
    const MatrixXd wg = w.solve(g);
    MatrixXd x_next = x + a.transpose() * x * wa;
    MatrixXd g_next = g + a * wg * a.transpose();
    a = (a * wa).eval();
    symmetrize(x_next);
    symmetrize(g_next);
    const double change = (x_next - x).cwiseAbs().maxCoeff();
    x = std::move(x_next);
    g = std::move(g_next);
    if (!x.allFinite()) throw SolverFailure("doubling iteration diverged", change);
    if (change <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) break;
  }
  return x;
}

}  // namespace detail

/// Solve the filtering DARE and derive the stationary filter and smoother
/// gains. Throws SolverFailure if the residual does not drop below opt.tol.
inline StationaryGains solve_dare(const StepModel& model, const DareOptions& opt = {}) {
  if (!(opt.tol > 0.0) || opt.max_iter == 0) throw ConfigurationError("invalid DARE options");
  model.check(model.dim());
  std::size_t iterations = 0;
  double residual = 0.0;
  MatrixXd p;
  if (opt.method == DareMethod::Doubling) {
    p = detail::dare_doubling(model, opt, iterations);
    residual = dare_residual(model, p);
    if (residual >= opt.tol) {
      // Finish off rounding-level leftovers with plain iterations.
      p = detail::dare_fixed_point(model, std::move(p), opt, iterations, residual);
      residual = dare_residual(model, p);
    }
  } else {
    p = detail::dare_fixed_point(model, model.process_noise, opt, iterations, residual);
    residual = dare_residual(model, p);
  }
  if (!(residual < opt.tol)) throw SolverFailure("DARE did not converge", residual);

  StationaryGains out;
  out.p_pred = std::move(p);
  out.residual = residual;
  out.iterations = iterations;

  const VectorXd ph = out.p_pred * model.measurement_row.transpose();
  const double s = model.measurement_row.dot(ph) + model.measurement_noise;
  out.k = ph / s;
  out.p_filt = out.p_pred - ph * ph.transpose() / s;
  symmetrize(out.p_filt);

  // G = P A' (P^-)^{-1}  <=>  P^- G' = A P
  Eigen::LLT<MatrixXd> llt(out.p_pred);
  if (llt.info() != Eigen::Success) {
    const auto n = out.p_pred.rows();
    llt.compute(out.p_pred + 1e-10 * MatrixXd::Identity(n, n));
    if (llt.info() != Eigen::Success) {
      throw SolverFailure("stationary predicted covariance is not positive definite", residual);
    }
  }
  out.g = llt.solve(model.transition * out.p_filt).transpose();
  return out;
}

/// m_k = A m_{k-1} + K (y_k - H A m_{k-1}), no covariance work per step.
inline std::vector<VectorXd> stationary_filter(const OscillatorLtiModel& model, const StationaryGains& gains,
                                               std::span<const double> observations,
                                               const VectorXd& initial_mean) {
  if (initial_mean.size() != model.dim() || gains.k.size() != model.dim()) {
    throw ConfigurationError("stationary filter dimensions do not match the model");
  }
  const auto& h = model.dense.measurement_row;
  std::vector<VectorXd> means;
  means.reserve(observations.size());
  VectorXd m = initial_mean;
  for (std::size_t k = 0; k < observations.size(); ++k) {
    if (!std::isfinite(observations[k])) throw NumericalFailure("non-finite observation", k);
    VectorXd pred = model.apply_transition(m);
    m = pred + gains.k * (observations[k] - h.dot(pred));
    means.push_back(m);
  }
  return means;
}

/// m^s_k = m_k + G (m^s_{k+1} - A m_k), backwards from the last filtered mean.
inline std::vector<VectorXd> stationary_smoother(const OscillatorLtiModel& model, const StationaryGains& gains,
                                                 std::span<const VectorXd> filtered) {
  std::vector<VectorXd> smoothed(filtered.begin(), filtered.end());
  if (smoothed.empty()) return smoothed;
  VectorXd diff(model.dim());
  for (std::size_t k = smoothed.size() - 1; k-- > 0;) {
    diff = smoothed[k + 1] - model.apply_transition(filtered[k]);
    smoothed[k].noalias() += gains.g * diff;
  }
  return smoothed;
}

/// Stationary estimator for one bank: gains are solved once at construction
/// and shared read-only by every estimate() call.
class OscillatorEstimator {
 public:
  explicit OscillatorEstimator(const OscillatorBankSpec& spec, const DareOptions& opt = {})
      : spec_(spec), model_(build_lti_model(spec)), gains_(solve_dare(model_.dense, opt)) {}

  const OscillatorBankSpec& spec() const { return spec_; }
  const OscillatorLtiModel& model() const { return model_; }
  const StationaryGains& gains() const { return gains_; }

  /// Columns still inside the filter transient: ceil(5 / (lambda dt)).
  std::size_t burn_in_steps() const {
    return static_cast<std::size_t>(std::ceil(5.0 / (spec_.lambda * spec_.dt)));
  }

  std::vector<VectorXd> smoothed_means(std::span<const double> observations) const {
    const auto filtered = stationary_filter(model_, gains_, observations, VectorXd::Zero(model_.dim()));
    return stationary_smoother(model_, gains_, filtered);
  }

  SpectroTemporalMatrix estimate(const TimedSignal& signal) const {
    if (!signal.is_uniform()) {
      throw ConfigurationError(
          "oscks needs uniformly sampled input; use fourierks for timestamped signals");
    }
    if (std::abs(signal.dt() - spec_.dt) > 1e-9 * spec_.dt) {
      throw ConfigurationError("signal sampling interval " + std::to_string(signal.dt()) +
                               " s differs from the oscillator bank's dt " + std::to_string(spec_.dt) + " s");
    }
    const auto means = smoothed_means(signal.samples());
    SpectroTemporalMatrix s =
        magnitude_from_coefficients(means, CoefficientLayout::oscillator(spec_.frequencies.size()));
    s.freqs = spec_.frequencies;
    s.times = signal.times();
    s.dt = spec_.dt;
    s.burn_in_cols = std::min(burn_in_steps(), signal.size());
    return s;
  }

 private:
  OscillatorBankSpec spec_;
  OscillatorLtiModel model_;
  StationaryGains gains_;
};

/// One-shot OscKS estimate. Frequencies must be ascending for the output axis.
inline SpectroTemporalMatrix estimate_oscks(const TimedSignal& signal, const OscillatorBankSpec& spec,
                                            const DareOptions& opt = {}) {
  if (!signal.is_uniform()) {
    throw ConfigurationError("oscks needs uniformly sampled input; use fourierks for timestamped signals");
  }
  return OscillatorEstimator(spec, opt).estimate(signal);
}

}  // namespace spectrokal
