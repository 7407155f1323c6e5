#pragma once

// Linear-Gaussian state-space machinery with a scalar measurement per step:
// Kalman filter forward pass and Rauch-Tung-Striebel smoother backward pass.
//
// Step indexing is zero-based. The model returned by provider(k) maps the
// state at step k-1 (the prior, for k = 0) to the state at step k and
// describes the measurement y[k].

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "spectrokal/errors.hpp"

namespace spectrokal {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-9;

struct GaussianState {
  VectorXd mean;
  MatrixXd cov;

  Eigen::Index dim() const { return mean.size(); }
};

inline void symmetrize(MatrixXd& m) { m = (0.5 * (m + m.transpose())).eval(); }

inline double max_asymmetry(const MatrixXd& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); }

/// One step of a linear-Gaussian model:
///   x_k = transition * x_{k-1} + w_k,   w_k ~ N(0, process_noise)
///   y_k = measurement_row * x_k + r_k,  r_k ~ N(0, measurement_noise)
struct StepModel {
  MatrixXd transition;
  MatrixXd process_noise;
  RowVectorXd measurement_row;
  double measurement_noise = 1.0;

  Eigen::Index dim() const { return transition.rows(); }

  void check(Eigen::Index n) const {
    if (transition.rows() != n || transition.cols() != n) {
      throw ConfigurationError("transition is not " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (process_noise.rows() != n || process_noise.cols() != n) {
      throw ConfigurationError("process noise is not " + std::to_string(n) + "x" + std::to_string(n));
    }
    if (measurement_row.size() != n) {
      throw ConfigurationError("measurement row length differs from state dimension");
    }
    if (!(measurement_noise > 0.0)) throw ConfigurationError("measurement noise must be positive");
  }
};

/// Model whose transition and process noise are diagonal. Stored as vectors.
struct DiagonalStepModel {
  VectorXd transition;
  VectorXd process_noise;
  RowVectorXd measurement_row;
  double measurement_noise = 1.0;

  StepModel to_dense() const {
    return {transition.asDiagonal(), process_noise.asDiagonal(), measurement_row, measurement_noise};
  }
};

template <class P>
concept StepModelProvider = requires(const P& p, std::size_t k) {
  { p(k) } -> std::convertible_to<const StepModel&>;
};

template <class P>
concept DiagonalModelProvider = requires(const P& p, std::size_t k) {
  { p(k) } -> std::convertible_to<const DiagonalStepModel&>;
};

/// Provider for time-invariant models; hands out the same model at every step.
class ConstantModel {
 public:
  explicit ConstantModel(const StepModel& model) : model_(&model) {}
  const StepModel& operator()(std::size_t) const { return *model_; }

 private:
  const StepModel* model_;
};

enum class TraceMode { Full, MeansOnly };

/// Everything the forward pass produces. In MeansOnly mode the covariance
/// members of the stored states are left empty.
struct FilterTrace {
  std::vector<GaussianState> filtered;
  std::vector<GaussianState> predicted;
  std::vector<VectorXd> gains;
  std::vector<double> innovation_variances;
  TraceMode mode = TraceMode::Full;

  std::size_t size() const { return filtered.size(); }
};

namespace detail {

inline void check_finite(const VectorXd& v, std::size_t step, const char* what) {
  if (!v.allFinite()) throw NumericalFailure(std::string("non-finite ") + what, step);
}

inline void check_innovation(double s, std::size_t step) {
  if (!std::isfinite(s) || !(s > 0.0)) {
    throw NumericalFailure("innovation variance is not positive and finite", step);
  }
}

}  // namespace detail

template <StepModelProvider Provider>
FilterTrace kalman_filter(const Provider& models, std::span<const double> observations,
                          const GaussianState& prior, TraceMode mode = TraceMode::Full) {
  if (observations.empty()) throw PreconditionError("kalman_filter: no observations");
  const Eigen::Index n = prior.mean.size();
  if (prior.cov.rows() != n || prior.cov.cols() != n) {
    throw ConfigurationError("prior covariance does not match prior mean");
  }
  const std::size_t steps = observations.size();

  FilterTrace trace;
  trace.mode = mode;
  trace.filtered.reserve(steps);
  trace.predicted.reserve(steps);
  trace.gains.reserve(steps);
  trace.innovation_variances.reserve(steps);

  VectorXd m = prior.mean;
  MatrixXd p = prior.cov;
  for (std::size_t k = 0; k < steps; ++k) {
    const StepModel& model = models(k);
    model.check(n);
    const auto& a = model.transition;
    const auto& h = model.measurement_row;

    VectorXd m_pred = a * m;
    MatrixXd p_pred = a * p * a.transpose() + model.process_noise;
    symmetrize(p_pred);

    const VectorXd ph = p_pred * h.transpose();
    const double s = h.dot(ph) + model.measurement_noise;
    detail::check_innovation(s, k);
    VectorXd gain = ph / s;

    m = m_pred + gain * (observations[k] - h.dot(m_pred));
    p = p_pred - gain * s * gain.transpose();
    symmetrize(p);
    detail::check_finite(m, k, "filtered mean");

    if (mode == TraceMode::Full) {
      trace.predicted.push_back({std::move(m_pred), std::move(p_pred)});
      trace.filtered.push_back({m, p});
    } else {
      trace.predicted.push_back({std::move(m_pred), {}});
      trace.filtered.push_back({m, {}});
    }
    trace.gains.push_back(std::move(gain));
    trace.innovation_variances.push_back(s);
  }
  return trace;
}

/// RTS smoother over a full trace produced by kalman_filter with the same
/// provider. Smoother gains come from a Cholesky solve against the predicted
/// covariance; on failure the solve is retried once with 1e-10 jitter.
template <StepModelProvider Provider>
std::vector<GaussianState> rts_smoother(const FilterTrace& trace, const Provider& models) {
  if (trace.mode != TraceMode::Full) {
    throw PreconditionError("rts_smoother needs a trace with covariances");
  }
  const std::size_t steps = trace.size();
  if (steps == 0) return {};

  std::vector<GaussianState> smoothed(steps);
  smoothed[steps - 1] = trace.filtered[steps - 1];
  for (std::size_t k = steps - 1; k-- > 0;) {
    const GaussianState& filt = trace.filtered[k];
    const GaussianState& pred_next = trace.predicted[k + 1];
    const StepModel& next = models(k + 1);

    // G = P_k A' (P-_{k+1})^{-1}  <=>  P-_{k+1} G' = A P_k
    const MatrixXd rhs = next.transition * filt.cov;
    Eigen::LLT<MatrixXd> llt(pred_next.cov);
    if (llt.info() != Eigen::Success) {
      const auto n = pred_next.cov.rows();
      llt.compute(pred_next.cov + 1e-10 * MatrixXd::Identity(n, n));
      if (llt.info() != Eigen::Success) {
        throw NumericalFailure("predicted covariance is singular", k + 1);
      }
    }
    const MatrixXd g = llt.solve(rhs).transpose();

    GaussianState& out = smoothed[k];
    out.mean = filt.mean + g * (smoothed[k + 1].mean - pred_next.mean);
    out.cov = filt.cov + g * (smoothed[k + 1].cov - pred_next.cov) * g.transpose();
    symmetrize(out.cov);
    detail::check_finite(out.mean, k, "smoothed mean");
  }
  return smoothed;
}

/// Smoothed means for diagonal-transition models without storing per-step
/// covariances.
///
/// The backward pass uses the adjoint form of the RTS recursion:
///   m^s_k     = m_k + P_k v_k,
///   r_{k-1}   = H_k' e_k / S_k + (I - K_k H_k)' v_k,
///   v_{k-1}   = Psi_k r_{k-1},          v_{N-1} = 0,
/// which equals G_k (m^s_{k+1} - m^-_{k+1}) without factorizing P^-. Filtered
/// covariances are checkpointed every `stride` steps and recomputed block by
/// block on the way back, so memory is O((N/stride + stride) n^2).
/// stride = 0 picks ceil(sqrt(N)).
template <DiagonalModelProvider Provider>
std::vector<VectorXd> diagonal_mean_smoother(const Provider& models,
                                             std::span<const double> observations,
                                             const GaussianState& prior, std::size_t stride = 0) {
  const std::size_t steps = observations.size();
  if (steps == 0) throw PreconditionError("diagonal_mean_smoother: no observations");
  const Eigen::Index n = prior.mean.size();
  if (prior.cov.rows() != n || prior.cov.cols() != n) {
    throw ConfigurationError("prior covariance does not match prior mean");
  }
  if (stride == 0) {
    stride = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(steps))));
  }

  // Covariance part of one filter step. Psi and the rank-one downdate are
  // applied elementwise as products of equal factors, so P stays exactly
  // symmetric without an explicit symmetrization pass.
  auto advance = [n](const DiagonalStepModel& model, MatrixXd& p, VectorXd& ph, std::size_t k) {
    if (model.transition.size() != n || model.process_noise.size() != n ||
        model.measurement_row.size() != n) {
      throw ConfigurationError("diagonal model does not match state dimension");
    }
    if (!(model.measurement_noise > 0.0)) {
      throw ConfigurationError("measurement noise must be positive");
    }
    const auto& psi = model.transition;
    for (Eigen::Index j = 0; j < n; ++j) {
      p.col(j).array() *= psi.array() * psi[j];
    }
    p.diagonal() += model.process_noise;
    ph.noalias() = p * model.measurement_row.transpose();
    const double s = model.measurement_row.dot(ph) + model.measurement_noise;
    detail::check_innovation(s, k);
    const VectorXd w = ph / std::sqrt(s);
    p.noalias() -= w * w.transpose();
    return s;
  };

  std::vector<VectorXd> means(steps);
  std::vector<VectorXd> gains(steps);
  std::vector<double> weighted_innov(steps);  // e_k / S_k
  std::vector<MatrixXd> checkpoints;
  checkpoints.reserve(steps / stride + 1);

  VectorXd m = prior.mean;
  MatrixXd p = prior.cov;
  VectorXd ph(n);
  for (std::size_t k = 0; k < steps; ++k) {
    if (k % stride == 0) checkpoints.push_back(p);
    const DiagonalStepModel& model = models(k);
    const double s = advance(model, p, ph, k);
    m = model.transition.cwiseProduct(m);
    const double e = observations[k] - model.measurement_row.dot(m);
    gains[k] = ph / s;
    m += gains[k] * e;
    detail::check_finite(m, k, "filtered mean");
    weighted_innov[k] = e / s;
    means[k] = m;
  }

  VectorXd v = VectorXd::Zero(n);
  std::vector<MatrixXd> block;
  for (std::size_t b = checkpoints.size(); b-- > 0;) {
    const std::size_t first = b * stride;
    const std::size_t last = std::min(first + stride, steps);
    block.resize(last - first);
    p = checkpoints[b];
    for (std::size_t k = first; k < last; ++k) {
      advance(models(k), p, ph, k);
      block[k - first] = p;
    }
    for (std::size_t k = last; k-- > first;) {
      const DiagonalStepModel& model = models(k);
      const auto& h = model.measurement_row;
      const double kv = gains[k].dot(v);
      means[k].noalias() += block[k - first] * v;
      detail::check_finite(means[k], k, "smoothed mean");
      // r_{k-1} = H' (e/S) + v - H' (K . v)
      v += h.transpose() * (weighted_innov[k] - kv);
      v = model.transition.cwiseProduct(v);
    }
  }
  return means;
}

}  // namespace spectrokal
