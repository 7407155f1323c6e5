#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spectrokal/errors.hpp"

namespace spectrokal {

/// A scalar signal together with its sample times.
///
/// Sampling is either uniform (start time plus a positive step) or given by
/// explicit, strictly increasing timestamps. Samples must be finite and there
/// must be at least two of them.
class TimedSignal {
 public:
  static TimedSignal uniform(std::vector<double> samples, double dt, double t0 = 0.0) {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
      throw ConfigurationError("sampling interval must be positive and finite");
    }
    TimedSignal s;
    s.samples_ = std::move(samples);
    s.dt_ = dt;
    s.t0_ = t0;
    s.validate_samples();
    return s;
  }

  static TimedSignal timestamped(std::vector<double> samples, std::vector<double> times) {
    if (samples.size() != times.size()) {
      throw ConfigurationError("samples and timestamps differ in length");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
      if (!(times[k] > times[k - 1])) {
        throw ConfigurationError("timestamps must be strictly increasing (index " +
                                 std::to_string(k) + ")");
      }
    }
    TimedSignal s;
    s.samples_ = std::move(samples);
    s.times_ = std::move(times);
    s.validate_samples();
    return s;
  }

  std::size_t size() const noexcept { return samples_.size(); }
  std::span<const double> samples() const noexcept { return samples_; }
  double operator[](std::size_t k) const { return samples_[k]; }

  bool is_uniform() const noexcept { return dt_.has_value(); }

  /// Sampling interval; only meaningful for uniform signals.
  double dt() const {
    if (!dt_) throw ConfigurationError("signal is not uniformly sampled");
    return *dt_;
  }

  double time(std::size_t k) const {
    return dt_ ? t0_ + static_cast<double>(k) * *dt_ : times_[k];
  }

  std::vector<double> times() const {
    if (!dt_) return times_;
    std::vector<double> t(size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = time(k);
    return t;
  }

  /// Mean spacing, used as the nominal column spacing of estimates.
  double mean_dt() const {
    if (dt_) return *dt_;
    return (times_.back() - times_.front()) / static_cast<double>(size() - 1);
  }

 private:
  TimedSignal() = default;

  void validate_samples() const {
    if (samples_.size() < 2) throw ConfigurationError("signal needs at least two samples");
    for (std::size_t k = 0; k < samples_.size(); ++k) {
      if (!std::isfinite(samples_[k])) {
        throw ConfigurationError("non-finite sample at index " + std::to_string(k));
      }
    }
  }

  std::vector<double> samples_;
  std::optional<double> dt_;
  double t0_ = 0.0;
  std::vector<double> times_;
};

}  // namespace spectrokal
