#pragma once

// ECG feature engineering: QRS detection, R-peak-centred segmentation and
// averaging of per-segment spectro-temporal estimates into a fixed-size
// feature image.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "spectrokal/errors.hpp"
#include "spectrokal/fourier_model.hpp"
#include "spectrokal/oscillator_model.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal {

struct RPeakList {
  std::vector<std::size_t> positions;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
};

struct SegmentationSpec {
  std::size_t beta = 300;  // samples on each side of the R peak
  double fs = 300.0;
  std::size_t delta = 5;   // re-detect when at most this many peaks are found
  std::size_t alpha = 45;  // blanking half-width in samples

  void validate() const {
    if (beta < 1) throw ConfigurationError("beta must be at least 1");
    if (!(fs > 0.0)) throw ConfigurationError("fs must be positive");
    if (delta < 1) throw ConfigurationError("delta must be at least 1");
  }
};

namespace detail {

inline std::size_t odd_length(double samples) {
  const auto n = static_cast<std::size_t>(std::max(1.0, std::floor(samples)));
  return n % 2 == 1 ? n : n + 1;
}

// Centred moving average; the window shrinks at the edges.
inline std::vector<double> centered_mean(std::span<const double> x, std::size_t len) {
  const std::size_t n = x.size();
  const std::size_t half = len / 2;
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

struct QrsStages {
  std::vector<double> bandpassed;
  std::vector<double> slope;
  std::vector<double> integrated;
};

// Band-pass (about 5-15 Hz), derivative, squaring and moving-window
// integration. The integer filters of the 200 Hz design are a squared moving
// average (low pass) and an all-pass minus moving average (high pass); their
// lengths are rescaled to fs and applied centred, which removes the group
// delay.
inline QrsStages qrs_stages(std::span<const double> y, double fs) {
  const double scale = fs / 200.0;
  const std::size_t lp_len = odd_length(6.0 * scale);
  const std::size_t hp_len = odd_length(32.0 * scale);
  const std::size_t mwi_len = odd_length(0.150 * fs);

  QrsStages st;
  auto lp = centered_mean(centered_mean(y, lp_len), lp_len);
  const auto trend = centered_mean(lp, hp_len);
  st.bandpassed.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) st.bandpassed[i] = lp[i] - trend[i];

  const std::size_t n = y.size();
  st.slope.assign(n, 0.0);
  auto at = [&](std::ptrdiff_t i) {
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n) - 1);
    return st.bandpassed[static_cast<std::size_t>(i)];
  };
  std::vector<double> squared(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::ptrdiff_t>(i);
    st.slope[i] = (2.0 * at(k + 1) + at(k + 2) - at(k - 2) - 2.0 * at(k - 1)) / 8.0 * fs;
    squared[i] = st.slope[i] * st.slope[i];
  }
  st.integrated = centered_mean(squared, mwi_len);
  return st;
}

}  // namespace detail

/// Pan-Tompkins QRS detection with adaptive dual thresholds, search-back,
/// 200 ms refractory period and T-wave rejection. Detected peaks are moved to
/// the raw-signal maximum within +-50 ms.
inline RPeakList pan_tompkins(std::span<const double> y, double fs) {
  if (!(fs >= 100.0)) throw PreconditionError("pan_tompkins needs fs >= 100 Hz");
  if (static_cast<double>(y.size()) < 2.0 * fs) {
    throw PreconditionError("pan_tompkins needs at least 2 s of signal");
  }
  const auto st = detail::qrs_stages(y, fs);
  const auto& mwi = st.integrated;
  const std::size_t n = y.size();
  const auto refractory = static_cast<std::size_t>(std::lround(0.200 * fs));
  const auto t_wave_window = static_cast<std::size_t>(std::lround(0.360 * fs));
  const auto slope_half = static_cast<std::size_t>(std::lround(0.075 * fs));

  const std::size_t learn = std::min(n, static_cast<std::size_t>(2.0 * fs));
  // Constant input leaves only rounding residue in the integrated signal.
  double amplitude = 0.0;
  for (double v : y) amplitude = std::max(amplitude, std::abs(v));
  const double floor = std::pow(1e-10 * amplitude * fs, 2);
  if (!(*std::max_element(mwi.begin(), mwi.end()) > floor)) return {};
  const double learn_max = *std::max_element(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn));
  double spki = learn_max / 3.0;
  double npki = std::accumulate(mwi.begin(), mwi.begin() + static_cast<std::ptrdiff_t>(learn), 0.0) /
                static_cast<double>(learn) / 2.0;
  auto th1 = [&] { return npki + 0.25 * (spki - npki); };

  auto max_slope = [&](std::size_t i) {
    const std::size_t lo = i >= slope_half ? i - slope_half : 0;
    const std::size_t hi = std::min(n, i + slope_half + 1);
    double m = 0.0;
    for (std::size_t k = lo; k < hi; ++k) m = std::max(m, std::abs(st.slope[k]));
    return m;
  };

  // Local maxima of the integrated signal, thinned so that no two are closer
  // than the refractory period (taller ones win).
  std::vector<std::size_t> maxima;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (mwi[i] > mwi[i - 1] && mwi[i] >= mwi[i + 1]) maxima.push_back(i);
  }
  std::vector<std::size_t> by_height = maxima;
  std::stable_sort(by_height.begin(), by_height.end(), [&](std::size_t a, std::size_t b) { return mwi[a] > mwi[b]; });
  std::vector<std::size_t> candidates;
  std::vector<bool> blocked(n, false);
  for (std::size_t i : by_height) {
    if (blocked[i]) continue;
    candidates.push_back(i);
    const std::size_t lo = i >= refractory ? i - refractory + 1 : 0;
    const std::size_t hi = std::min(n, i + refractory);
    std::fill(blocked.begin() + static_cast<std::ptrdiff_t>(lo), blocked.begin() + static_cast<std::ptrdiff_t>(hi), true);
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<std::size_t> qrs;
  std::vector<std::size_t> rr;
  double last_slope = 0.0;
  auto accept = [&](std::size_t i, double weight) {
    if (!qrs.empty()) {
      rr.push_back(i - qrs.back());
      if (rr.size() > 8) rr.erase(rr.begin());
    }
    qrs.push_back(i);
    last_slope = max_slope(i);
    spki = weight * mwi[i] + (1.0 - weight) * spki;
  };

  std::size_t since = 0;  // first candidate after the last accepted beat
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const std::size_t i = candidates[c];

    // Search back over skipped candidates when a beat is overdue.
    if (!rr.empty()) {
      const double rr_avg = std::accumulate(rr.begin(), rr.end(), 0.0) / static_cast<double>(rr.size());
      if (static_cast<double>(i - qrs.back()) > 1.66 * rr_avg) {
        std::size_t best = c;
        for (std::size_t b = since; b < c; ++b) {
          const std::size_t j = candidates[b];
          if (j <= qrs.back() + refractory || j + refractory > i) continue;
          if (mwi[j] > 0.5 * th1() && (best == c || mwi[j] > mwi[candidates[best]])) best = b;
        }
        if (best != c) {
          accept(candidates[best], 0.25);
          since = best + 1;
        }
      }
    }

    if (!qrs.empty() && i < qrs.back() + refractory) continue;
    if (mwi[i] > th1()) {
      if (!qrs.empty() && i < qrs.back() + t_wave_window && max_slope(i) < 0.5 * last_slope) {
        npki = 0.125 * mwi[i] + 0.875 * npki;
        continue;
      }
      accept(i, 0.125);
      since = c + 1;
    } else {
      npki = 0.125 * mwi[i] + 0.875 * npki;
    }
  }

  const auto half = static_cast<std::size_t>(std::lround(0.050 * fs));
  RPeakList out;
  for (std::size_t i : qrs) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    const auto it = std::max_element(y.begin() + static_cast<std::ptrdiff_t>(lo),
                                      y.begin() + static_cast<std::ptrdiff_t>(hi));
    const auto p = static_cast<std::size_t>(it - y.begin());
    if (out.positions.empty() || p > out.positions.back()) out.positions.push_back(p);
  }
  return out;
}

inline RPeakList pan_tompkins(const TimedSignal& signal, double fs) { return pan_tompkins(signal.samples(), fs); }

/// Detection with one blank-and-retry pass: when at most delta peaks are
/// found, +-alpha samples around each of them are zeroed and detection runs
/// again; the second result replaces the first.
inline RPeakList iterative_qrs(std::span<const double> y, const SegmentationSpec& spec) {
  spec.validate();
  RPeakList peaks = pan_tompkins(y, spec.fs);
  if (peaks.size() > spec.delta) return peaks;
  std::vector<double> blanked(y.begin(), y.end());
  for (std::size_t p : peaks.positions) {
    const std::size_t lo = p >= spec.alpha ? p - spec.alpha : 0;
    const std::size_t hi = std::min(blanked.size(), p + spec.alpha + 1);
    std::fill(blanked.begin() + static_cast<std::ptrdiff_t>(lo), blanked.begin() + static_cast<std::ptrdiff_t>(hi), 0.0);
  }
  return pan_tompkins(blanked, spec.fs);
}

inline RPeakList iterative_qrs(const TimedSignal& signal, const SegmentationSpec& spec) {
  return iterative_qrs(signal.samples(), spec);
}

/// Windows of 2 beta + 1 samples centred on the interior peaks (all but the
/// first and last). Peaks whose window leaves the signal are skipped.
inline std::vector<TimedSignal> extract_segments(const TimedSignal& signal, const RPeakList& peaks,
                                                 std::size_t beta) {
  if (peaks.size() < 3) {
    throw TooFewPeaksError("need at least 3 R peaks for segmentation, found " + std::to_string(peaks.size()),
                           peaks.size());
  }
  std::vector<TimedSignal> segments;
  const auto y = signal.samples();
  for (std::size_t i = 1; i + 1 < peaks.size(); ++i) {
    const std::size_t p = peaks.positions[i];
    if (p < beta || p + beta >= signal.size()) continue;
    const std::size_t start = p - beta;
    std::vector<double> values(y.begin() + static_cast<std::ptrdiff_t>(start),
                               y.begin() + static_cast<std::ptrdiff_t>(p + beta + 1));
    if (signal.is_uniform()) {
      segments.push_back(TimedSignal::uniform(std::move(values), signal.dt(), signal.time(start)));
    } else {
      std::vector<double> t(values.size());
      for (std::size_t k = 0; k < t.size(); ++k) t[k] = signal.time(start + k);
      segments.push_back(TimedSignal::timestamped(std::move(values), std::move(t)));
    }
  }
  return segments;
}

using EstimatorSpec = std::variant<FourierBasisSpec, OscillatorBankSpec>;

struct FeaturizeOptions {
  std::size_t jobs = 1;
  DareOptions dare;
  std::function<void()> on_dare_solve;  // instrumentation hook
};

struct FeaturizeResult {
  FeatureMatrix features;
  SpectroTemporalMatrix averaged;
  RPeakList peaks;
  std::size_t segments = 0;
  std::size_t dare_solves = 0;
};

/// QRS detection, segmentation, per-segment estimation, averaging with the
/// max mask and block resizing to 50x50. Segment estimates are combined in
/// segment order, so the result does not depend on `jobs`.
inline FeaturizeResult featurize_detailed(const TimedSignal& signal, const SegmentationSpec& seg,
                                          const EstimatorSpec& estimator, const FeaturizeOptions& opt = {}) {
  seg.validate();
  if (!signal.is_uniform()) throw ConfigurationError("featurize expects a uniformly sampled ECG");
  if (std::abs(signal.dt() * seg.fs - 1.0) > 1e-9) {
    throw ConfigurationError("signal sampling interval does not match fs");
  }

  if (static_cast<double>(signal.size()) < 2.0 * seg.fs) {
    throw TooFewPeaksError("signal is shorter than the 2 s needed for QRS detection", 0);
  }

  FeaturizeResult result;
  result.peaks = iterative_qrs(signal, seg);
  const auto segments = extract_segments(signal, result.peaks, seg.beta);
  if (segments.empty()) {
    throw TooFewPeaksError("no interior R peak has a full +-beta window", result.peaks.size());
  }
  result.segments = segments.size();

  std::function<SpectroTemporalMatrix(const TimedSignal&)> estimate;
  std::optional<OscillatorEstimator> osc;
  if (const auto* f = std::get_if<FourierBasisSpec>(&estimator)) {
    f->validate_for(segments.front());
    estimate = [f](const TimedSignal& s) { return estimate_fourierks(s, *f); };
  } else {
    const auto& o = std::get<OscillatorBankSpec>(estimator);
    if (std::abs(o.dt * seg.fs - 1.0) > 1e-9) {
      throw ConfigurationError("oscillator bank dt does not match 1/fs");
    }
    osc.emplace(o, opt.dare);
    ++result.dare_solves;
    if (opt.on_dare_solve) opt.on_dare_solve();
    estimate = [&osc](const TimedSignal& s) { return osc->estimate(s); };
  }

  std::vector<SpectroTemporalMatrix> spectra(segments.size());
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, segments.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < segments.size(); ++i) spectra[i] = estimate(segments[i]);
  } else {
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(jobs);
    {
      std::vector<std::jthread> workers;
      for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
          try {
            for (std::size_t i = cursor++; i < segments.size(); i = cursor++) spectra[i] = estimate(segments[i]);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (const auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  result.averaged = average_with_max_mask(spectra);
  result.features = resize_block_mean(result.averaged);
  return result;
}

inline FeatureMatrix featurize(const TimedSignal& signal, const SegmentationSpec& seg, const EstimatorSpec& estimator,
                               const FeaturizeOptions& opt = {}) {
  return featurize_detailed(signal, seg, estimator, opt).features;
}

}  // namespace spectrokal
