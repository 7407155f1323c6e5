#pragma once

// Simulated multi-sinusoid signals, an STFT baseline, a frequency-recovery
// score and the wall-clock comparison of the estimators.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spectrokal/errors.hpp"
#include "spectrokal/fourier_model.hpp"
#include "spectrokal/oscillator_model.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal {

struct SinusoidRegime {
  double t_start;
  double t_end;  // exclusive
  std::vector<double> freqs;
};

struct PiecewiseSinusoidSpec {
  std::vector<SinusoidRegime> regimes;
  double noise_sd = 0.1;
  double dt = 0.1;
  std::uint64_t seed = 42;

  /// Five regimes of unit sinusoid pairs on [1, 500) s.
  static PiecewiseSinusoidSpec standard() {
    PiecewiseSinusoidSpec s;
    s.regimes = {
        {1.0, 150.0, {0.01, 0.3}},
        {150.0, 250.0, {0.2, 0.3}},
        {250.0, 300.0, {0.13, 0.2}},
        {300.0, 400.0, {0.2, 0.43}},
        {400.0, 500.0, {0.1, 0.43}},
    };
    return s;
  }

  double t_begin() const { return regimes.front().t_start; }
  double t_end() const { return regimes.back().t_end; }

  void validate() const {
    if (regimes.empty()) throw ConfigurationError("no sinusoid regimes");
    if (!(dt > 0.0)) throw ConfigurationError("dt must be positive");
    if (!(noise_sd >= 0.0)) throw ConfigurationError("noise_sd must be nonnegative");
    for (std::size_t i = 0; i < regimes.size(); ++i) {
      if (!(regimes[i].t_end > regimes[i].t_start)) throw ConfigurationError("empty regime");
      if (i > 0 && regimes[i].t_start != regimes[i - 1].t_end) {
        throw ConfigurationError("regimes must be contiguous and ascending");
      }
    }
  }

  /// Regime containing t, or nullptr outside [t_begin, t_end).
  const SinusoidRegime* regime_at(double t) const {
    for (const auto& r : regimes) {
      if (t >= r.t_start && t < r.t_end) return &r;
    }
    return nullptr;
  }

  /// Number of samples t_begin + k dt strictly below t_end.
  std::size_t sample_count() const {
    const double span = (t_end() - t_begin()) / dt;
    auto n = static_cast<std::size_t>(std::ceil(span - 1e-9));
    return std::max<std::size_t>(n, 2);
  }
};

inline double noiseless_value(const PiecewiseSinusoidSpec& spec, double t) {
  const SinusoidRegime* r = spec.regime_at(t);
  if (r == nullptr) return 0.0;
  double v = 0.0;
  for (double f : r->freqs) v += std::sin(2.0 * std::numbers::pi * f * t);
  return v;
}

inline TimedSignal generate_simulated(const PiecewiseSinusoidSpec& spec) {
  spec.validate();
  const std::size_t n = spec.sample_count();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = spec.t_begin() + static_cast<double>(k) * spec.dt;
    y[k] = noiseless_value(spec, t) + spec.noise_sd * noise(rng);
  }
  return TimedSignal::uniform(std::move(y), spec.dt, spec.t_begin());
}

enum class WindowKind { Hann, Rectangular };

struct StftSpec {
  std::size_t window_len = 350;
  std::size_t overlap = 340;
  WindowKind window = WindowKind::Hann;
  double f0 = 0.01;
  std::size_t num_freq = 50;
};

inline std::vector<double> make_window(WindowKind kind, std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (kind == WindowKind::Hann && len > 1) {
    for (std::size_t i = 0; i < len; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                  static_cast<double>(len - 1));
    }
  }
  return w;
}

/// Windowed DFT magnitudes evaluated on the harmonic grid j * f0, scaled so a
/// unit-amplitude sinusoid on the grid reads about 1. Column k is centred on
/// the middle sample of its window.
inline SpectroTemporalMatrix stft_baseline(const TimedSignal& signal, const StftSpec& spec) {
  if (!signal.is_uniform()) throw ConfigurationError("stft needs uniformly sampled input");
  if (spec.window_len < 2 || spec.window_len > signal.size()) {
    throw ConfigurationError("stft window length must be in [2, N]");
  }
  if (spec.overlap >= spec.window_len) throw ConfigurationError("stft overlap must be below the window length");
  if (spec.num_freq < 1 || !(spec.f0 > 0.0)) throw ConfigurationError("stft frequency grid is empty");

  const std::size_t len = spec.window_len;
  const std::size_t hop = len - spec.overlap;
  const std::size_t frames = (signal.size() - len) / hop + 1;
  const auto w = make_window(spec.window, len);
  const double scale = 2.0 / std::accumulate(w.begin(), w.end(), 0.0);
  const double dt = signal.dt();

  // twiddle(j, i) = w_i exp(-2 pi i f_j i dt)
  Eigen::MatrixXcd twiddle(static_cast<Eigen::Index>(spec.num_freq), static_cast<Eigen::Index>(len));
  for (std::size_t j = 0; j < spec.num_freq; ++j) {
    const double f = static_cast<double>(j + 1) * spec.f0;
    for (std::size_t i = 0; i < len; ++i) {
      twiddle(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
          w[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(i) * dt);
    }
  }

  SpectroTemporalMatrix s;
  s.values.resize(twiddle.rows(), static_cast<Eigen::Index>(frames));
  s.freqs = harmonic_frequencies(spec.f0, spec.num_freq);
  s.times.resize(frames);
  s.dt = static_cast<double>(hop) * dt;
  const auto samples = signal.samples();
  Eigen::VectorXcd frame(static_cast<Eigen::Index>(len));
  for (std::size_t c = 0; c < frames; ++c) {
    const std::size_t start = c * hop;
    for (std::size_t i = 0; i < len; ++i) frame[static_cast<Eigen::Index>(i)] = samples[start + i];
    s.values.col(static_cast<Eigen::Index>(c)) = (twiddle * frame).cwiseAbs() * scale;
    s.times[c] = signal.time(start) + 0.5 * static_cast<double>(len - 1) * dt;
  }
  return s;
}

/// Fraction of evaluated columns whose top_k rows cover every true frequency
/// of the active regime within one grid spacing. Columns outside the truth's
/// span or within `guard` seconds of a regime boundary are not evaluated.
inline double frequency_recovery_score(const SpectroTemporalMatrix& s, const PiecewiseSinusoidSpec& truth,
                                       std::size_t top_k = 2, double guard = 5.0) {
  if (s.rows() == 0 || s.cols() == 0 || s.times.size() != static_cast<std::size_t>(s.cols())) return 0.0;
  const double spacing = s.freqs.size() > 1 ? s.freqs[1] - s.freqs[0] : s.freqs[0];
  const std::size_t k_eff = std::min<std::size_t>(top_k, static_cast<std::size_t>(s.rows()));

  std::size_t evaluated = 0;
  std::size_t hits = 0;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(s.rows()));
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    const double t = s.times[static_cast<std::size_t>(c)];
    const SinusoidRegime* regime = truth.regime_at(t);
    if (regime == nullptr) continue;
    bool near_boundary = false;
    for (std::size_t i = 1; i < truth.regimes.size(); ++i) {
      if (std::abs(t - truth.regimes[i].t_start) <= guard) near_boundary = true;
    }
    if (near_boundary) continue;
    ++evaluated;

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_eff), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return s.values(a, c) > s.values(b, c); });
    bool all_found = true;
    for (double f : regime->freqs) {
      bool found = false;
      for (std::size_t i = 0; i < k_eff; ++i) {
        if (std::abs(s.freqs[static_cast<std::size_t>(order[i])] - f) <= spacing * (1.0 + 1e-9)) found = true;
      }
      all_found = all_found && found;
    }
    if (all_found) ++hits;
  }
  return evaluated == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(evaluated);
}

/// Parameters used for the simulated comparison: lambda = 0.01, f0 = 0.01,
/// 50 harmonics. The oscillator diffusion is 2 lambda q so both models share
/// the same stationary coefficient variance q.
struct SimulationEstimatorParams {
  double f0 = 0.01;
  std::size_t num_freq = 50;
  double lambda = 0.01;
  double q = 1.0;
  double r = 0.01;
  double q_b = 1e-7;

  FourierBasisSpec fourier() const {
    FourierBasisSpec s;
    s.f0 = f0;
    s.num_harmonics = num_freq;
    s.lambda = lambda;
    s.q = q;
    s.r = r;
    return s;
  }

  OscillatorBankSpec oscillator(double dt) const {
    OscillatorBankSpec s = OscillatorBankSpec::harmonic(f0, num_freq, dt);
    s.lambda = lambda;
    s.q = 2.0 * lambda * q;
    s.q_b = q_b;
    s.r = r;
    return s;
  }
};

enum class BenchMethod { FourierKS, OscKS, Stft };

inline std::string to_string(BenchMethod m) {
  switch (m) {
    case BenchMethod::FourierKS: return "fourierks";
    case BenchMethod::OscKS: return "oscks";
    case BenchMethod::Stft: return "stft";
  }
  return "unknown";
}

struct BenchRow {
  std::string method;
  std::size_t length;
  std::size_t repeat;
  std::string phase;  // total, dare, filter
  double seconds;
};

struct BenchSummary {
  double mean = 0.0;
  double min = 0.0;
  std::size_t count = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<std::size_t> lengths;
  std::size_t repeats = 0;
  std::string machine_note;

  /// Mean and min over repeats for one (method, length, phase) cell.
  BenchSummary summary(const std::string& method, std::size_t length, const std::string& phase = "total") const {
    BenchSummary out;
    double sum = 0.0;
    for (const auto& r : rows) {
      if (r.method != method || r.length != length || r.phase != phase) continue;
      out.min = out.count == 0 ? r.seconds : std::min(out.min, r.seconds);
      sum += r.seconds;
      ++out.count;
    }
    if (out.count > 0) out.mean = sum / static_cast<double>(out.count);
    return out;
  }

  void write_csv(std::ostream& os) const {
    os << "method,length,repeat,phase,seconds\n";
    os.precision(9);
    for (const auto& r : rows) {
      os << r.method << ',' << r.length << ',' << r.repeat << ',' << r.phase << ',' << r.seconds << '\n';
    }
  }
};

struct BenchConfig {
  std::vector<BenchMethod> methods{BenchMethod::FourierKS, BenchMethod::OscKS, BenchMethod::Stft};
  std::vector<std::size_t> lengths{5000, 50000};
  std::size_t repeats = 20;
  SimulationEstimatorParams params;
  StftSpec stft;
  std::uint64_t seed = 42;
};

/// Simulated signal with exactly `length` samples spanning the standard
/// regimes: dt = 499 / length.
inline TimedSignal bench_signal(std::size_t length, std::uint64_t seed) {
  PiecewiseSinusoidSpec spec = PiecewiseSinusoidSpec::standard();
  spec.seed = seed;
  spec.dt = (spec.t_end() - spec.t_begin()) / static_cast<double>(length);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> y(length);
  for (std::size_t k = 0; k < length; ++k) {
    const double t = spec.t_begin() + static_cast<double>(k) * spec.dt;
    y[k] = noiseless_value(spec, t) + spec.noise_sd * noise(rng);
  }
  return TimedSignal::uniform(std::move(y), spec.dt, spec.t_begin());
}

/// Wall-clock timings, one untimed warm-up per (method, length). Runs
/// sequentially on the calling thread.
inline BenchReport run_benchmark(const BenchConfig& config) {
  if (config.repeats < 1) throw ConfigurationError("repeats must be at least 1");
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

  BenchReport report;
  report.lengths = config.lengths;
  report.repeats = config.repeats;
  report.machine_note = "steady_clock wall time, single thread";

  for (std::size_t length : config.lengths) {
    const TimedSignal signal = bench_signal(length, config.seed);
    const FourierBasisSpec fspec = config.params.fourier();
    const OscillatorBankSpec ospec = config.params.oscillator(signal.dt());
    double sink = 0.0;  // keeps results observable

    for (BenchMethod method : config.methods) {
      const std::string name = to_string(method);
      for (std::size_t rep = 0; rep <= config.repeats; ++rep) {
        const bool warmup = rep == 0;
        switch (method) {
          case BenchMethod::FourierKS: {
            const auto t0 = clock::now();
            const auto s = estimate_fourierks(signal, fspec);
            const auto t1 = clock::now();
            sink += s.values(0, 0);
            if (!warmup) report.rows.push_back({name, length, rep, "total", seconds(t1 - t0)});
            break;
          }
          case BenchMethod::OscKS: {
            const auto t0 = clock::now();
            const OscillatorEstimator est(ospec);
            const auto t1 = clock::now();
            const auto s = est.estimate(signal);
            const auto t2 = clock::now();
            sink += s.values(0, 0);
            if (!warmup) {
              report.rows.push_back({name, length, rep, "dare", seconds(t1 - t0)});
              report.rows.push_back({name, length, rep, "filter", seconds(t2 - t1)});
              report.rows.push_back({name, length, rep, "total", seconds(t2 - t0)});
            }
            break;
          }
          case BenchMethod::Stft: {
            StftSpec st = config.stft;
            st.f0 = config.params.f0;
            st.num_freq = config.params.num_freq;
            st.window_len = std::min(st.window_len, signal.size());
            st.overlap = std::min(st.overlap, st.window_len - 1);
            const auto t0 = clock::now();
            const auto s = stft_baseline(signal, st);
            const auto t1 = clock::now();
            sink += s.values(0, 0);
            if (!warmup) report.rows.push_back({name, length, rep, "total", seconds(t1 - t0)});
            break;
          }
        }
      }
    }
    if (!std::isfinite(sink)) report.machine_note += " (non-finite estimate observed)";
  }
  return report;
}

}  // namespace spectrokal
