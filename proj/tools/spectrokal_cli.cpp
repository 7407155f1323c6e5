// spectrokal command-line tool: simulate, estimate, featurize, bench.
//
// Exit codes: 0 success, 1 usage, 2 numerical/configuration/I-O failure,
// 3 too few R peaks.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spectrokal/spectrokal.hpp"

namespace sk = spectrokal;
namespace io = spectrokal::io;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kFailure = 2, kTooFewPeaks = 3 };

struct EstimatorFlags {
  double f0 = 0.1;
  std::size_t num_freq = 400;
  double lambda = 10.0;
  double q = 1.0;
  double r = 1.0;
  double qb = 1e-7;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--f0", f0, "Frequency grid spacing in Hz")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--num-freq", num_freq, "Number of frequencies M (rows j*f0, j=1..M)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--lambda", lambda, "Coefficient damping lambda (1/s)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--q", q, "Coefficient diffusion q")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--r", r, "Measurement noise variance R")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--qb", qb, "Bias diffusion q_b (oscks only)")->check(CLI::NonNegativeNumber)->capture_default_str();
  }

  sk::FourierBasisSpec fourier() const {
    sk::FourierBasisSpec s;
    s.f0 = f0;
    s.num_harmonics = num_freq;
    s.lambda = lambda;
    s.q = q;
    s.r = r;
    return s;
  }

  sk::OscillatorBankSpec oscillator(double dt) const {
    auto s = sk::OscillatorBankSpec::harmonic(f0, num_freq, dt);
    s.lambda = lambda;
    s.q = q;
    s.q_b = qb;
    s.r = r;
    return s;
  }
};

const std::map<std::string, sk::WindowKind> kWindows{{"hann", sk::WindowKind::Hann},
                                                      {"rect", sk::WindowKind::Rectangular}};

int run_simulate(const std::string& out_path, double dt, double noise_sd, std::uint64_t seed) {
  auto spec = sk::PiecewiseSinusoidSpec::standard();
  spec.dt = dt;
  spec.noise_sd = noise_sd;
  spec.seed = seed;
  const auto signal = sk::generate_simulated(spec);
  auto out = io::open_for_writing(out_path);
  io::write_signal(out, signal);
  return kOk;
}

struct EstimateArgs {
  std::string method = "fourierks";
  std::string input;
  std::optional<double> dt;
  EstimatorFlags est;
  std::string window = "hann";
  std::size_t window_len = 350;
  std::size_t overlap = 340;
  std::string out;
  std::string pgm;
};

int run_estimate(const EstimateArgs& a) {
  const auto signal = io::read_signal_file(a.input, a.dt);
  sk::SpectroTemporalMatrix s;
  if (a.method == "fourierks") {
    s = sk::estimate_fourierks(signal, a.est.fourier());
  } else if (a.method == "oscks") {
    if (!signal.is_uniform()) {
      throw sk::ConfigurationError("oscks needs uniformly sampled input; use --method fourierks for timestamped signals");
    }
    s = sk::estimate_oscks(signal, a.est.oscillator(signal.dt()));
  } else {
    sk::StftSpec st;
    st.window_len = a.window_len;
    st.overlap = a.overlap;
    st.window = kWindows.at(a.window);
    st.f0 = a.est.f0;
    st.num_freq = a.est.num_freq;
    s = sk::stft_baseline(signal, st);
  }
  auto out = io::open_for_writing(a.out);
  io::write_spectrogram(out, s, a.method, a.est.f0);
  if (!a.pgm.empty()) io::write_pgm_file(a.pgm, s.values);
  return kOk;
}

struct FeaturizeArgs {
  std::string input;
  sk::SegmentationSpec seg;
  std::string method = "oscks";
  EstimatorFlags est;
  std::size_t jobs = 1;
  std::string out;
  std::string pgm;
};

int run_featurize(const FeaturizeArgs& a) {
  const auto raw = io::read_signal_file(a.input, 1.0 / a.seg.fs);
  if (!raw.is_uniform()) throw sk::ConfigurationError("featurize expects a uniformly sampled ECG");
  // Resample the time axis to exactly 1/fs when the file carried times.
  const std::vector<double> y(raw.samples().begin(), raw.samples().end());
  const auto signal = sk::TimedSignal::uniform(y, 1.0 / a.seg.fs, raw.time(0));
  if (std::abs(raw.dt() * a.seg.fs - 1.0) > 1e-3) {
    throw sk::ConfigurationError("input sampling interval " + std::to_string(raw.dt()) + " s does not match --fs " +
                                 std::to_string(a.seg.fs));
  }
  sk::EstimatorSpec spec;
  if (a.method == "oscks") {
    spec = a.est.oscillator(1.0 / a.seg.fs);
  } else {
    spec = a.est.fourier();
  }
  sk::FeaturizeOptions opt;
  opt.jobs = a.jobs;
  const auto result = sk::featurize_detailed(signal, a.seg, spec, opt);
  auto out = io::open_for_writing(a.out);
  io::write_matrix(out, result.features.values);
  if (!a.pgm.empty()) io::write_pgm_file(a.pgm, result.features.values);
  std::fprintf(stderr, "%zu R peaks, %zu segments averaged\n", result.peaks.size(), result.segments);
  return kOk;
}

struct BenchArgs {
  std::vector<std::size_t> lengths{5000, 50000};
  std::size_t repeats = 20;
  std::vector<std::string> methods{"fourierks", "oscks", "stft"};
  std::uint64_t seed = 42;
  std::string out;
};

int run_bench(const BenchArgs& a) {
  sk::BenchConfig config;
  config.lengths = a.lengths;
  config.repeats = a.repeats;
  config.seed = a.seed;
  config.methods.clear();
  for (const auto& m : a.methods) {
    config.methods.push_back(m == "fourierks" ? sk::BenchMethod::FourierKS
                             : m == "oscks"   ? sk::BenchMethod::OscKS
                                              : sk::BenchMethod::Stft);
  }
  const auto report = sk::run_benchmark(config);
  if (!a.out.empty()) {
    auto out = io::open_for_writing(a.out);
    report.write_csv(out);
  }

  std::printf("%-10s %8s %-7s %12s %12s\n", "method", "length", "phase", "mean_s", "min_s");
  for (std::size_t length : a.lengths) {
    for (const auto& m : a.methods) {
      for (const char* phase : {"dare", "filter", "total"}) {
        const auto cell = report.summary(m, length, phase);
        if (cell.count == 0) continue;
        std::printf("%-10s %8zu %-7s %12.6f %12.6f\n", m.c_str(), length, phase, cell.mean, cell.min);
      }
    }
    const auto fourier = report.summary("fourierks", length);
    const auto osc = report.summary("oscks", length);
    if (fourier.count > 0 && osc.count > 0 && osc.mean > 0.0) {
      std::printf("speedup oscks vs fourierks at length %zu: %.1fx\n", length, fourier.mean / osc.mean);
    }
  }
  std::printf("(%s, %zu repeats after one warm-up)\n", report.machine_note.c_str(), report.repeats);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectro-temporal estimation with Kalman smoothers"};
  app.require_subcommand(1);

  std::string sim_out;
  double sim_dt = 0.1;
  double sim_noise = 0.1;
  std::uint64_t sim_seed = 42;
  auto* simulate = app.add_subcommand("simulate", "Write the piecewise multi-sinusoid test signal as time,value CSV");
  simulate->add_option("--out", sim_out, "Output CSV path")->required();
  simulate->add_option("--dt", sim_dt, "Sampling interval in s")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--noise-sd", sim_noise, "Standard deviation of the additive noise")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  simulate->add_option("--seed", sim_seed, "Noise seed")->capture_default_str();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate a spectro-temporal magnitude matrix");
  estimate->add_option("--method", est.method, "Estimator")
      ->check(CLI::IsMember({"fourierks", "oscks", "stft"}))
      ->capture_default_str();
  estimate->add_option("--input", est.input, "Signal CSV: value per line (needs --dt) or time,value")
      ->required()
      ->check(CLI::ExistingFile);
  estimate->add_option("--dt", est.dt, "Sampling interval for single-column input")->check(CLI::PositiveNumber);
  est.est.add_to(estimate);
  estimate->add_option("--window", est.window, "STFT window")->check(CLI::IsMember({"hann", "rect"}))->capture_default_str();
  estimate->add_option("--window-len", est.window_len, "STFT window length in samples")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 30))
      ->capture_default_str();
  estimate->add_option("--overlap", est.overlap, "STFT overlap in samples")->capture_default_str();
  estimate->add_option("--out", est.out, "Output spectrogram CSV")->required();
  estimate->add_option("--pgm", est.pgm, "Optional grayscale image (binary PGM)");

  FeaturizeArgs feat;
  auto* featurize = app.add_subcommand("featurize", "Average R-peak-centred spectrograms of an ECG into a 50x50 image");
  featurize->add_option("--input", feat.input, "ECG CSV: value per line or time,value")->required()->check(CLI::ExistingFile);
  featurize->add_option("--fs", feat.seg.fs, "Sampling rate in Hz")->check(CLI::PositiveNumber)->capture_default_str();
  featurize->add_option("--beta", feat.seg.beta, "Samples kept on each side of an R peak")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  featurize->add_option("--delta", feat.seg.delta, "Retry QRS detection when at most this many peaks are found")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  featurize->add_option("--alpha", feat.seg.alpha, "Blanking half-width in samples for the retry")->capture_default_str();
  featurize->add_option("--method", feat.method, "Estimator")->check(CLI::IsMember({"oscks", "fourierks"}))->capture_default_str();
  feat.est.add_to(featurize);
  featurize->add_option("--jobs", feat.jobs, "Worker threads for per-segment estimation")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  featurize->add_option("--out", feat.out, "Output 50x50 CSV")->required();
  featurize->add_option("--pgm", feat.pgm, "Optional grayscale image (binary PGM)");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time the estimators on the simulated signal");
  bench_cmd->add_option("--lengths", bench.lengths, "Signal lengths")->delimiter(',')->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats per cell")->check(CLI::PositiveNumber)->capture_default_str();
  bench_cmd->add_option("--methods", bench.methods, "Methods to time")
      ->delimiter(',')
      ->check(CLI::IsMember({"fourierks", "oscks", "stft"}))
      ->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Noise seed")->capture_default_str();
  bench_cmd->add_option("--out", bench.out, "Output CSV (method,length,repeat,phase,seconds)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (simulate->parsed()) return run_simulate(sim_out, sim_dt, sim_noise, sim_seed);
    if (estimate->parsed()) return run_estimate(est);
    if (featurize->parsed()) return run_featurize(feat);
    if (bench_cmd->parsed()) return run_bench(bench);
  } catch (const sk::TooFewPeaksError& e) {
    std::fprintf(stderr, "error: too few R peaks (%zu found): %s\n", e.found(), e.what());
    return kTooFewPeaks;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kUsage;
}
