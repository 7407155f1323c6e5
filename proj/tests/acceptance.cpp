// Acceptance checks. Prints one line per criterion and exits nonzero if any
// checked criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Eigenvalues>

#include "spectrokal/spectrokal.hpp"
#include "support/fixtures.hpp"

namespace sk = spectrokal;
namespace fx = spectrokal::testing;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Shared by criteria 1 and 2.
struct SimulatedRun {
  sk::PiecewiseSinusoidSpec truth = sk::PiecewiseSinusoidSpec::standard();
  sk::TimedSignal signal = sk::generate_simulated(truth);
  sk::SimulationEstimatorParams params;
  sk::SpectroTemporalMatrix fourier;
  sk::SpectroTemporalMatrix osc;
  double seconds = 0.0;

  SimulatedRun() {
    const auto t0 = std::chrono::steady_clock::now();
    fourier = sk::estimate_fourierks(signal, params.fourier());
    osc = sk::estimate_oscks(signal, params.oscillator(signal.dt()));
    seconds = seconds_since(t0);
  }
};

Outcome criterion1(const SimulatedRun& run) {
  const double fk = sk::frequency_recovery_score(run.fourier, run.truth, 2, 5.0);
  const double os = sk::frequency_recovery_score(run.osc, run.truth, 2, 5.0);
  return {fk >= 0.9 && os >= 0.9 && run.seconds < 60.0,
          fmt("frequency recovery fourierks=%.3f oscks=%.3f (>= 0.9), %.2f s (< 60 s)", fk, os, run.seconds)};
}

Outcome criterion2(const SimulatedRun& run) {
  const auto n = run.osc.cols();
  const auto trim = static_cast<Eigen::Index>(std::min<std::size_t>(run.osc.burn_in_cols, static_cast<std::size_t>(n / 10)));
  const auto keep = n - 2 * trim;
  const double r = fx::pearson(run.fourier.values.middleCols(trim, keep), run.osc.values.middleCols(trim, keep));
  return {r > 0.95, fmt("pearson(fourierks, oscks)=%.4f (> 0.95) after trimming %ld columns each end", r,
                        static_cast<long>(trim))};
}

Outcome criterion3() {
  auto spec = sk::OscillatorBankSpec::harmonic(1.0, 10, 1.0 / 300.0);
  spec.q_b = 1.0;
  const auto model = sk::build_lti_model(spec);
  const auto gains = sk::solve_dare(model.dense);
  const auto n = model.dim();

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> y(5000);
  for (auto& v : y) v = g(rng);
  const sk::GaussianState prior{VectorXd::Zero(n), MatrixXd::Identity(n, n)};
  const auto trace = sk::kalman_filter(sk::ConstantModel(model.dense), y, prior);
  const auto reference = sk::rts_smoother(trace, sk::ConstantModel(model.dense));
  const auto filtered = sk::stationary_filter(model, gains, y, VectorXd::Zero(n));
  const auto smoothed = sk::stationary_smoother(model, gains, filtered);

  const double gain_err = (trace.gains.back() - gains.k).cwiseAbs().maxCoeff();
  // Mean differences decay with the slowest closed-loop pole of (I - K H) A,
  // not with exp(-lambda dt); wait until that pole has shrunk them by 1e-8.
  const MatrixXd closed = (MatrixXd::Identity(n, n) - gains.k * model.dense.measurement_row) * model.dense.transition;
  const double rho = Eigen::EigenSolver<MatrixXd>(closed, false).eigenvalues().cwiseAbs().maxCoeff();
  const auto burn = static_cast<std::size_t>(std::ceil(std::log(1e-8) / std::log(rho)));
  const auto nominal = static_cast<std::size_t>(std::ceil(5.0 / (spec.lambda * spec.dt)));
  double filter_err = 0.0, smoother_err = 0.0;
  for (std::size_t k = burn; k < y.size(); ++k) {
    filter_err = std::max(filter_err, (filtered[k] - trace.filtered[k].mean).cwiseAbs().maxCoeff());
    if (k + burn < y.size()) {
      smoother_err = std::max(smoother_err, (smoothed[k] - reference[k].mean).cwiseAbs().maxCoeff());
    }
  }
  return {gain_err < 1e-8 && filter_err < 1e-6 && smoother_err < 1e-5,
          fmt("gain diff %.2e (< 1e-8), filter means %.2e (< 1e-6), smoother means %.2e (< 1e-5), burn-in %zu "
              "steps (closed-loop pole %.4f; 5/(lambda dt) would be %zu)",
              gain_err, filter_err, smoother_err, burn, rho, nominal)};
}

Outcome criterion4() {
  auto check = [](const sk::OscillatorBankSpec& spec, double& residual, double& min_eig) {
    const auto model = sk::build_lti_model(spec);
    const auto gains = sk::solve_dare(model.dense);
    residual = sk::dare_residual(model.dense, gains.p_pred);
    min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(gains.p_pred, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    return residual < 1e-9 && min_eig > -1e-10;
  };
  double r_sim = 0, e_sim = 0, r_ecg = 0, e_ecg = 0;
  const bool sim_ok = check(sk::SimulationEstimatorParams{}.oscillator(0.1), r_sim, e_sim);
  const bool ecg_ok = check(sk::OscillatorBankSpec::harmonic(0.1, 400, 1.0 / 300.0), r_ecg, e_ecg);
  const sk::StepModel scalar{MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 1.0),
                             Eigen::RowVectorXd::Constant(1, 1.0), 1.0};
  const double p = sk::solve_dare(scalar).p_pred(0, 0);
  const bool scalar_ok = std::abs(p - 1.132782) < 1e-6;
  return {sim_ok && ecg_ok && scalar_ok,
          fmt("M=50 bank residual %.1e min eig %.1e; M=400 bank residual %.1e min eig %.1e; scalar root %.7f",
              r_sim, e_sim, r_ecg, e_ecg, p)};
}

Outcome criterion5() {
  sk::BenchConfig config;
  config.methods = {sk::BenchMethod::FourierKS, sk::BenchMethod::OscKS};
  config.lengths = {5000};
  config.repeats = 5;
  const auto report = sk::run_benchmark(config);
  const auto fourier = report.summary("fourierks", 5000);
  const auto osc = report.summary("oscks", 5000);
  const auto dare = report.summary("oscks", 5000, "dare");
  const double ratio = fourier.mean / osc.mean;
  return {ratio >= 3.0, fmt("fourierks %.4f s, oscks %.4f s (dare %.4f s), speedup %.1fx (>= 3x)", fourier.mean,
                            osc.mean, dare.mean, ratio)};
}

Outcome criterion6() {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> dim(1, 4), len(1, 20);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = dim(rng);
    const auto steps = static_cast<std::size_t>(len(rng));
    std::vector<sk::StepModel> models;
    for (std::size_t k = 0; k < steps; ++k) models.push_back(fx::random_step_model(rng, n));
    std::vector<double> y(steps);
    for (auto& v : y) v = g(rng);
    const MatrixXd b = MatrixXd::NullaryExpr(n, n, [&] { return g(rng); });
    const sk::GaussianState prior{VectorXd::NullaryExpr(n, [&] { return g(rng); }),
                                  b * b.transpose() + MatrixXd::Identity(n, n)};
    const auto provider = [&](std::size_t k) -> const sk::StepModel& { return models[k]; };
    const auto trace = sk::kalman_filter(provider, y, prior);
    const auto smoothed = sk::rts_smoother(trace, provider);
    const auto full = fx::batch_posterior(models, y, prior, steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const auto partial = fx::batch_posterior(models, y, prior, k + 1);
      worst = std::max({worst, fx::relative_error(trace.filtered[k].mean, partial.means[k]),
                        fx::relative_error(trace.filtered[k].cov, partial.covs[k]),
                        fx::relative_error(smoothed[k].mean, full.means[k]),
                        fx::relative_error(smoothed[k].cov, full.covs[k])});
    }
  }
  return {worst < 1e-6, fmt("worst relative error over 100 random models %.2e (< 1e-6)", worst)};
}

Outcome criterion7() {
  constexpr double fs = 300.0;
  const auto truth = fx::regular_times(0.8, 1.0, 30);
  auto y = fx::synthetic_ecg(truth, fs, 30.5);
  fx::add_burst(y, fs, 1.3, 20.0);
  fx::add_burst(y, fs, 14.3, 20.0);
  const auto plain = fx::count_recovered(sk::pan_tompkins(y, fs).positions, truth, fs, 3);
  const auto retried = fx::count_recovered(sk::iterative_qrs(y, {}).positions, truth, fs, 3);
  const double p = static_cast<double>(plain) / static_cast<double>(truth.size());
  const double r = static_cast<double>(retried) / static_cast<double>(truth.size());
  return {p < 0.5 && r >= 0.9, fmt("pan_tompkins recovers %.0f%% (< 50%%), iterative_qrs %.0f%% (>= 90%%)",
                                   100.0 * p, 100.0 * r)};
}

Outcome criterion8() {
  constexpr double fs = 300.0;
  const auto bank = sk::OscillatorBankSpec::harmonic(0.1, 400, 1.0 / fs);
  sk::FeaturizeOptions opt;
  opt.jobs = std::max(1u, std::thread::hardware_concurrency());
  const auto regular = sk::TimedSignal::uniform(fx::synthetic_ecg(fx::regular_times(0.5, 1.0, 30), fs, 30.0), 1.0 / fs);
  const auto jittered =
      sk::TimedSignal::uniform(fx::synthetic_ecg(fx::jittered_times(0.5, 1.0, 0.3, 30.0, 11), fs, 30.0), 1.0 / fs);
  const auto a = sk::featurize(regular, {}, bank, opt).values;
  const auto b = sk::featurize(jittered, {}, bank, opt).values;

  const VectorXd col_a = a.colwise().mean();
  const VectorXd col_b = b.colwise().mean();
  double other = 0.0;
  for (Eigen::Index c = 0; c < col_a.size(); ++c) {
    if (c != 24) other = std::max(other, col_a[c]);
  }
  const double conc_a = col_a.maxCoeff() / col_a.mean();
  const double conc_b = col_b.maxCoeff() / col_b.mean();
  const bool shape = a.rows() == 50 && a.cols() == 50 && b.rows() == 50 && b.cols() == 50;
  return {shape && col_a[24] > other && conc_b < conc_a,
          fmt("50x50 features; centre column mean / best other %.3f (> 1); concentration regular %.2f vs "
              "jittered %.2f",
              col_a[24] / other, conc_a, conc_b)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const std::function<Outcome()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("criterion %d: %s  %s [%.1f s]\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  };

  const SimulatedRun run;
  report(1, [&] { return criterion1(run); });
  report(2, [&] { return criterion2(run); });
  report(3, criterion3);
  report(4, criterion4);
  report(5, criterion5);
  report(6, criterion6);
  report(7, criterion7);
  report(8, criterion8);
  std::printf("criterion 9: EXCLUDED  classifier F1 scores need the CinC 2017 recordings and a trained network; "
              "covered in substitute by criteria 1-8\n");
  std::printf("%d of 8 checked criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
