#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "spectrokal/errors.hpp"

namespace spectrokal {

/// Frequency-by-time magnitude matrix. Row j holds frequency freqs[j],
/// column k holds time times[k].
struct SpectroTemporalMatrix {
  Eigen::MatrixXd values;
  std::vector<double> freqs;
  std::vector<double> times;
  double dt = 1.0;                 // nominal column spacing (s)
  std::size_t burn_in_cols = 0;    // leading columns still in the filter transient

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }

  void check() const {
    if (static_cast<Eigen::Index>(freqs.size()) != values.rows()) {
      throw ConfigurationError("frequency axis length differs from row count");
    }
    if (!times.empty() && static_cast<Eigen::Index>(times.size()) != values.cols()) {
      throw ConfigurationError("time axis length differs from column count");
    }
    for (std::size_t j = 1; j < freqs.size(); ++j) {
      if (!(freqs[j] > freqs[j - 1])) throw ConfigurationError("frequencies must be ascending");
    }
    if ((values.array() < 0.0).any()) throw ConfigurationError("magnitudes must be nonnegative");
  }
};

inline constexpr Eigen::Index kFeatureSize = 50;

/// Averaged, max-masked and block-resized feature image.
struct FeatureMatrix {
  Eigen::MatrixXd values;
};

/// Positions of the (a_j, b_j) coefficient pair for each output row.
struct CoefficientLayout {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;

  std::size_t size() const { return pairs.size(); }

  /// [a0, a1..aM, b1..bM]
  static CoefficientLayout fourier(std::size_t harmonics) {
    CoefficientLayout l;
    const auto m = static_cast<Eigen::Index>(harmonics);
    for (Eigen::Index j = 1; j <= m; ++j) l.pairs.emplace_back(j, m + j);
    return l;
  }

  /// [bias, x^1_1, x^1_2, x^2_1, x^2_2, ...]
  static CoefficientLayout oscillator(std::size_t oscillators) {
    CoefficientLayout l;
    const auto m = static_cast<Eigen::Index>(oscillators);
    for (Eigen::Index j = 0; j < m; ++j) l.pairs.emplace_back(1 + 2 * j, 2 + 2 * j);
    return l;
  }
};

/// [S]_{j,k} = sqrt(a_j(t_k)^2 + b_j(t_k)^2); fills values only.
inline SpectroTemporalMatrix magnitude_from_coefficients(std::span<const Eigen::VectorXd> means,
                                                         const CoefficientLayout& layout) {
  SpectroTemporalMatrix s;
  const auto rows = static_cast<Eigen::Index>(layout.size());
  const auto cols = static_cast<Eigen::Index>(means.size());
  s.values.resize(rows, cols);
  for (Eigen::Index k = 0; k < cols; ++k) {
    const Eigen::VectorXd& m = means[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < rows; ++j) {
      const auto [ia, ib] = layout.pairs[static_cast<std::size_t>(j)];
      if (ia < 0 || ib < 0 || ia >= m.size() || ib >= m.size()) {
        throw ConfigurationError("coefficient layout index out of bounds for row " +
                                 std::to_string(j));
      }
      s.values(j, k) = std::hypot(m[ia], m[ib]);
    }
  }
  return s;
}

/// Elementwise (mean over inputs) * (max over inputs). Metadata comes from
/// the first matrix. Summation runs in input order.
inline SpectroTemporalMatrix average_with_max_mask(std::span<const SpectroTemporalMatrix> matrices) {
  if (matrices.empty()) throw PreconditionError("average_with_max_mask: no matrices");
  const auto& first = matrices.front();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.rows(), first.cols());
  Eigen::MatrixXd mask = first.values;
  for (const auto& s : matrices) {
    if (s.rows() != first.rows() || s.cols() != first.cols()) {
      throw PreconditionError("average_with_max_mask: shape mismatch");
    }
    sum += s.values;
    mask = mask.cwiseMax(s.values);
  }
  SpectroTemporalMatrix out = first;
  out.values = (sum / static_cast<double>(matrices.size())).cwiseProduct(mask);
  return out;
}

struct Bin {
  Eigen::Index start;
  Eigen::Index length;
};

/// Split `in` indices into `out` contiguous bins as equal as possible; the
/// leading in % out bins get one extra index.
inline std::vector<Bin> block_bins(Eigen::Index in, Eigen::Index out) {
  if (out <= 0 || in < out) throw ConfigurationError("cannot split " + std::to_string(in) +
                                                     " indices into " + std::to_string(out) + " bins");
  std::vector<Bin> bins;
  bins.reserve(static_cast<std::size_t>(out));
  const Eigen::Index base = in / out;
  const Eigen::Index extra = in % out;
  Eigen::Index start = 0;
  for (Eigen::Index b = 0; b < out; ++b) {
    const Eigen::Index len = base + (b < extra ? 1 : 0);
    bins.push_back({start, len});
    start += len;
  }
  return bins;
}

/// Down-sample by averaging contiguous blocks.
inline FeatureMatrix resize_block_mean(const SpectroTemporalMatrix& matrix,
                                       Eigen::Index out_rows = kFeatureSize,
                                       Eigen::Index out_cols = kFeatureSize) {
  if (matrix.rows() < out_rows || matrix.cols() < out_cols) {
    throw ConfigurationError("matrix " + std::to_string(matrix.rows()) + "x" +
                             std::to_string(matrix.cols()) + " is smaller than the " +
                             std::to_string(out_rows) + "x" + std::to_string(out_cols) + " output");
  }
  const auto row_bins = block_bins(matrix.rows(), out_rows);
  const auto col_bins = block_bins(matrix.cols(), out_cols);
  FeatureMatrix f;
  f.values.resize(out_rows, out_cols);
  for (Eigen::Index i = 0; i < out_rows; ++i) {
    const Bin& rb = row_bins[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < out_cols; ++j) {
      const Bin& cb = col_bins[static_cast<std::size_t>(j)];
      f.values(i, j) = matrix.values.block(rb.start, cb.start, rb.length, cb.length).mean();
    }
  }
  return f;
}

}  // namespace spectrokal
