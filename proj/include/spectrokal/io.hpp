#pragma once

// Plain-text formats: signal CSV (value or time,value), spectrogram CSV with
// a one-line metadata header, bare matrix CSV and binary 8-bit PGM images.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "spectrokal/errors.hpp"
#include "spectrokal/spectrogram.hpp"
#include "spectrokal/timed_signal.hpp"

namespace spectrokal::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

/// Split on commas; returns nullopt if any field is not a number.
inline std::optional<std::vector<double>> parse_row(std::string_view line) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    const auto v = parse_double(field);
    if (!v) return std::nullopt;
    out.push_back(*v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> comments;  // '#' lines without the marker
  std::vector<std::vector<double>> rows;
};

/// Numeric CSV. Lines starting with '#' are comments; a single non-numeric
/// first data line is treated as a column header and skipped.
inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = detail::trim(line);
    if (view.empty()) continue;
    if (view.front() == '#') {
      table.comments.emplace_back(detail::trim(view.substr(1)));
      continue;
    }
    auto row = detail::parse_row(view);
    if (!row) {
      if (!seen_data) {
        seen_data = true;
        continue;
      }
      throw IoError("line " + std::to_string(line_no) + ": non-numeric field");
    }
    seen_data = true;
    table.rows.push_back(std::move(*row));
  }
  return table;
}

inline CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return read_csv(in);
}

inline std::ofstream open_for_writing(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  return out;
}

/// One column: samples at interval `dt` (required). Two columns: time, value;
/// uniform if every time is within 1e-3 steps of the even grid (this absorbs
/// 9-digit rounding), otherwise timestamped.
inline TimedSignal read_signal(const CsvTable& table, std::optional<double> dt) {
  if (table.rows.empty()) throw IoError("signal file has no samples");
  const std::size_t cols = table.rows.front().size();
  std::vector<double> values;
  std::vector<double> times;
  values.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    if (r.size() != cols || cols < 1 || cols > 2) {
      throw IoError("signal row " + std::to_string(i + 1) + " must have 1 or 2 columns consistently");
    }
    if (cols == 1) {
      values.push_back(r[0]);
    } else {
      times.push_back(r[0]);
      values.push_back(r[1]);
    }
  }
  if (cols == 1) {
    if (!dt) throw ConfigurationError("single-column signal needs a sampling interval (--dt or --fs)");
    return TimedSignal::uniform(std::move(values), *dt, 0.0);
  }
  if (times.size() >= 2) {
    const double step = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    bool uniform = step > 0.0;
    for (std::size_t k = 1; uniform && k < times.size(); ++k) {
      const double expected = times.front() + static_cast<double>(k) * step;
      if (std::abs(times[k] - expected) > 1e-3 * step) uniform = false;
    }
    if (uniform) return TimedSignal::uniform(std::move(values), step, times.front());
  }
  return TimedSignal::timestamped(std::move(values), std::move(times));
}

inline TimedSignal read_signal_file(const std::string& path, std::optional<double> dt = std::nullopt) {
  return read_signal(read_csv_file(path), dt);
}

inline void write_signal(std::ostream& out, const TimedSignal& signal) {
  for (std::size_t k = 0; k < signal.size(); ++k) {
    out << detail::format_value(signal.time(k)) << ',' << detail::format_value(signal[k]) << '\n';
  }
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << detail::format_value(m(i, j));
    }
    out << '\n';
  }
}

inline Eigen::MatrixXd to_matrix(const CsvTable& table) {
  if (table.rows.empty()) return {};
  const std::size_t cols = table.rows.front().size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != cols) throw IoError("ragged matrix row " + std::to_string(i + 1));
    for (std::size_t j = 0; j < cols; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table.rows[i][j];
    }
  }
  return m;
}

struct SpectrogramHeader {
  std::string method;
  double f0 = 0.0;
  std::size_t rows = 0;
  double dt = 0.0;
  std::size_t burn_in = 0;
};

/// "# method=<m> f0=<f0> M=<M> dt=<dt> burn_in=<b>" then one row per frequency.
inline void write_spectrogram(std::ostream& out, const SpectroTemporalMatrix& s, const std::string& method, double f0) {
  out << "# method=" << method << " f0=" << detail::format_value(f0) << " M=" << s.rows()
      << " dt=" << detail::format_value(s.dt) << " burn_in=" << s.burn_in_cols << '\n';
  write_matrix(out, s.values);
}

inline SpectrogramHeader parse_spectrogram_header(const std::string& comment) {
  SpectrogramHeader h;
  std::map<std::string, std::string> kv;
  std::istringstream is(comment);
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq != std::string::npos) kv[token.substr(0, eq)] = token.substr(eq + 1);
  }
  auto number = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw IoError(std::string("spectrogram header lacks ") + key);
    const auto v = detail::parse_double(it->second);
    if (!v) throw IoError(std::string("spectrogram header field ") + key + " is not numeric");
    return *v;
  };
  if (!kv.contains("method")) throw IoError("spectrogram header lacks method");
  h.method = kv["method"];
  h.f0 = number("f0");
  h.rows = static_cast<std::size_t>(number("M"));
  h.dt = number("dt");
  h.burn_in = static_cast<std::size_t>(number("burn_in"));
  return h;
}

inline SpectroTemporalMatrix read_spectrogram(std::istream& in, SpectrogramHeader* header = nullptr) {
  const CsvTable table = read_csv(in);
  if (table.comments.empty()) throw IoError("spectrogram file lacks its header line");
  const SpectrogramHeader h = parse_spectrogram_header(table.comments.front());
  SpectroTemporalMatrix s;
  s.values = to_matrix(table);
  if (static_cast<std::size_t>(s.values.rows()) != h.rows) throw IoError("spectrogram row count differs from header M");
  s.freqs.resize(h.rows);
  for (std::size_t j = 0; j < h.rows; ++j) s.freqs[j] = static_cast<double>(j + 1) * h.f0;
  s.dt = h.dt;
  s.burn_in_cols = h.burn_in;
  if (header != nullptr) *header = h;
  return s;
}

/// Binary P5, 8 bit, scaled by the matrix maximum. Row 0 of the matrix (the
/// lowest frequency) is drawn at the bottom.
inline void write_pgm(std::ostream& out, const Eigen::MatrixXd& m) {
  const double peak = m.size() > 0 ? m.maxCoeff() : 0.0;
  out << "P5\n" << m.cols() << ' ' << m.rows() << "\n255\n";
  for (Eigen::Index i = m.rows(); i-- > 0;) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = peak > 0.0 ? std::clamp(m(i, j) / peak, 0.0, 1.0) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
    }
  }
}

inline void write_pgm_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_pgm(out, m);
}

}  // namespace spectrokal::io
