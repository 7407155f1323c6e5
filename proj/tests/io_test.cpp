#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spectrokal/io.hpp"

namespace sk = spectrokal;
namespace io = spectrokal::io;
using Eigen::MatrixXd;

TEST(Csv, CommentsHeaderAndRows) {
  std::istringstream in("# produced by hand\ntime,value\n0,1.5\n0.5, -2e-3\n\n1.0,+4\n");
  const auto table = io::read_csv(in);
  ASSERT_EQ(table.comments.size(), 1u);
  EXPECT_EQ(table.comments[0], "produced by hand");
  ASSERT_EQ(table.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(table.rows[1][1], -2e-3);
  EXPECT_DOUBLE_EQ(table.rows[2][1], 4.0);
}

TEST(Csv, NonNumericDataLineIsError) {
  std::istringstream in("1,2\n3,abc\n");
  EXPECT_THROW(io::read_csv(in), sk::IoError);
}

TEST(Signal, SingleColumnNeedsDt) {
  std::istringstream in("1\n2\n3\n");
  const auto table = io::read_csv(in);
  EXPECT_THROW(io::read_signal(table, std::nullopt), sk::ConfigurationError);
  const auto s = io::read_signal(table, 0.5);
  EXPECT_TRUE(s.is_uniform());
  EXPECT_DOUBLE_EQ(s.time(2), 1.0);
}

TEST(Signal, EvenTimesAreUniformUnevenAreTimestamped) {
  std::istringstream even("10,1\n10.1,2\n10.2,3\n10.3,4\n");
  const auto a = io::read_signal(io::read_csv(even), std::nullopt);
  EXPECT_TRUE(a.is_uniform());
  EXPECT_NEAR(a.dt(), 0.1, 1e-12);
  EXPECT_NEAR(a.time(0), 10.0, 0.0);

  std::istringstream uneven("0,1\n0.1,2\n0.25,3\n0.3,4\n");
  const auto b = io::read_signal(io::read_csv(uneven), std::nullopt);
  EXPECT_FALSE(b.is_uniform());
  EXPECT_DOUBLE_EQ(b.time(2), 0.25);

  std::istringstream backwards("0,1\n0.2,2\n0.1,3\n");
  EXPECT_THROW(io::read_signal(io::read_csv(backwards), std::nullopt), sk::ConfigurationError);
}

TEST(Signal, RoundTrip) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<double> y(257);
  for (auto& v : y) v = g(rng) * 1e3;
  const auto s = sk::TimedSignal::uniform(y, 1.0 / 300.0, 2.0);
  std::stringstream buf;
  io::write_signal(buf, s);
  const auto back = io::read_signal(io::read_csv(buf), std::nullopt);
  ASSERT_EQ(back.size(), s.size());
  EXPECT_TRUE(back.is_uniform());
  for (std::size_t k = 0; k < s.size(); ++k) {
    EXPECT_NEAR(back[k], s[k], 1e-8 * std::abs(s[k]));
    EXPECT_NEAR(back.time(k), s.time(k), 1e-8 * s.time(k));
  }
}

TEST(Spectrogram, RoundTripWithHeader) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  sk::SpectroTemporalMatrix s;
  s.values = MatrixXd::NullaryExpr(7, 40, [&] { return u(rng); });
  s.freqs = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
  s.dt = 1.0 / 300.0;
  s.burn_in_cols = 12;
  std::stringstream buf;
  io::write_spectrogram(buf, s, "oscks", 0.1);
  io::SpectrogramHeader header;
  const auto back = io::read_spectrogram(buf, &header);
  EXPECT_EQ(header.method, "oscks");
  EXPECT_EQ(header.rows, 7u);
  EXPECT_EQ(header.burn_in, 12u);
  EXPECT_NEAR(header.dt, 1.0 / 300.0, 1e-8 / 300.0);
  ASSERT_EQ(back.values.rows(), 7);
  ASSERT_EQ(back.values.cols(), 40);
  EXPECT_LT(((back.values - s.values).array().abs() / s.values.array().abs().max(1e-300)).maxCoeff(), 1e-8);
  EXPECT_NEAR(back.freqs[6], 0.7, 1e-12);
}

TEST(Spectrogram, HeaderErrors) {
  std::istringstream none("1,2\n3,4\n");
  EXPECT_THROW(io::read_spectrogram(none), sk::IoError);
  std::istringstream wrong_rows("# method=stft f0=0.1 M=3 dt=1 burn_in=0\n1,2\n3,4\n");
  EXPECT_THROW(io::read_spectrogram(wrong_rows), sk::IoError);
  EXPECT_THROW(io::parse_spectrogram_header("method=stft f0=x M=3 dt=1 burn_in=0"), sk::IoError);
}

TEST(Pgm, HeaderScalingAndOrientation) {
  MatrixXd m(2, 3);
  m << 0.0, 1.0, 2.0,   // lowest frequency row
      4.0, 3.0, 0.0;
  std::ostringstream out;
  io::write_pgm(out, m);
  const std::string bytes = out.str();
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(bytes.substr(0, header.size()), header);
  ASSERT_EQ(bytes.size(), header.size() + 6);
  auto px = [&](std::size_t i) { return static_cast<unsigned char>(bytes[header.size() + i]); };
  // Top image row is the highest frequency.
  EXPECT_EQ(px(0), 255);
  EXPECT_EQ(px(1), 191);
  EXPECT_EQ(px(2), 0);
  EXPECT_EQ(px(3), 0);
  EXPECT_EQ(px(4), 64);
  EXPECT_EQ(px(5), 128);
}

TEST(Pgm, AllZeroMatrixIsBlack) {
  std::ostringstream out;
  io::write_pgm(out, MatrixXd::Zero(2, 2));
  const std::string bytes = out.str();
  EXPECT_EQ(bytes.substr(bytes.size() - 4), std::string(4, '\0'));
}

TEST(Files, MissingInputIsIoError) {
  EXPECT_THROW(io::read_csv_file("/nonexistent/dir/file.csv"), sk::IoError);
  EXPECT_THROW(io::open_for_writing("/nonexistent/dir/out.csv"), sk::IoError);
}
