#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "matchlab/io.hpp"
#include "support/expect_error.hpp"
#include "support/temp_dir.hpp"

namespace io = matchlab::io;
using matchlab::ErrorCode;

TEST(Csv, TrimsFieldsAndSkipsBlankLines) {
  const auto rows = io::parse_csv(" a , b\n\n1,2 \r\n");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], (io::CsvRow{"a", "b"}));
  EXPECT_EQ(rows[1], (io::CsvRow{"1", "2"}));
}

TEST(Csv, EmptyTrailingFieldIsKept) {
  const auto rows = io::parse_csv("x,,y,\n");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].size(), 4u);
}

TEST(FormatDouble, RoundTripsExactly) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const double v = n(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(io::parse_double(io::format_double(v), "test"), v);
  }
}

TEST(ParseNumbers, RejectsGarbage) {
  EXPECT_ML_ERROR(io::parse_double("1.5x", "test"), ErrorCode::ParseError);
  EXPECT_ML_ERROR(io::parse_double("", "test"), ErrorCode::ParseError);
  EXPECT_ML_ERROR(io::parse_int("2.5", "test"), ErrorCode::ParseError);
  EXPECT_EQ(io::parse_int("-7", "test"), -7);
}

TEST(ParseMatrix, RaggedRowsAreAParseError) {
  EXPECT_ML_ERROR(io::parse_matrix(io::parse_csv("1,2\n3\n"), "test"), ErrorCode::ParseError);
  const auto m = io::parse_matrix(io::parse_csv("1,2\n3,4\n"), "test");
  EXPECT_EQ(m(1, 0), 3.0);
}

TEST(Blob, RoundTripAndHeaderChecks) {
  matchlab::testing::TempDir dir;
  const auto path = dir.path() / "x.bin";
  Eigen::MatrixXd m(2, 3);
  m << 1, 2, 3, 4, 5, 6.5;
  io::write_f32_blob(path, "TEST", {2, 3}, m);
  EXPECT_TRUE(io::has_magic(path, "TEST"));
  const auto blob = io::read_f32_blob(path, "TEST", 2);
  EXPECT_EQ(blob.dims, (std::vector<std::uint32_t>{2, 3}));
  EXPECT_EQ(blob.values[5], 6.5f);
  EXPECT_ML_ERROR(io::read_f32_blob(path, "NOPE", 2), ErrorCode::ParseError);
  EXPECT_ML_ERROR(io::read_text(dir.path() / "missing"), ErrorCode::IoError);
}
