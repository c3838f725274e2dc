#include "doctest.h"

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <random>

#include "fixtures.hpp"
#include "oodgate/errors.hpp"
#include "oodgate/feature_table.hpp"

using namespace oodgate;
using oodgate::testing::random_table;
using oodgate::testing::TempDir;

namespace {

FeatureTable small_table() {
  RowMatrixF f(3, 2);
  f << 0.5F, -1.0F, 2.0F, 3.25F, -0.125F, 8.0F;
  RowMatrixF l(3, 2);
  l << 1.0F, 0.0F, 0.0F, 1.0F, 0.5F, 0.5F;
  return FeatureTable::create(f, l, {0, 1, kUnlabeled});
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("binary dump round-trips a 3x2x2 table") {
  TempDir dir("ft");
  const auto table = small_table();
  write_feature_table(table, dir / "t.oodf");
  const auto back = read_feature_table(dir / "t.oodf", TableFormat::kBinaryDump);
  CHECK(back.n() == 3);
  CHECK(back.d() == 2);
  CHECK(back.c() == 2);
  CHECK(bit_identical(table, back));
  CHECK(back.labels()[2] == kUnlabeled);
}

TEST_CASE("header layout and payload size") {
  RowMatrixF f(1, 1);
  f << 0.5F;
  const auto one = FeatureTable::create(f, RowMatrixF(1, 0), {0});
  const auto bytes = encode_feature_table(one);
  // 40-byte header, one binary32 feature, no logits, one i32 label.
  CHECK(bytes.size() == kOodfHeaderBytes + 4 + 4);
  CHECK(std::memcmp(bytes.data(), "OODF", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 1);   // n
  CHECK(bytes[16] == 1);  // d
  CHECK(bytes[24] == 0);  // c
  float stored = 0.0F;
  std::memcpy(&stored, bytes.data() + 40, 4);
  CHECK(stored == 0.5F);

  RowMatrixF l(1, 2);
  l << 1.0F, 2.0F;
  CHECK(encode_feature_table(FeatureTable::create(f, l, {1})).size() == 40 + 4 + 8 + 4);
}

TEST_CASE("non-finite values are rejected naming the row") {
  auto f = random_table(10, 3, 2, 1).features();
  f(7, 1) = std::numeric_limits<float>::quiet_NaN();
  std::vector<Label> y(10, 0);
  const auto msg = message_of([&] { FeatureTable::create(f, RowMatrixF(10, 0), y); });
  CHECK(msg.find("row 7") != std::string::npos);

  // Same through a CSV file on disk.
  TempDir dir("nan");
  auto text = encode_feature_table_csv(random_table(10, 2, 2, 3));
  std::size_t line_start = 0;
  for (int i = 0; i < 8; ++i) line_start = text.find('\n', line_start) + 1;  // header + 7 rows
  const auto comma = text.find(',', line_start);
  text.replace(comma + 1, text.find(',', comma + 1) - comma - 1, "nan");
  write_text_file(dir / "t.csv", text);
  const auto csv_msg = message_of([&] { read_feature_table(dir / "t.csv", TableFormat::kCsv); });
  CHECK(csv_msg.find("row 7") != std::string::npos);
  CHECK_THROWS_AS(read_feature_table(dir / "t.csv", TableFormat::kCsv), ValidationError);
}

TEST_CASE("CSV label equal to c is out of range") {
  const std::string csv = "label,f0,l0,l1\n0,1.5,0,1\n2,0.5,1,0\n";
  const auto msg = message_of([&] { decode_feature_table_csv(csv); });
  CHECK(msg.find("label out of range") != std::string::npos);
}

TEST_CASE("invariants: empty tables, c = 1, dimension mismatches") {
  CHECK_THROWS_AS(FeatureTable::create(RowMatrixF(0, 2), RowMatrixF(0, 0), {}), ValidationError);
  CHECK_THROWS_AS(FeatureTable::create(RowMatrixF::Zero(1, 2), RowMatrixF::Zero(1, 1), {0}),
                  ValidationError);
  CHECK_THROWS_AS(FeatureTable::create(RowMatrixF::Zero(2, 2), RowMatrixF::Zero(1, 2), {0, 1}),
                  ValidationError);
  CHECK_THROWS_AS(FeatureTable::create(RowMatrixF::Zero(1, 0), RowMatrixF(1, 0), {0}),
                  ValidationError);
  CHECK_THROWS_AS(FeatureTable::create(RowMatrixF::Zero(1, 1), RowMatrixF(1, 0), {-3}),
                  ValidationError);
}

TEST_CASE("malformed binary dumps are rejected") {
  auto bytes = encode_feature_table(small_table());

  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_feature_table(bad_magic), ValidationError);

  auto truncated = bytes;
  truncated.pop_back();
  const auto msg = message_of([&] { decode_feature_table(truncated); });
  CHECK(msg.find("dimension mismatch") != std::string::npos);

  auto extra = bytes;
  extra.insert(extra.end(), 4, 0);  // a dangling row fragment must not be ignored
  CHECK_THROWS_AS(decode_feature_table(extra), ValidationError);

  auto huge_n = bytes;
  huge_n[15] = 0x7f;
  CHECK_THROWS_AS(decode_feature_table(huge_n), ValidationError);

  auto dtype = bytes;
  dtype[32] = 1;
  CHECK_THROWS_AS(decode_feature_table(dtype), ValidationError);

  CHECK_THROWS_AS(decode_feature_table(std::vector<std::uint8_t>(10, 0)), ValidationError);
}

TEST_CASE("malformed CSV headers and rows") {
  CHECK_THROWS_AS(decode_feature_table_csv(""), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("f0,label\n1,0\n"), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("label,f1\n0,1\n"), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("label,l0,f0\n0,1,1\n"), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("label,f0\n0,1,2\n"), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("label,f0\n0,abc\n"), ValidationError);
  CHECK_THROWS_AS(decode_feature_table_csv("label,f0\n"), ValidationError);
}

TEST_CASE("missing files raise I/O errors") {
  CHECK_THROWS_AS(read_feature_table("/nonexistent/t.oodf", TableFormat::kBinaryDump), IoError);
}

TEST_CASE("property: binary and CSV round-trips are bit exact for finite binary32") {
  std::mt19937 gen(1234);
  std::uniform_int_distribution<std::uint32_t> bits;
  TempDir dir("prop");
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + gen() % 20;
    const std::size_t d = 1 + gen() % 6;
    const std::size_t c = trial % 3 == 0 ? 0 : 2 + gen() % 4;
    RowMatrixF f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    RowMatrixF l(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
    // Arbitrary finite bit patterns, including subnormals and negative zero.
    const auto draw = [&] {
      float v = 0.0F;
      do {
        const auto b = bits(gen);
        std::memcpy(&v, &b, 4);
      } while (!std::isfinite(v));
      return v;
    };
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = draw();
    for (Eigen::Index i = 0; i < l.size(); ++i) l.data()[i] = draw();
    std::vector<Label> y(n);
    for (auto& v : y) {
      v = c == 0 ? static_cast<Label>(gen() % 5) : static_cast<Label>(gen() % (c + 1)) - 1;
    }
    const auto table = FeatureTable::create(f, l, y);

    write_feature_table(table, dir / "p.oodf");
    CHECK(bit_identical(table, read_feature_table(dir / "p.oodf", TableFormat::kBinaryDump)));
    write_feature_table(table, dir / "p.csv", TableFormat::kCsv);
    CHECK(bit_identical(table, read_feature_table(dir / "p.csv", TableFormat::kCsv)));
  }
}

TEST_CASE("select_rows, with_labels and concatenate") {
  const auto table = random_table(6, 3, 3, 9);
  const std::vector<std::size_t> rows{4, 0};
  const auto picked = table.select_rows(rows);
  CHECK(picked.n() == 2);
  CHECK(picked.features().row(0) == table.features().row(4));
  CHECK(picked.labels()[1] == table.labels()[0]);

  const std::vector<FeatureTable> parts{picked, table};
  const auto joined = concatenate(parts);
  CHECK(joined.n() == 8);
  CHECK(joined.features().row(2) == table.features().row(0));

  CHECK_THROWS_AS(table.with_labels({0, 1}), ValidationError);
  CHECK(table.class_count() == 3);
  CHECK(random_table(6, 2, 4, 1, false).class_count() == 4);
  CHECK(table.fully_labeled());
}

TEST_CASE("format helpers") {
  CHECK(parse_table_format("OODF") == TableFormat::kBinaryDump);
  CHECK(parse_table_format("binary_dump") == TableFormat::kBinaryDump);
  CHECK(parse_table_format("csv") == TableFormat::kCsv);
  CHECK_THROWS_AS(parse_table_format("parquet"), ValidationError);
  CHECK(format_from_extension("a/b.CSV") == TableFormat::kCsv);
  CHECK(format_from_extension("a/b.oodf") == TableFormat::kBinaryDump);
}
