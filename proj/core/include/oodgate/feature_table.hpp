#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace oodgate {

using RowMatrixF =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowMatrixD =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Label = std::int32_t;

/// Label carried by OOD samples (all bits set as an i32).
inline constexpr Label kUnlabeled = -1;

enum class TableFormat { kBinaryDump, kCsv };

TableFormat parse_table_format(std::string_view text);
std::string_view to_string(TableFormat format);
/// `.csv` selects CSV, anything else the binary dump.
TableFormat format_from_extension(const std::filesystem::path& path);

/// Per-sample prelogit features, logits and labels exported from a classifier.
///
/// Values are held as IEEE binary32, the on-disk dtype, so a table read back
/// from disk is identical to the one that was written. Tables are immutable;
/// `create` is the only way to build one and it enforces every invariant:
/// n >= 1, d >= 1, c >= 2 whenever logits are present, finite values, and
/// labels in [0, c) or kUnlabeled. When logits are absent (c == 0) labels
/// only need to be nonnegative or kUnlabeled.
class FeatureTable {
 public:
  static FeatureTable create(RowMatrixF features, RowMatrixF logits,
                             std::vector<Label> labels);

  std::size_t n() const noexcept { return labels_.size(); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(features_.cols()); }
  std::size_t c() const noexcept { return static_cast<std::size_t>(logits_.cols()); }
  bool has_logits() const noexcept { return logits_.cols() > 0; }

  const RowMatrixF& features() const noexcept { return features_; }
  const RowMatrixF& logits() const noexcept { return logits_; }
  std::span<const Label> labels() const noexcept { return labels_; }

  /// True when no row carries kUnlabeled.
  bool fully_labeled() const noexcept;

  /// c when logits are present, otherwise one past the largest label.
  std::size_t class_count() const noexcept;

  /// New table holding the given rows, in the given order.
  FeatureTable select_rows(std::span<const std::size_t> rows) const;

  /// Same rows with labels replaced.
  FeatureTable with_labels(std::vector<Label> labels) const;

  friend bool operator==(const FeatureTable& a, const FeatureTable& b);

 private:
  FeatureTable(RowMatrixF features, RowMatrixF logits, std::vector<Label> labels)
      : features_(std::move(features)),
        logits_(std::move(logits)),
        labels_(std::move(labels)) {}

  RowMatrixF features_;
  RowMatrixF logits_;
  std::vector<Label> labels_;
};

/// Bitwise comparison of every payload value.
bool bit_identical(const FeatureTable& a, const FeatureTable& b);

/// OODF binary dump layout (all integers little-endian):
///   0  magic "OODF"      4  u32 version (1)
///   8  u64 n            16  u64 d            24  u64 c (0 without logits)
///   32 u8 dtype (0 = binary32 LE)           33  7 reserved zero bytes
///   40 features n*d, then logits n*c, then labels as i32 (n values).
inline constexpr std::size_t kOodfHeaderBytes = 40;
inline constexpr std::uint32_t kOodfVersion = 1;

std::vector<std::uint8_t> encode_feature_table(const FeatureTable& table);
FeatureTable decode_feature_table(std::span<const std::uint8_t> bytes);

/// CSV with header `label,f0..f{d-1},l0..l{c-1}`; floats printed with 9
/// significant digits, which round-trips binary32.
std::string encode_feature_table_csv(const FeatureTable& table);
FeatureTable decode_feature_table_csv(std::string_view text);

FeatureTable read_feature_table(const std::filesystem::path& path,
                                TableFormat format);
void write_feature_table(const FeatureTable& table,
                         const std::filesystem::path& path,
                         TableFormat format = TableFormat::kBinaryDump);

/// Rows stacked in argument order. All parts must share d and c.
FeatureTable concatenate(std::span<const FeatureTable> parts);

// Shared by the binary containers (OODF, OODM).
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace oodgate
