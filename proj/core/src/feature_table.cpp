#include "oodgate/feature_table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstring>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "oodgate/errors.hpp"

namespace oodgate {
namespace {

void check_finite(const RowMatrixF& m, std::string_view what) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        throw ValidationError(fmt::format("non-finite {} value at row {}, column {}",
                                          what, i, j));
      }
    }
  }
}

// Overflow-safe a*b*elem <= limit.
bool product_fits(std::uint64_t a, std::uint64_t b, std::uint64_t limit) {
  if (a == 0 || b == 0) return true;
  return a <= limit / b;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

TableFormat parse_table_format(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "oodf" || lower == "binary" || lower == "binary_dump") {
    return TableFormat::kBinaryDump;
  }
  if (lower == "csv") return TableFormat::kCsv;
  throw ValidationError(fmt::format("unknown table format '{}'", text));
}

std::string_view to_string(TableFormat format) {
  return format == TableFormat::kCsv ? "CSV" : "OODF";
}

TableFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext == ".csv" ? TableFormat::kCsv : TableFormat::kBinaryDump;
}

FeatureTable FeatureTable::create(RowMatrixF features, RowMatrixF logits,
                                  std::vector<Label> labels) {
  const auto n = labels.size();
  if (n == 0) throw ValidationError("feature table must have n >= 1 rows");
  if (features.cols() < 1) throw ValidationError("feature table must have d >= 1");
  if (static_cast<std::size_t>(features.rows()) != n) {
    throw ValidationError(fmt::format("features have {} rows but there are {} labels",
                                      features.rows(), n));
  }
  if (logits.cols() > 0) {
    if (logits.cols() < 2) throw ValidationError("logits require c >= 2 classes");
    if (static_cast<std::size_t>(logits.rows()) != n) {
      throw ValidationError(fmt::format("logits have {} rows but there are {} labels",
                                        logits.rows(), n));
    }
  } else {
    logits.resize(static_cast<Eigen::Index>(n), 0);
  }
  check_finite(features, "feature");
  check_finite(logits, "logit");
  const auto c = static_cast<Label>(logits.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const Label y = labels[i];
    if (y == kUnlabeled) continue;
    if (y < 0 || (c > 0 && y >= c)) {
      throw ValidationError(fmt::format("label out of range at row {}: {} (c = {})", i,
                                        y, c));
    }
  }
  return FeatureTable(std::move(features), std::move(logits), std::move(labels));
}

bool FeatureTable::fully_labeled() const noexcept {
  return std::none_of(labels_.begin(), labels_.end(),
                      [](Label y) { return y == kUnlabeled; });
}

std::size_t FeatureTable::class_count() const noexcept {
  if (has_logits()) return c();
  Label top = -1;
  for (Label y : labels_) top = std::max(top, y);
  return static_cast<std::size_t>(top + 1);
}

FeatureTable FeatureTable::select_rows(std::span<const std::size_t> rows) const {
  RowMatrixF f(static_cast<Eigen::Index>(rows.size()), features_.cols());
  RowMatrixF l(static_cast<Eigen::Index>(rows.size()), logits_.cols());
  std::vector<Label> y(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto src = static_cast<Eigen::Index>(rows[k]);
    const auto dst = static_cast<Eigen::Index>(k);
    f.row(dst) = features_.row(src);
    if (l.cols() > 0) l.row(dst) = logits_.row(src);
    y[k] = labels_[rows[k]];
  }
  return create(std::move(f), std::move(l), std::move(y));
}

FeatureTable FeatureTable::with_labels(std::vector<Label> labels) const {
  return create(features_, logits_, std::move(labels));
}

bool operator==(const FeatureTable& a, const FeatureTable& b) {
  if (a.n() != b.n() || a.d() != b.d() || a.c() != b.c()) return false;
  return a.features_ == b.features_ && a.logits_ == b.logits_ && a.labels_ == b.labels_;
}

bool bit_identical(const FeatureTable& a, const FeatureTable& b) {
  if (a.n() != b.n() || a.d() != b.d() || a.c() != b.c()) return false;
  const auto same = [](const RowMatrixF& x, const RowMatrixF& y) {
    return std::memcmp(x.data(), y.data(), sizeof(float) * x.size()) == 0;
  };
  return same(a.features(), b.features()) && same(a.logits(), b.logits()) &&
         std::equal(a.labels().begin(), a.labels().end(), b.labels().begin());
}

std::vector<std::uint8_t> encode_feature_table(const FeatureTable& table) {
  detail::ByteWriter w;
  w.bytes("OODF");
  w.scalar<std::uint32_t>(kOodfVersion);
  w.scalar<std::uint64_t>(table.n());
  w.scalar<std::uint64_t>(table.d());
  w.scalar<std::uint64_t>(table.c());
  w.scalar<std::uint8_t>(0);
  w.zeros(7);
  w.array(table.features().data(), static_cast<std::size_t>(table.features().size()));
  w.array(table.logits().data(), static_cast<std::size_t>(table.logits().size()));
  w.array(table.labels().data(), table.labels().size());
  return w.take();
}

FeatureTable decode_feature_table(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes, "OODF");
  if (r.bytes(4) != "OODF") throw ValidationError("OODF: bad magic");
  const auto version = r.scalar<std::uint32_t>();
  if (version != kOodfVersion) {
    throw ValidationError(fmt::format("OODF: unsupported version {}", version));
  }
  const auto n = r.scalar<std::uint64_t>();
  const auto d = r.scalar<std::uint64_t>();
  const auto c = r.scalar<std::uint64_t>();
  const auto dtype = r.scalar<std::uint8_t>();
  if (dtype != 0) throw ValidationError(fmt::format("OODF: unsupported dtype {}", dtype));
  for (char ch : r.bytes(7)) {
    if (ch != 0) throw ValidationError("OODF: reserved header bytes must be zero");
  }
  if (n == 0) throw ValidationError("OODF: header declares n = 0");
  if (d == 0) throw ValidationError("OODF: header declares d = 0");
  if (c == 1) throw ValidationError("OODF: header declares c = 1");
  const std::uint64_t limit = r.remaining() / 4;
  if (!product_fits(n, d + c + 1, limit) || n * (d + c + 1) != limit ||
      r.remaining() % 4 != 0) {
    throw ValidationError(fmt::format(
        "OODF: dimension mismatch, header n={} d={} c={} but payload has {} bytes", n, d,
        c, r.remaining()));
  }
  RowMatrixF features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  RowMatrixF logits(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  std::vector<Label> labels(n);
  r.array(features.data(), n * d);
  r.array(logits.data(), n * c);
  r.array(labels.data(), n);
  return FeatureTable::create(std::move(features), std::move(logits), std::move(labels));
}

std::string encode_feature_table_csv(const FeatureTable& table) {
  std::string out = "label";
  for (std::size_t j = 0; j < table.d(); ++j) out += fmt::format(",f{}", j);
  for (std::size_t j = 0; j < table.c(); ++j) out += fmt::format(",l{}", j);
  out += '\n';
  const auto& f = table.features();
  const auto& l = table.logits();
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    out += std::to_string(table.labels()[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < f.cols(); ++j) out += fmt::format(",{:.9g}", f(i, j));
    for (Eigen::Index j = 0; j < l.cols(); ++j) out += fmt::format(",{:.9g}", l(i, j));
    out += '\n';
  }
  return out;
}

FeatureTable decode_feature_table_csv(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    if (!line.empty()) lines.push_back(line);
    start = end + 1;
  }
  if (lines.empty()) throw ValidationError("CSV: missing header");

  const auto header = split_commas(lines.front());
  if (header.empty() || header[0] != "label") {
    throw ValidationError("CSV: malformed header, first column must be 'label'");
  }
  std::size_t d = 0;
  std::size_t c = 0;
  for (std::size_t k = 1; k < header.size(); ++k) {
    const auto name = header[k];
    const bool is_feature = !name.empty() && name[0] == 'f';
    const bool is_logit = !name.empty() && name[0] == 'l';
    const auto expected = is_feature ? d : c;
    if ((!is_feature && !is_logit) || (is_feature && c > 0) ||
        name.substr(1) != std::to_string(expected)) {
      throw ValidationError(fmt::format("CSV: malformed header at column '{}'", name));
    }
    (is_feature ? d : c) += 1;
  }
  const std::size_t n = lines.size() - 1;
  if (n == 0) throw ValidationError("CSV: no data rows");

  RowMatrixF features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  RowMatrixF logits(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  std::vector<Label> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto fields = split_commas(lines[i + 1]);
    if (fields.size() != header.size()) {
      throw ValidationError(fmt::format(
          "CSV: dimension mismatch at row {}: expected {} fields, found {}", i,
          header.size(), fields.size()));
    }
    const auto bad = [&](std::size_t col) {
      return ValidationError(
          fmt::format("CSV: unparsable value '{}' at row {}, column {}", fields[col], i, col));
    };
    {
      const auto f = fields[0];
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), labels[i]);
      if (ec != std::errc{} || p != f.data() + f.size()) throw bad(0);
    }
    for (std::size_t k = 1; k < fields.size(); ++k) {
      const auto f = fields[k];
      float value = 0.0F;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || p != f.data() + f.size()) throw bad(k);
      const auto row = static_cast<Eigen::Index>(i);
      if (k <= d) {
        features(row, static_cast<Eigen::Index>(k - 1)) = value;
      } else {
        logits(row, static_cast<Eigen::Index>(k - 1 - d)) = value;
      }
    }
  }
  return FeatureTable::create(std::move(features), std::move(logits), std::move(labels));
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(fmt::format("error reading '{}'", path.string()));
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(fmt::format("error writing '{}'", path.string()));
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                   text.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

FeatureTable read_feature_table(const std::filesystem::path& path, TableFormat format) {
  if (!std::filesystem::exists(path)) {
    throw IoError(fmt::format("no such file '{}'", path.string()));
  }
  try {
    if (format == TableFormat::kCsv) return decode_feature_table_csv(read_text_file(path));
    return decode_feature_table(read_file_bytes(path));
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_feature_table(const FeatureTable& table, const std::filesystem::path& path,
                         TableFormat format) {
  if (format == TableFormat::kCsv) {
    write_text_file(path, encode_feature_table_csv(table));
  } else {
    write_file_bytes(path, encode_feature_table(table));
  }
}

FeatureTable concatenate(std::span<const FeatureTable> parts) {
  if (parts.empty()) throw ValidationError("concatenate: no tables");
  const auto d = parts[0].d();
  const auto c = parts[0].c();
  std::size_t n = 0;
  for (const auto& t : parts) {
    if (t.d() != d || t.c() != c) {
      throw ValidationError("concatenate: tables disagree on feature or class dimension");
    }
    n += t.n();
  }
  RowMatrixF f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  RowMatrixF l(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  std::vector<Label> y;
  y.reserve(n);
  Eigen::Index at = 0;
  for (const auto& t : parts) {
    const auto rows = static_cast<Eigen::Index>(t.n());
    f.middleRows(at, rows) = t.features();
    if (c > 0) l.middleRows(at, rows) = t.logits();
    y.insert(y.end(), t.labels().begin(), t.labels().end());
    at += rows;
  }
  return FeatureTable::create(std::move(f), std::move(l), std::move(y));
}

}  // namespace oodgate
