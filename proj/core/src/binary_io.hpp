#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oodgate/errors.hpp"

namespace oodgate::detail {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

class ByteWriter {
 public:
  void bytes(std::string_view raw) {
    out_.insert(out_.end(), raw.begin(), raw.end());
  }
  template <typename T>
  void scalar(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void zeros(std::size_t count) { out_.insert(out_.end(), count, 0); }
  template <typename T>
  void array(const T* data, std::size_t count) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + count * sizeof(T));
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  ByteReader(std::span<const std::uint8_t> bytes, std::string_view what)
      : bytes_(bytes), what_(what) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  std::string_view bytes(std::size_t count) {
    need(count);
    std::string_view view(reinterpret_cast<const char*>(bytes_.data() + pos_), count);
    pos_ += count;
    return view;
  }
  template <typename T>
  T scalar() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  template <typename T>
  void array(T* out, std::size_t count) {
    need(count * sizeof(T));
    std::memcpy(out, bytes_.data() + pos_, count * sizeof(T));
    pos_ += count * sizeof(T);
  }

 private:
  void need(std::size_t count) const {
    if (remaining() < count) {
      throw ValidationError(std::string(what_) + ": truncated at byte " +
                            std::to_string(pos_));
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::string_view what_;
  std::size_t pos_ = 0;
};

}  // namespace oodgate::detail
