#pragma once

// Little-endian byte packing shared by the dataset and model formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace impostor::detail {

class ByteWriter {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    buffer_.insert(buffer_.end(), p, p + n);
  }
  void tag(std::string_view four_cc) { bytes(four_cc.data(), four_cc.size()); }

  template <class T>
  void scalar(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    bytes(raw, sizeof(T));
  }
  void u8(std::uint8_t v) { scalar(v); }
  void u16(std::uint16_t v) { scalar(v); }
  void u32(std::uint32_t v) { scalar(v); }
  void f32(float v) { scalar(v); }
  void f64(double v) { scalar(v); }

  const std::vector<std::uint8_t>& buffer() const noexcept { return buffer_; }

 private:
  std::vector<std::uint8_t> buffer_;
};

/// Reads from a byte buffer; every accessor reports truncation by returning false.
class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t offset() const noexcept { return offset_; }
  std::size_t remaining() const noexcept { return size_ - offset_; }

  bool bytes(void* out, std::size_t n) {
    if (remaining() < n) return false;
    std::memcpy(out, data_ + offset_, n);
    offset_ += n;
    return true;
  }

  template <class T>
  bool scalar(T& out) {
    std::uint8_t raw[sizeof(T)];
    if (!bytes(raw, sizeof(T))) return false;
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    std::memcpy(&out, raw, sizeof(T));
    return true;
  }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t offset_ = 0;
};

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace impostor::detail
