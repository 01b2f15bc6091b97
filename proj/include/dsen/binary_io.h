#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsen {

// Malformed or truncated binary content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Header declares a format version this build does not read.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Appends fixed-width little-endian values to a byte buffer.
class BinaryWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F64(double v);
  void Bytes(std::string_view s) { bytes_.append(s); }
  // u32 length followed by the bytes.
  void String(std::string_view s);
  void F64Array(const std::vector<double>& values);

  const std::string& bytes() const { return bytes_; }
  std::string Release() { return std::move(bytes_); }

 private:
  std::string bytes_;
};

// Reads what BinaryWriter writes; every short read raises FormatError naming
// the byte offset.
class BinaryReader {
 public:
  explicit BinaryReader(std::string_view bytes) : bytes_(bytes) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  double F64();
  std::string_view Bytes(std::size_t n);
  std::string String();
  std::vector<double> F64Array();

  std::size_t offset() const { return offset_; }
  bool AtEnd() const { return offset_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - offset_; }

 private:
  void Need(std::size_t n, const char* what);

  std::string_view bytes_;
  std::size_t offset_ = 0;
};

std::string ReadFile(const std::string& path);
void WriteFile(const std::string& path, std::string_view bytes);

}  // namespace dsen
