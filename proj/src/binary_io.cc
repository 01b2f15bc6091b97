#include "dsen/binary_io.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace dsen {

void BinaryWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void BinaryWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::String(std::string_view s) {
  U32(static_cast<std::uint32_t>(s.size()));
  bytes_.append(s);
}

void BinaryWriter::F64Array(const std::vector<double>& values) {
  U64(values.size());
  for (double v : values) F64(v);
}

void BinaryReader::Need(std::size_t n, const char* what) {
  if (bytes_.size() - offset_ < n) {
    std::ostringstream os;
    os << "truncated input at offset " << offset_ << ": need " << n << " bytes for "
       << what << ", " << (bytes_.size() - offset_) << " available";
    throw FormatError(os.str());
  }
}

std::uint8_t BinaryReader::U8() {
  Need(1, "u8");
  return static_cast<std::uint8_t>(bytes_[offset_++]);
}

std::uint32_t BinaryReader::U32() {
  Need(4, "u32");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[offset_ + i]))
         << (8 * i);
  }
  offset_ += 4;
  return v;
}

std::uint64_t BinaryReader::U64() {
  Need(8, "u64");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[offset_ + i]))
         << (8 * i);
  }
  offset_ += 8;
  return v;
}

double BinaryReader::F64() { return std::bit_cast<double>(U64()); }

std::string_view BinaryReader::Bytes(std::size_t n) {
  Need(n, "byte block");
  std::string_view out = bytes_.substr(offset_, n);
  offset_ += n;
  return out;
}

std::string BinaryReader::String() {
  const std::uint32_t n = U32();
  return std::string(Bytes(n));
}

std::vector<double> BinaryReader::F64Array() {
  const std::uint64_t n = U64();
  Need(n > (bytes_.size() - offset_) / 8 ? bytes_.size() - offset_ + 1 : n * 8, "f64 array");
  std::vector<double> out(n);
  for (auto& v : out) v = F64();
  return out;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void WriteFile(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace dsen
