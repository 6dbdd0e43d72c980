#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "error.hpp"

namespace ae2 {

// Little-endian byte-level encoding shared by the binary file formats.
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

// Bounds-checked reader over an in-memory file image; failures report the
// byte offset per the format contract.
class ByteReader {
 public:
  ByteReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::size_t offset() const { return pos_; }

  void need(std::size_t n) {
    if (pos_ + n > data_.size())
      fail(ErrorKind::Data, path_ + ": truncated at byte offset " +
                                std::to_string(pos_) + " (need " + std::to_string(n) +
                                " more bytes)");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data_[pos_ + i]))
           << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  void expect_magic(const char* magic) {
    need(4);
    if (std::memcmp(data_.data() + pos_, magic, 4) != 0)
      fail(ErrorKind::Data, path_ + ": bad magic at byte offset " +
                                std::to_string(pos_) + " (expected " + magic + ")");
    pos_ += 4;
  }
  void expect_end() {
    if (pos_ != data_.size())
      fail(ErrorKind::Data,
           path_ + ": trailing bytes at offset " + std::to_string(pos_));
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Data, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Data, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorKind::Data, "short write to " + path);
}

}  // namespace ae2
