#pragma once

// Little-endian raw binary writer/reader used by the graph, model and
// embedding containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <type_traits>
#include <vector>

#include "mgsagc/error.hpp"

namespace mgsagc::detail {

static_assert(std::endian::native == std::endian::little, "binary containers assume a little-endian host");

class ByteWriter {
 public:
  template <class T>
    requires std::is_trivially_copyable_v<T>
  void put(const T& v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.append(p, sizeof(T));
  }

  template <class T>
  void put_array(const T* data, std::size_t n) {
    buf_.append(reinterpret_cast<const char*>(data), n * sizeof(T));
  }

  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf_.append(s);
  }

  void put_magic(const char (&m)[5]) { buf_.append(m, 4); }

  std::string take() { return std::move(buf_); }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
    requires std::is_trivially_copyable_v<T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  template <class T>
  void get_array(T* out, std::size_t n) {
    if (n > remaining() / sizeof(T)) throw Error(ErrorCode::Corrupt, "corrupt file: truncated array");
    std::memcpy(out, bytes_.data() + pos_, n * sizeof(T));
    pos_ += n * sizeof(T);
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void expect_magic(const char (&m)[5], const char* what) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0)
      throw Error(ErrorCode::Corrupt, std::string("corrupt file: not a ") + what);
    pos_ += 4;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (n > remaining()) throw Error(ErrorCode::Corrupt, "corrupt file: truncated");
  }

  const std::string& bytes_;
  std::size_t pos_ = 0;
};

std::string read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const std::string& bytes);

}  // namespace mgsagc::detail
