// Copyright 2026 The hgt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives shared by the HGEB and HGCK formats.

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "hgt/error.hpp"

namespace hgt::detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_f32(std::string& buf, double v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

inline std::uint32_t decode_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

// Cursor over an in-memory byte buffer. Running past the end throws the
// error type chosen by the caller.
template <class Err>
class Reader {
 public:
  Reader(const std::string& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

  std::size_t remaining() const { return end_ - pos_; }
  std::size_t position() const { return pos_; }

  std::uint32_t u32(const char* what) {
    need(4, what);
    const auto v = decode_u32(reinterpret_cast<const unsigned char*>(bytes_.data() + pos_));
    pos_ += 4;
    return v;
  }

  double f32(const char* what) {
    return static_cast<double>(std::bit_cast<float>(u32(what)));
  }

  std::string raw(std::size_t n, const char* what) {
    need(n, what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Err(std::string("truncated payload while reading ") + what);
    }
  }

 private:
  const std::string& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

inline std::string slurp(std::istream& in) {
  std::string s{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return s;
}

}  // namespace hgt::detail
