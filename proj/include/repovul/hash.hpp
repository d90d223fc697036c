#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace repovul {

// 64-bit FNV-1a; stable across platforms and runs.
class Fnv1a {
 public:
  Fnv1a& add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  // Field separator so ("ab","c") and ("a","bc") differ.
  Fnv1a& field(std::string_view bytes) {
    add(bytes);
    return add(std::string_view("\x1f", 1));
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state_));
    return buf;
  }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace repovul
