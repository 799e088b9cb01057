#ifndef HOSPMORT_HASH_HPP
#define HOSPMORT_HASH_HPP

#include <bit>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace hospmort {

// 64-bit FNV-1a, used for spec, data and config fingerprints.
class Fnv1a {
 public:
  void add_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
  }
  void add(std::string_view s) {
    add_bytes(s.data(), s.size());
    add_bytes("\x1f", 1);
  }
  void add(long v) { add_bytes(&v, sizeof v); }
  void add(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    add_bytes(&bits, sizeof bits);
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex_digest(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hospmort

#endif  // HOSPMORT_HASH_HPP
