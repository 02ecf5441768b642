#include "common.hpp"

#include <cstdio>
#include <cstring>

namespace mpadnn {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fnv1a64_hex(const void* data, std::size_t len) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(data, len)));
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[40];
  // %.17g round-trips every double; trim to the shortest form that does.
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) break;
  }
  return std::string(buf);
}

}  // namespace mpadnn
