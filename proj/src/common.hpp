#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mpadnn {

enum class ErrorCode {
  Io,
  Parse,
  Validation,
  Dimension,
  Infeasible,
  MaxIterations,
  DegenerateActiveSet,
  Config,
  Internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline Error parse_error(const std::string& msg) { return Error(ErrorCode::Parse, msg); }
inline Error validation_error(const std::string& msg) { return Error(ErrorCode::Validation, msg); }
inline Error dimension_error(const std::string& msg) { return Error(ErrorCode::Dimension, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorCode::Io, msg); }
inline Error config_error(const std::string& msg) { return Error(ErrorCode::Config, msg); }

// SplitMix64. Used everywhere randomness must be reproducible across
// platforms and independent of iteration order (per-scenario substreams).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [lo, hi)
  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

 private:
  std::uint64_t state_;
};

// Stable stream derivation: mixes (seed, tags...) so substreams are
// independent of the order they are drawn in.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  Rng mix(seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL));
  return mix.next_u64();
}

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string fnv1a64_hex(const void* data, std::size_t len);

// Shortest round-trip formatting for doubles; used by every writer that
// must be byte-deterministic.
std::string format_double(double v);

}  // namespace mpadnn
