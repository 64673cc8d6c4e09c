// Shared plumbing: error types, deterministic RNG, hashing, binary IO,
// number formatting. Everything downstream assumes these are reproducible
// across runs on the same platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pmxplain {

// Thrown for bad configs, bad inputs, misuse of a public contract.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for failures at run time (IO, fingerprint mismatch, labeling).
// The CLI maps this to exit code 2.
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LabelingError : public RuntimeError {
 public:
  using RuntimeError::RuntimeError;
};

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937 + std:: distributions are not pinned by the
// standard, so all randomness in the library goes through this splitmix64
// generator and the helpers below. Same seed, same stream, everywhere.
// ---------------------------------------------------------------------------

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits.
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t next_below(uint64_t n) {
    // Multiply-shift; bias is negligible for the n used here and the
    // result is platform-independent.
    return uint64_t((__uint128_t(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller (no cached spare: keeps the stream
  // position a pure function of the call count).
  double next_gaussian() {
    double u1 = next_double(), u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = size_t(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derives an independent seed from (a, b); used for per-trace and
  // per-permutation streams so parallel schedules cannot change results.
  static uint64_t mix(uint64_t a, uint64_t b) {
    uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  uint64_t state_;
};

// ---------------------------------------------------------------------------
// FNV-1a 64-bit, used for schema fingerprints and artifact manifests.
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(const void* data, size_t len,
                        uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

// Incremental hasher for structured fingerprints.
class HashAccum {
 public:
  void add_bytes(const void* data, size_t len) { h_ = fnv1a64(data, len, h_); }
  void add(const std::string& s) {
    add_u64(s.size());
    add_bytes(s.data(), s.size());
  }
  void add_u64(uint64_t v) { add_bytes(&v, sizeof v); }
  void add_i64(int64_t v) { add_bytes(&v, sizeof v); }
  void add_double(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    add_u64(bits);
  }
  uint64_t digest() const { return h_; }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

inline std::string format_g(double v, int precision = 10) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

inline std::string hex64(uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// File IO
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write file: " + path);
  out.write(content.data(), std::streamsize(content.size()));
  if (!out) throw RuntimeError("short write: " + path);
}

// Binary stream helpers (native little-endian layout; the cache and model
// files are per-machine artifacts, not interchange formats).

inline void write_u8(std::ostream& os, uint8_t v) {
  os.write(reinterpret_cast<const char*>(&v), 1);
}
inline void write_u32(std::ostream& os, uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), 4);
}
inline void write_u64(std::ostream& os, uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_i64(std::ostream& os, int64_t v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_f64(std::ostream& os, double v) {
  os.write(reinterpret_cast<const char*>(&v), 8);
}
inline void write_str(std::ostream& os, const std::string& s) {
  write_u64(os, s.size());
  os.write(s.data(), std::streamsize(s.size()));
}

inline void read_raw(std::istream& is, void* p, size_t n, const char* what) {
  is.read(static_cast<char*>(p), std::streamsize(n));
  if (!is) throw RuntimeError(std::string("truncated stream while reading ") + what);
}
inline uint8_t read_u8(std::istream& is) {
  uint8_t v;
  read_raw(is, &v, 1, "u8");
  return v;
}
inline uint32_t read_u32(std::istream& is) {
  uint32_t v;
  read_raw(is, &v, 4, "u32");
  return v;
}
inline uint64_t read_u64(std::istream& is) {
  uint64_t v;
  read_raw(is, &v, 8, "u64");
  return v;
}
inline int64_t read_i64(std::istream& is) {
  int64_t v;
  read_raw(is, &v, 8, "i64");
  return v;
}
inline double read_f64(std::istream& is) {
  double v;
  read_raw(is, &v, 8, "f64");
  return v;
}
inline std::string read_str(std::istream& is) {
  uint64_t n = read_u64(is);
  if (n > (1ull << 32)) throw RuntimeError("implausible string length in stream");
  std::string s(size_t(n), '\0');
  if (n) read_raw(is, s.data(), size_t(n), "string");
  return s;
}

}  // namespace pmxplain
