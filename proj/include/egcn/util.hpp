#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace egcn {

// Log verbosity from the EGCN_LOG environment variable:
// "quiet"/"0", "info"/"1" (default), "debug"/"2".
int log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

// Uniform in [0, 1) with 53 random bits; avoids distribution objects so the
// stream is identical across standard library implementations.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Uniform in [-limit, limit].
inline double uniform_sym(std::mt19937_64& g, double limit) {
  return (2.0 * uniform01(g) - 1.0) * limit;
}

// Standard normal via Box-Muller; consumes exactly two generator draws per
// call, so the stream position is call-count deterministic.
double normal01(std::mt19937_64& g);

// splitmix64 substream derivation: statistically independent seeds for
// worker index `index` under a shared run seed.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t x = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// FNV-1a 64-bit hash; used for input-file digests in run manifests.
std::uint64_t fnv1a(const void* data, std::size_t len,
                    std::uint64_t seed = 14695981039346656037ULL);
std::uint64_t fnv1a_file(const std::string& path);  // throws on unreadable file
std::string hex64(std::uint64_t v);

// Current UTC time as ISO-8601 with seconds, e.g. "2024-05-01T12:30:00Z".
std::string iso_utc_now();

}  // namespace egcn
