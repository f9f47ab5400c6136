#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tmr {

// Pairwise (cascade) summation: deterministic for a fixed element order and
// better conditioned than a running sum; used for all trial/channel averages.
double pairwise_sum(std::span<const double> v);

inline double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : pairwise_sum(v) / static_cast<double>(v.size());
}

// Sample variance (denominator n-1); 0 for n < 2.
double sample_variance(std::span<const double> v);

// FNV-1a 64-bit over raw bytes; non-cryptographic, used for run-manifest
// digests only.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t h = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

std::string to_lower(std::string s);
std::string trim(const std::string& s);
std::vector<std::string> split(const std::string& s, char sep);

// Runs fn(i) for i in [0, n) on up to n_threads threads with static index
// striding. Work items must be independent; any exception is rethrown on
// the calling thread.
void parallel_for(std::size_t n, int n_threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace tmr
